#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string_view>

#include <json.hpp>

#include "textdiv/error.hpp"

namespace textdiv {

/// Backend-defined token identity. The mock uses vocabulary indices,
/// HTTP backends use provider token ids.
using TokenId = std::int64_t;
using LogitBias = std::map<TokenId, double>;

inline constexpr double kMaxBias = 100.0;

struct GenerationParams {
  double temperature = 1.0;
  double top_p = 1.0;
  LogitBias logit_bias;
  int max_tokens = 256;
  std::optional<std::uint64_t> seed;

  friend bool operator==(const GenerationParams&, const GenerationParams&) = default;
};

inline void validate(const GenerationParams& p) {
  if (!(p.temperature >= 0.0 && p.temperature <= 2.0))
    throw Error(Errc::invalid_parameter, "temperature must lie in [0, 2]");
  if (!(p.top_p > 0.0 && p.top_p <= 1.0)) throw Error(Errc::invalid_parameter, "top_p must lie in (0, 1]");
  if (p.max_tokens <= 0) throw Error(Errc::invalid_parameter, "max_tokens must be positive");
  for (const auto& [tok, b] : p.logit_bias)
    if (!(b >= -kMaxBias && b <= kMaxBias))
      throw Error(Errc::invalid_parameter, "logit bias for token " + std::to_string(tok) + " outside [-100, 100]");
}

inline nlohmann::json bias_to_json(const LogitBias& bias) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [tok, b] : bias) j[std::to_string(tok)] = b;
  return j;
}

inline LogitBias bias_from_json(const nlohmann::json& j) {
  LogitBias out;
  for (const auto& [k, v] : j.items()) {
    try {
      out[std::stoll(k)] = v.get<double>();
    } catch (const std::exception&) {
      throw Error(Errc::format, "logit_bias keys must be token ids, got '" + k + "'");
    }
  }
  return out;
}

inline void to_json(nlohmann::json& j, const GenerationParams& p) {
  j = nlohmann::json{{"temperature", p.temperature},
                     {"top_p", p.top_p},
                     {"logit_bias", bias_to_json(p.logit_bias)},
                     {"max_tokens", p.max_tokens}};
  j["seed"] = p.seed ? nlohmann::json(*p.seed) : nlohmann::json(nullptr);
}

inline void from_json(const nlohmann::json& j, GenerationParams& p) {
  p = GenerationParams{};
  p.temperature = j.value("temperature", p.temperature);
  p.top_p = j.value("top_p", p.top_p);
  p.max_tokens = j.value("max_tokens", p.max_tokens);
  if (auto it = j.find("logit_bias"); it != j.end()) p.logit_bias = bias_from_json(*it);
  if (auto it = j.find("seed"); it != j.end() && !it->is_null()) p.seed = it->get<std::uint64_t>();
}

// Seeded randomness with results that do not depend on the standard
// library's distribution implementations.
using Rng = std::mt19937_64;

/// Uniform integer in [0, n) by rejection sampling.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  if (n <= 1) return 0;
  const std::uint64_t limit = Rng::max() - (Rng::max() % n);
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// SplitMix64 finalizer; used to derive independent seeds and hash values.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v) { return mix64(h ^ mix64(v)); }

/// FNV-1a over bytes, stable across platforms.
inline std::uint64_t stable_hash(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace textdiv
