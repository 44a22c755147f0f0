#pragma once

// Logit-bias feedback between generations.
//
// After every generation the emitted tokens are added to a cumulative ledger.
// Before the next one, the policy turns the ledger's current top-k tokens into
// negative biases:
//
//   fixed:    bias(t) = fixed_value                                 (default -50)
//   adaptive: bias(t) = -min(cap, adaptive_scale * cumulative_count(t))  (default scale 50)
//
// Top-k membership is recomputed every time, so a token that drops out of
// the top-k loses its bias until it climbs back in.

#include <algorithm>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "textdiv/error.hpp"
#include "textdiv/genctl/params.hpp"

namespace textdiv {

class TokenUsageLedger {
 public:
  void record(std::span<const TokenId> tokens) {
    for (auto t : tokens) ++counts_[t];
    ++generation_index_;
  }

  std::uint64_t count(TokenId t) const {
    auto it = counts_.find(t);
    return it == counts_.end() ? 0 : it->second;
  }

  const std::map<TokenId, std::uint64_t>& counts() const noexcept { return counts_; }
  std::uint64_t generation_index() const noexcept { return generation_index_; }
  bool empty() const noexcept { return counts_.empty(); }

  /// The k most used tokens; ties broken by ascending token id.
  std::vector<std::pair<TokenId, std::uint64_t>> top(std::size_t k) const {
    std::vector<std::pair<TokenId, std::uint64_t>> all(counts_.begin(), counts_.end());
    auto by_rank = [](const auto& a, const auto& b) {
      return a.second != b.second ? a.second > b.second : a.first < b.first;
    };
    k = std::min(k, all.size());
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(), by_rank);
    all.resize(k);
    return all;
  }

 private:
  std::map<TokenId, std::uint64_t> counts_;
  std::uint64_t generation_index_ = 0;
};

enum class BiasKind { none, fixed, adaptive };

inline std::string_view to_string(BiasKind k) {
  switch (k) {
    case BiasKind::none: return "none";
    case BiasKind::fixed: return "fixed";
    case BiasKind::adaptive: return "adaptive";
  }
  return "none";
}

inline BiasKind parse_bias_kind(std::string_view s) {
  if (s == "none") return BiasKind::none;
  if (s == "fixed") return BiasKind::fixed;
  if (s == "adaptive") return BiasKind::adaptive;
  throw Error(Errc::invalid_parameter, "unknown bias policy '" + std::string(s) + "'");
}

struct BiasPolicy {
  BiasKind kind = BiasKind::none;
  std::size_t top_k = 100;
  double fixed_value = -50.0;
  double adaptive_scale = 50.0;
  double cap = 100.0;
};

inline void validate(const BiasPolicy& p) {
  if (!(p.cap > 0.0 && p.cap <= kMaxBias)) throw Error(Errc::invalid_parameter, "cap must lie in (0, 100]");
  if (!(p.adaptive_scale > 0.0)) throw Error(Errc::invalid_parameter, "adaptive_scale must be positive");
  if (!(p.fixed_value <= 0.0 && p.fixed_value >= -p.cap))
    throw Error(Errc::invalid_parameter, "fixed_value must lie in [-cap, 0]");
}

inline LogitBias update_bias(const TokenUsageLedger& ledger, const BiasPolicy& policy) {
  validate(policy);
  LogitBias out;
  if (policy.kind == BiasKind::none) return out;
  for (const auto& [tok, count] : ledger.top(policy.top_k)) {
    if (policy.kind == BiasKind::fixed)
      out[tok] = policy.fixed_value;
    else
      out[tok] = -std::min(policy.cap, policy.adaptive_scale * static_cast<double>(count));
  }
  return out;
}

inline void to_json(nlohmann::json& j, const BiasPolicy& p) {
  j = nlohmann::json{{"kind", to_string(p.kind)},
                     {"top_k", p.top_k},
                     {"fixed_value", p.fixed_value},
                     {"adaptive_scale", p.adaptive_scale},
                     {"cap", p.cap}};
}

}  // namespace textdiv
