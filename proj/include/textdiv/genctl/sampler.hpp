#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "textdiv/error.hpp"
#include "textdiv/genctl/params.hpp"

namespace textdiv {

/// Tokens left after bias exclusion, temperature and nucleus truncation,
/// in descending probability order, with renormalized probabilities.
struct SamplingCandidates {
  std::vector<TokenId> ids;
  std::vector<double> probs;
};

inline SamplingCandidates nucleus_candidates(std::span<const double> logits, const GenerationParams& params) {
  const auto vocab = static_cast<TokenId>(logits.size());
  std::vector<double> adjusted(logits.begin(), logits.end());
  std::vector<bool> excluded(logits.size(), false);
  for (const auto& [tok, b] : params.logit_bias) {
    if (tok < 0 || tok >= vocab)
      throw Error(Errc::invalid_bias, "bias references unknown token id " + std::to_string(tok));
    if (b <= -kMaxBias)
      excluded[static_cast<std::size_t>(tok)] = true;
    else
      adjusted[static_cast<std::size_t>(tok)] += b;
  }

  std::vector<TokenId> ids;
  for (TokenId t = 0; t < vocab; ++t)
    if (!excluded[static_cast<std::size_t>(t)]) ids.push_back(t);
  if (ids.empty()) throw Error(Errc::empty_candidates, "every token is excluded by logit bias");

  SamplingCandidates out;
  if (params.temperature == 0.0) {
    TokenId best = ids.front();
    for (auto t : ids)
      if (adjusted[static_cast<std::size_t>(t)] > adjusted[static_cast<std::size_t>(best)]) best = t;
    out.ids = {best};
    out.probs = {1.0};
    return out;
  }

  double max_logit = -std::numeric_limits<double>::infinity();
  for (auto t : ids) max_logit = std::max(max_logit, adjusted[static_cast<std::size_t>(t)] / params.temperature);
  std::vector<double> weight(logits.size(), 0.0);
  double total = 0.0;
  for (auto t : ids) {
    const auto i = static_cast<std::size_t>(t);
    weight[i] = std::exp(adjusted[i] / params.temperature - max_logit);
    total += weight[i];
  }

  std::stable_sort(ids.begin(), ids.end(), [&](TokenId a, TokenId b) {
    return weight[static_cast<std::size_t>(a)] > weight[static_cast<std::size_t>(b)];
  });

  std::size_t keep = ids.size();
  if (params.top_p < 1.0) {
    double cum = 0.0;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      cum += weight[static_cast<std::size_t>(ids[i])] / total;
      if (cum >= params.top_p) {
        keep = i + 1;
        break;
      }
    }
  }
  ids.resize(keep);
  double kept = 0.0;
  for (auto t : ids) kept += weight[static_cast<std::size_t>(t)];
  out.ids = std::move(ids);
  for (auto t : out.ids) out.probs.push_back(weight[static_cast<std::size_t>(t)] / kept);
  return out;
}

/// Sample the next token of the mock model from its logits.
inline TokenId mock_sample_next(Rng& rng, std::span<const double> logits, const GenerationParams& params) {
  const auto c = nucleus_candidates(logits, params);
  if (c.ids.size() == 1) return c.ids.front();
  const double u = uniform01(rng);
  double cum = 0.0;
  for (std::size_t i = 0; i < c.ids.size(); ++i) {
    cum += c.probs[i];
    if (u < cum) return c.ids[i];
  }
  return c.ids.back();
}

}  // namespace textdiv
