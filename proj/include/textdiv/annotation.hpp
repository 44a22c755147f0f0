#pragma once

// Human diversity annotation: batches of pairwise comparisons, inter-annotator
// agreement (unweighted Cohen's kappa) and metric/human correlation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "textdiv/document.hpp"
#include "textdiv/error.hpp"
#include "textdiv/genctl/params.hpp"

namespace textdiv {

inline constexpr std::size_t kBatchSize = 5;

/// model id -> that model's documents. A document's band is meta["band"], or its id.
using Session = std::map<std::string, std::vector<Document>>;

inline std::string band_of(const Document& d) {
  auto it = d.meta.find("band");
  return it != d.meta.end() && !it->second.empty() ? it->second : d.id;
}

struct AnnotationPair {
  std::string pair_id;
  std::size_t a = 0;  // indices into the batch's documents
  std::size_t b = 0;
};

struct AnnotationBatch {
  std::string batch_id;
  std::string model_id;
  std::vector<Document> documents;  // ordered like the session's band list
  std::vector<AnnotationPair> pairs;
  std::size_t n = 3;
};

/// Bands every model has a document for, sorted.
inline std::vector<std::string> common_bands(const Session& session) {
  std::optional<std::set<std::string>> common;
  for (const auto& [model, docs] : session) {
    std::set<std::string> bands;
    for (const auto& d : docs) bands.insert(band_of(d));
    if (!common) {
      common = std::move(bands);
    } else {
      std::set<std::string> keep;
      std::set_intersection(common->begin(), common->end(), bands.begin(), bands.end(),
                            std::inserter(keep, keep.end()));
      common = std::move(keep);
    }
  }
  return common ? std::vector<std::string>(common->begin(), common->end()) : std::vector<std::string>{};
}

/// One batch per model (models in id order) over the same five bands. Without
/// explicit band ids, five are drawn from the common bands with the seed. The
/// ten pairs of each batch are shuffled with a seed derived from the model id.
inline std::vector<AnnotationBatch> make_batches(const Session& session,
                                                 const std::optional<std::vector<std::string>>& band_ids,
                                                 std::uint64_t seed, std::size_t n = 3) {
  if (session.empty()) throw Error(Errc::invalid_parameter, "session has no models");
  std::vector<std::string> bands;
  if (band_ids) {
    if (band_ids->size() != kBatchSize)
      throw Error(Errc::invalid_parameter, "a batch needs exactly 5 bands, got " + std::to_string(band_ids->size()));
    if (std::set<std::string>(band_ids->begin(), band_ids->end()).size() != kBatchSize)
      throw Error(Errc::invalid_parameter, "band ids must be distinct");
    bands = *band_ids;
  } else {
    auto pool = common_bands(session);
    if (pool.size() < kBatchSize)
      throw Error(Errc::incomplete_session,
                  "only " + std::to_string(pool.size()) + " bands are described by every model, need 5");
    Rng rng(mix64(seed));
    for (std::size_t i = 0; i < kBatchSize; ++i)
      std::swap(pool[i], pool[i + uniform_index(rng, pool.size() - i)]);
    bands.assign(pool.begin(), pool.begin() + kBatchSize);
  }

  std::vector<AnnotationBatch> out;
  std::size_t k = 0;
  for (const auto& [model, docs] : session) {
    AnnotationBatch batch;
    batch.batch_id = "m" + std::to_string(k++);
    batch.model_id = model;
    batch.n = n;
    for (const auto& band : bands) {
      auto it = std::find_if(docs.begin(), docs.end(), [&](const Document& d) { return band_of(d) == band; });
      if (it == docs.end())
        throw Error(Errc::incomplete_session, "model '" + model + "' has no description for band '" + band + "'");
      batch.documents.push_back(*it);
    }
    for (std::size_t i = 0; i < kBatchSize; ++i)
      for (std::size_t j = i + 1; j < kBatchSize; ++j)
        batch.pairs.push_back({batch.batch_id + "-p" + std::to_string(i) + "-" + std::to_string(j), i, j});
    Rng rng(hash_combine(mix64(seed), stable_hash(model)));
    for (std::size_t i = batch.pairs.size(); i > 1; --i) std::swap(batch.pairs[i - 1], batch.pairs[uniform_index(rng, i)]);
    out.push_back(std::move(batch));
  }
  return out;
}

/// Unweighted Cohen's kappa over two equally long label sequences.
/// Integer arithmetic: kappa = (agree*N - S) / (N*N - S), S = sum over
/// categories of count_a(c) * count_b(c).
inline double cohen_kappa(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) throw Error(Errc::invalid_parameter, "label sequences differ in length");
  if (a.size() < 2) throw Error(Errc::insufficient_data, "kappa needs at least 2 commonly scored items");
  const auto n = static_cast<std::int64_t>(a.size());
  std::map<int, std::int64_t> ca, cb;
  std::int64_t agree = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ++ca[a[i]];
    ++cb[b[i]];
    agree += a[i] == b[i];
  }
  std::int64_t s = 0;
  for (const auto& [c, k] : ca)
    if (auto it = cb.find(c); it != cb.end()) s += k * it->second;
  if (s == n * n) throw Error(Errc::undefined_kappa, "chance agreement is 1 (both annotators constant on one category)");
  return static_cast<double>(agree * n - s) / static_cast<double>(n * n - s);
}

/// Kappa over the items both annotators scored.
inline double cohen_kappa(const std::map<std::string, int>& a, const std::map<std::string, int>& b) {
  std::vector<int> la, lb;
  for (const auto& [item, c] : a)
    if (auto it = b.find(item); it != b.end()) {
      la.push_back(c);
      lb.push_back(it->second);
    }
  return cohen_kappa(la, lb);
}

struct Correlation {
  double pearson_r = 0.0;
  double spearman_rho = 0.0;
};

namespace detail {

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const auto n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw Error(Errc::undefined_correlation, "a series has zero variance");
  return sxy / std::sqrt(sxx * syy);
}

/// 1-based ranks; ties share their average rank.
inline std::vector<double> average_ranks(const std::vector<double>& v) {
  std::vector<std::size_t> order(v.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](auto i, auto j) { return v[i] < v[j]; });
  std::vector<double> rank(v.size());
  for (std::size_t i = 0; i < order.size();) {
    auto j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (auto k = i; k <= j; ++k) rank[order[k]] = r;
    i = j + 1;
  }
  return rank;
}

}  // namespace detail

/// Pearson and Spearman over per-model (jaccdiv_mean, human_mean) pairs.
inline Correlation correlate(const std::vector<std::pair<double, double>>& per_model) {
  if (per_model.size() < 3) throw Error(Errc::insufficient_data, "correlation needs at least 3 models");
  std::vector<double> x, y;
  for (const auto& [j, h] : per_model) {
    x.push_back(j);
    y.push_back(h);
  }
  Correlation c;
  c.pearson_r = detail::pearson(x, y);
  c.spearman_rho = detail::pearson(detail::average_ranks(x), detail::average_ranks(y));
  return c;
}

/// Category c on a 1..K scale mapped to [0, 1].
inline double rescale_category(double c, int scale) { return (c - 1.0) / static_cast<double>(scale - 1); }

struct ScoreEntry {
  std::string annotator_id;
  std::string pair_id;
  int category = 0;
};

struct AgreementReport {
  int scale = 5;
  std::vector<std::string> annotators;  // sorted; kappa uses the first two
  std::optional<double> kappa;
  std::string kappa_note;
  std::size_t kappa_items = 0;
  std::map<std::string, double> per_model_human_mean;
  std::map<std::string, double> per_model_jaccdiv;
  std::optional<Correlation> correlation;
  std::string correlation_note;
  std::size_t scores = 0;
  std::size_t pairs_total = 0;
};

/// Report over the final scores (one per annotator and pair). jaccdiv holds
/// each model's metric value; models without human scores are left out of
/// the correlation.
inline AgreementReport build_report(const std::vector<AnnotationBatch>& batches, const std::vector<ScoreEntry>& scores,
                                    const std::map<std::string, double>& jaccdiv, int scale) {
  AgreementReport r;
  r.scale = scale;
  r.per_model_jaccdiv = jaccdiv;
  r.scores = scores.size();
  std::map<std::string, std::string> model_of;
  for (const auto& b : batches) {
    r.pairs_total += b.pairs.size();
    for (const auto& p : b.pairs) model_of[p.pair_id] = b.model_id;
  }

  std::map<std::string, std::map<std::string, int>> by_annotator;
  std::map<std::string, std::pair<double, std::size_t>> human;
  for (const auto& s : scores) {
    by_annotator[s.annotator_id][s.pair_id] = s.category;
    auto& [sum, count] = human[model_of.at(s.pair_id)];
    sum += rescale_category(s.category, scale);
    ++count;
  }
  for (const auto& [model, acc] : human) r.per_model_human_mean[model] = acc.first / static_cast<double>(acc.second);
  for (const auto& [a, _] : by_annotator) r.annotators.push_back(a);

  if (r.annotators.size() < 2) {
    r.kappa_note = "needs two annotators";
  } else {
    const auto& a = by_annotator[r.annotators[0]];
    const auto& b = by_annotator[r.annotators[1]];
    for (const auto& [item, _] : a) r.kappa_items += b.count(item);
    try {
      r.kappa = cohen_kappa(a, b);
    } catch (const Error& e) {
      r.kappa_note = std::string(to_string(e.code())) + ": " + e.what();
    }
  }

  std::vector<std::pair<double, double>> points;
  for (const auto& [model, h] : r.per_model_human_mean)
    if (auto it = jaccdiv.find(model); it != jaccdiv.end()) points.emplace_back(it->second, h);
  try {
    r.correlation = correlate(points);
  } catch (const Error& e) {
    r.correlation_note = std::string(to_string(e.code())) + ": " + e.what();
  }
  return r;
}

inline nlohmann::json to_json(const AgreementReport& r) {
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  nlohmann::json j{{"scale", r.scale},
                   {"annotators", r.annotators},
                   {"kappa", opt(r.kappa)},
                   {"kappa_items", r.kappa_items},
                   {"per_model_human_mean", r.per_model_human_mean},
                   {"per_model_jaccdiv", r.per_model_jaccdiv},
                   {"pearson_r", r.correlation ? nlohmann::json(r.correlation->pearson_r) : nlohmann::json(nullptr)},
                   {"spearman_rho",
                    r.correlation ? nlohmann::json(r.correlation->spearman_rho) : nlohmann::json(nullptr)},
                   {"scores", r.scores},
                   {"pairs_total", r.pairs_total}};
  if (!r.kappa_note.empty()) j["kappa_note"] = r.kappa_note;
  if (!r.correlation_note.empty()) j["correlation_note"] = r.correlation_note;
  return j;
}

}  // namespace textdiv
