#pragma once

// Pairwise n-gram Jaccard diversity and the corpus-level JaccDiv score.
//
//   diversity(U, V) = 1 - |U ∩ V| / |U ∪ V|
//
// over the pooled word n-gram sets of orders 2..n. All pairs of a corpus are
// scored into an upper-triangular matrix and averaged.

#include <algorithm>
#include <cstddef>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "textdiv/document.hpp"
#include "textdiv/error.hpp"
#include "textdiv/textproc.hpp"

namespace textdiv {

struct PairScore {
  std::string id_a;
  std::string id_b;
  double similarity = 0.0;
  double diversity = 0.0;
  bool length_ratio_flag = false;
  /// Both n-gram sets were empty; similarity is defined as 1.
  bool degenerate = false;
  /// Per-order similarities (orders 2..n), filled only in per-order mode.
  std::vector<double> per_order_similarity;
};

struct DiversityOptions {
  std::size_t n = 3;
  /// Average per-order Jaccard similarities instead of pooling orders 2..n.
  bool per_order = false;
  /// Pairs whose character-length ratio exceeds this are flagged.
  double length_ratio_threshold = 2.0;
  /// 0 picks std::thread::hardware_concurrency().
  unsigned threads = 0;
};

inline PairScore pair_diversity(const NGramSet& a, const NGramSet& b) {
  if (!a.same_orders(b))
    throw Error(Errc::invalid_comparison, "n-gram sets were built with different order ranges");
  PairScore s;
  if (a.empty() && b.empty()) {
    s.similarity = 1.0;
    s.degenerate = true;
  } else {
    const auto inter = intersection_size(a, b);
    const auto uni = a.size() + b.size() - inter;
    s.similarity = static_cast<double>(inter) / static_cast<double>(uni);
    // (uni - inter) / uni rather than 1 - similarity: exact for small ratios like 2/3.
    s.diversity = static_cast<double>(uni - inter) / static_cast<double>(uni);
  }
  return s;
}

/// Upper-triangular matrix stored row-major: (0,1), (0,2), ..., (1,2), ...
class DiversityMatrix {
 public:
  DiversityMatrix() = default;
  DiversityMatrix(std::vector<std::string> ids, std::vector<PairScore> cells)
      : ids_(std::move(ids)), cells_(std::move(cells)) {
    const auto m = ids_.size();
    if (cells_.size() != m * (m - 1) / 2)
      throw Error(Errc::invalid_parameter, "cell count does not match m(m-1)/2");
  }

  const std::vector<std::string>& ids() const noexcept { return ids_; }
  const std::vector<PairScore>& cells() const noexcept { return cells_; }
  std::size_t size() const noexcept { return ids_.size(); }

  static std::size_t index(std::size_t m, std::size_t row, std::size_t col) {
    // Row r starts after r full rows of decreasing length.
    return row * (2 * m - row - 1) / 2 + (col - row - 1);
  }

  /// Cell for row < col.
  const PairScore& at(std::size_t row, std::size_t col) const {
    if (row >= col || col >= ids_.size())
      throw Error(Errc::invalid_parameter, "only cells with row < col exist");
    return cells_[index(ids_.size(), row, col)];
  }

 private:
  std::vector<std::string> ids_;
  std::vector<PairScore> cells_;
};

struct DiversityReport {
  std::string experiment_id;
  std::size_t n = 3;
  bool per_order = false;
  double mean_diversity = 0.0;
  DiversityMatrix matrix;
  std::map<std::string, double> per_document_mean;
};

namespace detail {

inline std::size_t codepoint_length(std::string_view s) {
  return static_cast<std::size_t>(
      std::count_if(s.begin(), s.end(), [](char c) { return (static_cast<unsigned char>(c) & 0xC0) != 0x80; }));
}

inline bool exceeds_length_ratio(std::size_t la, std::size_t lb, double threshold) {
  const auto lo = std::min(la, lb), hi = std::max(la, lb);
  if (lo == 0) return hi > 0;
  return static_cast<double>(hi) / static_cast<double>(lo) > threshold;
}

inline void validate_corpus(const std::vector<Document>& docs) {
  if (docs.size() < 2) throw Error(Errc::insufficient_corpus, "need at least 2 documents");
  std::set<std::string_view> seen;
  for (const auto& d : docs) {
    if (d.id.empty()) throw Error(Errc::invalid_parameter, "document id must be non-empty");
    if (!seen.insert(d.id).second) throw Error(Errc::duplicate_id, "duplicate document id '" + d.id + "'");
  }
}

}  // namespace detail

inline DiversityMatrix diversity_matrix(const std::vector<Document>& docs, const DiversityOptions& opt = {}) {
  detail::validate_corpus(docs);
  if (opt.n < 2) throw Error(Errc::invalid_parameter, "n must be >= 2");
  if (!(opt.length_ratio_threshold >= 1.0))
    throw Error(Errc::invalid_parameter, "length ratio threshold must be >= 1");

  const auto m = docs.size();
  std::vector<std::string> ids;
  std::vector<TokenSequence> seqs;
  std::vector<std::size_t> lengths;
  for (const auto& d : docs) {
    ids.push_back(d.id);
    seqs.push_back(tokenize(d.text));
    if (seqs.back().empty())
      throw Error(Errc::empty_document, "document '" + d.id + "' is empty after normalization");
    lengths.push_back(detail::codepoint_length(d.text));
  }

  // pooled[i] for the default mode, by_order[i][k-2] for per-order mode
  std::vector<NGramSet> pooled;
  std::vector<std::vector<NGramSet>> by_order;
  for (const auto& s : seqs) {
    if (opt.per_order) {
      std::vector<NGramSet> orders;
      for (std::size_t k = 2; k <= opt.n; ++k) orders.push_back(ngrams_of_order(s, k));
      by_order.push_back(std::move(orders));
    } else {
      pooled.push_back(ngrams(s, opt.n));
    }
  }

  std::vector<PairScore> cells(m * (m - 1) / 2);
  auto score_row = [&](std::size_t i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      PairScore s;
      if (opt.per_order) {
        double sum = 0.0;
        bool all_degenerate = true;
        for (std::size_t k = 0; k + 2 <= opt.n; ++k) {
          auto p = pair_diversity(by_order[i][k], by_order[j][k]);
          s.per_order_similarity.push_back(p.similarity);
          sum += p.similarity;
          all_degenerate = all_degenerate && p.degenerate;
        }
        s.similarity = sum / static_cast<double>(opt.n - 1);
        s.diversity = 1.0 - s.similarity;
        s.degenerate = all_degenerate;
      } else {
        s = pair_diversity(pooled[i], pooled[j]);
      }
      // Matrix position follows input order; the cell itself names its pair
      // with the lexicographically smaller id first.
      s.id_a = std::min(ids[i], ids[j]);
      s.id_b = std::max(ids[i], ids[j]);
      s.length_ratio_flag = detail::exceeds_length_ratio(lengths[i], lengths[j], opt.length_ratio_threshold);
      cells[DiversityMatrix::index(m, i, j)] = std::move(s);
    }
  };

  // Rows are dealt round-robin so each worker gets a mix of long and short rows.
  // Every cell has a fixed slot, so the result is independent of scheduling.
  unsigned workers = opt.threads ? opt.threads : std::max(1u, std::thread::hardware_concurrency());
  if (m < 64) workers = 1;
  workers = std::min<unsigned>(workers, static_cast<unsigned>(m));
  if (workers <= 1) {
    for (std::size_t i = 0; i < m; ++i) score_row(i);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < m; i += workers) score_row(i);
      });
  }
  return DiversityMatrix(std::move(ids), std::move(cells));
}

inline DiversityReport corpus_jaccdiv(const std::vector<Document>& docs, const DiversityOptions& opt = {},
                                      std::string experiment_id = {}) {
  DiversityReport r;
  r.experiment_id = std::move(experiment_id);
  r.n = opt.n;
  r.per_order = opt.per_order;
  r.matrix = diversity_matrix(docs, opt);

  const auto m = r.matrix.size();
  std::vector<double> row_sum(m, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j) {
      const double d = r.matrix.at(i, j).diversity;
      total += d;
      row_sum[i] += d;
      row_sum[j] += d;
    }
  r.mean_diversity = total / static_cast<double>(r.matrix.cells().size());
  for (std::size_t i = 0; i < m; ++i)
    r.per_document_mean[r.matrix.ids()[i]] = row_sum[i] / static_cast<double>(m - 1);
  return r;
}

inline nlohmann::json to_json(const DiversityReport& r) {
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& c : r.matrix.cells()) {
    nlohmann::json flags = nlohmann::json::array();
    if (c.length_ratio_flag) flags.push_back("length_ratio");
    if (c.degenerate) flags.push_back("degenerate");
    nlohmann::json p{{"a", c.id_a}, {"b", c.id_b}, {"similarity", c.similarity},
                     {"diversity", c.diversity}, {"flags", flags}};
    if (!c.per_order_similarity.empty()) p["per_order_similarity"] = c.per_order_similarity;
    pairs.push_back(std::move(p));
  }
  return nlohmann::json{{"experiment_id", r.experiment_id},
                        {"n", r.n},
                        {"mode", r.per_order ? "per_order" : "pooled"},
                        {"mean_diversity", r.mean_diversity},
                        {"pairs", std::move(pairs)},
                        {"per_document_mean", r.per_document_mean}};
}

}  // namespace textdiv
