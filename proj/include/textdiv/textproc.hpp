#pragma once

// Text normalization and word n-gram extraction.
//
// Tokens are Unicode word segments (UAX #29, via ICU), case-folded, with
// segments that contain no letter or digit dropped. Every token keeps the
// byte range it came from so that matches can be mapped back onto the
// original text.

#include <algorithm>
#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <unicode/brkiter.h>
#include <unicode/locid.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utext.h>
#include <unicode/utf8.h>

#include "textdiv/error.hpp"

namespace textdiv {

/// Half-open byte range [start, end) into a UTF-8 string.
struct Span {
  std::size_t start = 0;
  std::size_t end = 0;

  friend bool operator==(const Span&, const Span&) = default;
};

struct TokenSequence {
  std::vector<std::string> tokens;
  std::vector<Span> spans;

  std::size_t size() const noexcept { return tokens.size(); }
  bool empty() const noexcept { return tokens.empty(); }
};

namespace detail {

struct UTextCloser {
  void operator()(UText* t) const noexcept { utext_close(t); }
};

inline const icu::BreakIterator& word_break_prototype() {
  static const std::unique_ptr<icu::BreakIterator> proto = [] {
    UErrorCode status = U_ZERO_ERROR;
    std::unique_ptr<icu::BreakIterator> it(
        icu::BreakIterator::createWordInstance(icu::Locale::getRoot(), status));
    if (U_FAILURE(status) || !it)
      throw Error(Errc::configuration, "ICU word break iterator unavailable");
    return it;
  }();
  return *proto;
}

inline bool has_alnum(std::string_view segment) {
  const auto* s = reinterpret_cast<const uint8_t*>(segment.data());
  const auto len = static_cast<int32_t>(segment.size());
  int32_t i = 0;
  while (i < len) {
    UChar32 c;
    U8_NEXT(s, i, len, c);
    if (c >= 0 && u_isalnum(c)) return true;
  }
  return false;
}

}  // namespace detail

/// Case-fold a UTF-8 string (full Unicode simple+special folding).
inline std::string fold_case(std::string_view text) {
  icu::UnicodeString u = icu::UnicodeString::fromUTF8(
      icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  u.foldCase();
  std::string out;
  u.toUTF8String(out);
  return out;
}

inline TokenSequence tokenize(std::string_view text) {
  TokenSequence seq;
  if (text.empty()) return seq;

  UErrorCode status = U_ZERO_ERROR;
  std::unique_ptr<UText, detail::UTextCloser> ut(
      utext_openUTF8(nullptr, text.data(), static_cast<int64_t>(text.size()), &status));
  if (U_FAILURE(status)) throw Error(Errc::invalid_parameter, "cannot open text for segmentation");

  std::unique_ptr<icu::BreakIterator> it(detail::word_break_prototype().clone());
  it->setText(ut.get(), status);
  if (U_FAILURE(status)) throw Error(Errc::invalid_parameter, "cannot segment text");

  int32_t start = it->first();
  for (int32_t end = it->next(); end != icu::BreakIterator::DONE; start = end, end = it->next()) {
    auto segment = text.substr(static_cast<std::size_t>(start), static_cast<std::size_t>(end - start));
    if (!detail::has_alnum(segment)) continue;
    seq.tokens.push_back(fold_case(segment));
    seq.spans.push_back({static_cast<std::size_t>(start), static_cast<std::size_t>(end)});
  }
  return seq;
}

/// Tokens joined by single spaces.
inline std::string render_tokens(const TokenSequence& seq) {
  std::string out;
  for (std::size_t i = 0; i < seq.tokens.size(); ++i) {
    if (i) out += ' ';
    out += seq.tokens[i];
  }
  return out;
}

/// A word n-gram. Tokens are stored joined by U+001F, which word
/// segmentation never places inside a token.
class NGram {
 public:
  static constexpr char kSeparator = '\x1f';

  NGram() = default;
  NGram(std::size_t order, std::string key) : order_(order), key_(std::move(key)) {}

  template <class It>
  static NGram from_tokens(It first, It last) {
    std::string key;
    std::size_t order = 0;
    for (; first != last; ++first, ++order) {
      if (order) key += kSeparator;
      key += *first;
    }
    return NGram(order, std::move(key));
  }

  std::size_t order() const noexcept { return order_; }
  const std::string& key() const noexcept { return key_; }

  std::vector<std::string> tokens() const {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (true) {
      auto next = key_.find(kSeparator, pos);
      out.push_back(key_.substr(pos, next == std::string::npos ? std::string::npos : next - pos));
      if (next == std::string::npos) break;
      pos = next + 1;
    }
    return out;
  }

  /// Tokens joined by spaces, for display.
  std::string text() const {
    std::string s = key_;
    std::replace(s.begin(), s.end(), kSeparator, ' ');
    return s;
  }

  friend bool operator==(const NGram&, const NGram&) = default;
  friend auto operator<=>(const NGram& a, const NGram& b) {
    if (auto c = a.order_ <=> b.order_; c != 0) return c;
    return a.key_.compare(b.key_) <=> 0;
  }

 private:
  std::size_t order_ = 0;
  std::string key_;
};

/// Set of n-grams of orders [min_order, max_order], kept sorted and unique.
class NGramSet {
 public:
  NGramSet() = default;
  NGramSet(std::size_t min_order, std::size_t max_order, std::vector<NGram> grams)
      : min_order_(min_order), max_order_(max_order), grams_(std::move(grams)) {
    std::sort(grams_.begin(), grams_.end());
    grams_.erase(std::unique(grams_.begin(), grams_.end()), grams_.end());
  }

  std::size_t min_order() const noexcept { return min_order_; }
  std::size_t max_order() const noexcept { return max_order_; }
  const std::vector<NGram>& grams() const noexcept { return grams_; }
  std::size_t size() const noexcept { return grams_.size(); }
  bool empty() const noexcept { return grams_.empty(); }

  bool contains(const NGram& g) const {
    return std::binary_search(grams_.begin(), grams_.end(), g);
  }

  bool same_orders(const NGramSet& other) const noexcept {
    return min_order_ == other.min_order_ && max_order_ == other.max_order_;
  }

  /// Grams of a single order, as a set with orders [k, k].
  NGramSet restrict_to(std::size_t k) const {
    std::vector<NGram> out;
    for (const auto& g : grams_)
      if (g.order() == k) out.push_back(g);
    return NGramSet(k, k, std::move(out));
  }

  NGramSet intersect(const NGramSet& other) const {
    std::vector<NGram> out;
    std::set_intersection(grams_.begin(), grams_.end(), other.grams_.begin(), other.grams_.end(),
                          std::back_inserter(out));
    return NGramSet(min_order_, max_order_, std::move(out));
  }

  friend bool operator==(const NGramSet&, const NGramSet&) = default;

 private:
  std::size_t min_order_ = 2;
  std::size_t max_order_ = 2;
  std::vector<NGram> grams_;
};

/// Number of grams present in both sets. Linear merge over the sorted storage.
inline std::size_t intersection_size(const NGramSet& a, const NGramSet& b) {
  std::size_t n = 0;
  auto i = a.grams().begin(), ie = a.grams().end();
  auto j = b.grams().begin(), je = b.grams().end();
  while (i != ie && j != je) {
    if (*i < *j) {
      ++i;
    } else if (*j < *i) {
      ++j;
    } else {
      ++n;
      ++i;
      ++j;
    }
  }
  return n;
}

/// All k-grams for k in [min_order, max_order], pooled into one set.
inline NGramSet ngrams(const std::vector<std::string>& tokens, std::size_t min_order,
                       std::size_t max_order) {
  if (min_order < 2 || max_order < min_order)
    throw Error(Errc::invalid_parameter, "n-gram orders must satisfy 2 <= min <= max");
  std::vector<NGram> grams;
  for (std::size_t k = min_order; k <= max_order; ++k) {
    if (tokens.size() < k) break;
    for (std::size_t i = 0; i + k <= tokens.size(); ++i)
      grams.push_back(NGram::from_tokens(tokens.begin() + i, tokens.begin() + i + k));
  }
  return NGramSet(min_order, max_order, std::move(grams));
}

inline NGramSet ngrams(const TokenSequence& seq, std::size_t n) {
  if (n < 2) throw Error(Errc::invalid_parameter, "n must be >= 2");
  return ngrams(seq.tokens, 2, n);
}

/// Grams of exactly order k.
inline NGramSet ngrams_of_order(const TokenSequence& seq, std::size_t k) {
  if (k < 2) throw Error(Errc::invalid_parameter, "n must be >= 2");
  return ngrams(seq.tokens, k, k);
}

}  // namespace textdiv
