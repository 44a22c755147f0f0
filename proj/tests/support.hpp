#pragma once

// Shared test helpers: random corpora and an independent n-gram oracle that
// works on whitespace-split lowercase ASCII words (no ICU, no library types).

#include <cstdint>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "textdiv/document.hpp"

namespace testutil {

inline std::vector<std::string> words(std::size_t count, const std::string& prefix = "w") {
  std::vector<std::string> out;
  // Letters only, so every word is one token and case folding is the identity.
  for (std::size_t i = 0; i < count; ++i) {
    std::string w = prefix;
    for (auto k = i; ; k /= 26) {
      w += static_cast<char>('a' + k % 26);
      if (k < 26) break;
    }
    out.push_back(w);
  }
  return out;
}

inline std::string random_text(std::mt19937_64& rng, const std::vector<std::string>& vocab, std::size_t len) {
  std::uniform_int_distribution<std::size_t> pick(0, vocab.size() - 1);
  std::string s;
  for (std::size_t i = 0; i < len; ++i) {
    if (i) s += ' ';
    s += vocab[pick(rng)];
  }
  return s;
}

inline std::vector<textdiv::Document> random_corpus(std::mt19937_64& rng, std::size_t docs, std::size_t vocab_size,
                                                    std::size_t min_len, std::size_t max_len) {
  const auto vocab = words(vocab_size);
  std::uniform_int_distribution<std::size_t> len(min_len, max_len);
  std::vector<textdiv::Document> out;
  for (std::size_t i = 0; i < docs; ++i) out.push_back({"d" + std::to_string(i), random_text(rng, vocab, len(rng)), {}});
  return out;
}

using Gram = std::vector<std::string>;

inline std::vector<std::string> split(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

inline std::set<Gram> oracle_grams(const std::string& text, std::size_t lo, std::size_t hi) {
  const auto toks = split(text);
  std::set<Gram> out;
  for (std::size_t k = lo; k <= hi; ++k)
    for (std::size_t i = 0; i + k <= toks.size(); ++i) out.insert(Gram(toks.begin() + i, toks.begin() + i + k));
  return out;
}

inline double oracle_similarity(const std::set<Gram>& a, const std::set<Gram>& b) {
  if (a.empty() && b.empty()) return 1.0;
  std::size_t inter = 0;
  for (const auto& g : a) inter += b.count(g);
  std::set<Gram> uni = a;
  uni.insert(b.begin(), b.end());
  return static_cast<double>(inter) / static_cast<double>(uni.size());
}

inline double oracle_mean_diversity(const std::vector<textdiv::Document>& docs, std::size_t n) {
  double sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < docs.size(); ++i)
    for (std::size_t j = i + 1; j < docs.size(); ++j) {
      sum += 1.0 - oracle_similarity(oracle_grams(docs[i].text, 2, n), oracle_grams(docs[j].text, 2, n));
      ++pairs;
    }
  return sum / static_cast<double>(pairs);
}

}  // namespace testutil

namespace testutil {

inline std::string strip_ansi(std::string s) {
  for (const std::string code : {"\x1b[7m", "\x1b[27m"})
    for (auto p = s.find(code); p != std::string::npos; p = s.find(code, p)) s.erase(p, code.size());
  return s;
}

/// Drops tags and decodes the five entities html_escape produces.
inline std::string strip_html(const std::string& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size();) {
    if (s[i] == '<') {
      i = s.find('>', i) + 1;
    } else if (s[i] == '&') {
      const auto semi = s.find(';', i);
      const auto ent = s.substr(i, semi - i + 1);
      out += ent == "&amp;" ? "&" : ent == "&lt;" ? "<" : ent == "&gt;" ? ">" : ent == "&quot;" ? "\"" : "'";
      i = semi + 1;
    } else {
      out += s[i++];
    }
  }
  return out;
}

}  // namespace testutil
