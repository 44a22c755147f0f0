#pragma once

// Shared n-gram highlighting for side-by-side human comparison of two texts.
// Highlighting always uses a single order n, even when the metric pools 2..n.

#include <algorithm>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "textdiv/document.hpp"
#include "textdiv/error.hpp"
#include "textdiv/textproc.hpp"

namespace textdiv {

struct HighlightSpan {
  std::string doc_id;
  std::size_t start = 0;  // byte offsets into the document text
  std::size_t end = 0;
  std::size_t token_begin = 0;  // token index range [token_begin, token_end)
  std::size_t token_end = 0;
  /// Shared grams whose occurrences were merged into this span.
  std::vector<NGram> grams;
};

struct HighlightedPair {
  Document doc_a;
  Document doc_b;
  std::size_t n = 3;
  std::vector<HighlightSpan> spans_a;
  std::vector<HighlightSpan> spans_b;
  NGramSet shared_grams;
};

enum class RenderFormat { ansi, html, json };

inline RenderFormat parse_render_format(std::string_view s) {
  if (s == "ansi") return RenderFormat::ansi;
  if (s == "html") return RenderFormat::html;
  if (s == "json") return RenderFormat::json;
  throw Error(Errc::invalid_parameter, "unknown render format '" + std::string(s) + "'");
}

namespace detail {

// Every occurrence of a shared gram marks a token window; windows that
// overlap or sit next to each other collapse into one span.
inline std::vector<HighlightSpan> shared_spans(const Document& doc, const TokenSequence& seq,
                                               const NGramSet& shared, std::size_t n) {
  std::vector<HighlightSpan> spans;
  if (shared.empty() || seq.size() < n) return spans;
  for (std::size_t i = 0; i + n <= seq.size(); ++i) {
    auto gram = NGram::from_tokens(seq.tokens.begin() + i, seq.tokens.begin() + i + n);
    if (!shared.contains(gram)) continue;
    if (!spans.empty() && i <= spans.back().token_end) {
      auto& last = spans.back();
      last.token_end = std::max(last.token_end, i + n);
      if (std::find(last.grams.begin(), last.grams.end(), gram) == last.grams.end())
        last.grams.push_back(std::move(gram));
    } else {
      HighlightSpan s;
      s.doc_id = doc.id;
      s.token_begin = i;
      s.token_end = i + n;
      s.grams.push_back(std::move(gram));
      spans.push_back(std::move(s));
    }
  }
  for (auto& s : spans) {
    s.start = seq.spans[s.token_begin].start;
    s.end = seq.spans[s.token_end - 1].end;
  }
  return spans;
}

}  // namespace detail

inline HighlightedPair highlight_pair(const Document& a, const Document& b, std::size_t n = 3) {
  if (n < 2) throw Error(Errc::invalid_parameter, "n must be >= 2");
  const auto seq_a = tokenize(a.text);
  const auto seq_b = tokenize(b.text);
  HighlightedPair p;
  p.doc_a = a;
  p.doc_b = b;
  p.n = n;
  p.shared_grams = ngrams_of_order(seq_a, n).intersect(ngrams_of_order(seq_b, n));
  p.spans_a = detail::shared_spans(a, seq_a, p.shared_grams, n);
  p.spans_b = detail::shared_spans(b, seq_b, p.shared_grams, n);
  return p;
}

inline std::string html_escape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&#39;"; break;
      default: out += c;
    }
  }
  return out;
}

inline constexpr std::string_view kAnsiHighlightOn = "\x1b[7m";
inline constexpr std::string_view kAnsiHighlightOff = "\x1b[27m";

namespace detail {

inline std::string grams_label(const HighlightSpan& s) {
  std::string label;
  for (std::size_t i = 0; i < s.grams.size(); ++i) {
    if (i) label += " | ";
    label += s.grams[i].text();
  }
  return label;
}

inline std::string mark_text(std::string_view text, const std::vector<HighlightSpan>& spans, RenderFormat fmt) {
  std::string out;
  std::size_t pos = 0;
  auto plain = [&](std::string_view piece) {
    out += fmt == RenderFormat::html ? html_escape(piece) : std::string(piece);
  };
  for (const auto& s : spans) {
    plain(text.substr(pos, s.start - pos));
    if (fmt == RenderFormat::html) {
      out += "<mark data-gram=\"" + html_escape(grams_label(s)) + "\">";
      plain(text.substr(s.start, s.end - s.start));
      out += "</mark>";
    } else {
      out += kAnsiHighlightOn;
      plain(text.substr(s.start, s.end - s.start));
      out += kAnsiHighlightOff;
    }
    pos = s.end;
  }
  plain(text.substr(pos));
  return out;
}

inline nlohmann::json span_json(const HighlightSpan& s) {
  nlohmann::json grams = nlohmann::json::array();
  for (const auto& g : s.grams) grams.push_back(g.text());
  return {{"start", s.start}, {"end", s.end}, {"grams", grams}};
}

inline nlohmann::json side_json(const Document& d, const std::vector<HighlightSpan>& spans) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& s : spans) arr.push_back(span_json(s));
  return {{"id", d.id}, {"text", d.text}, {"spans", arr}};
}

}  // namespace detail

/// JSON view of a pair: texts verbatim plus byte-offset spans.
inline nlohmann::json to_json(const HighlightedPair& p) {
  nlohmann::json shared = nlohmann::json::array();
  for (const auto& g : p.shared_grams.grams()) shared.push_back(g.text());
  return {{"n", p.n},
          {"a", detail::side_json(p.doc_a, p.spans_a)},
          {"b", detail::side_json(p.doc_b, p.spans_b)},
          {"shared_grams", shared}};
}

inline std::string render(const HighlightedPair& p, RenderFormat fmt) {
  switch (fmt) {
    case RenderFormat::ansi:
      return "--- " + p.doc_a.id + "\n" + detail::mark_text(p.doc_a.text, p.spans_a, fmt) + "\n--- " +
             p.doc_b.id + "\n" + detail::mark_text(p.doc_b.text, p.spans_b, fmt) + "\n";
    case RenderFormat::html:
      return "<div class=\"pair\" data-n=\"" + std::to_string(p.n) + "\">\n<div class=\"pane\" data-doc=\"" +
             html_escape(p.doc_a.id) + "\">" + detail::mark_text(p.doc_a.text, p.spans_a, fmt) +
             "</div>\n<div class=\"pane\" data-doc=\"" + html_escape(p.doc_b.id) + "\">" +
             detail::mark_text(p.doc_b.text, p.spans_b, fmt) + "</div>\n</div>\n";
    case RenderFormat::json:
      return to_json(p).dump(2) + "\n";
  }
  throw Error(Errc::invalid_parameter, "unknown render format");
}

inline std::string render(const HighlightedPair& p, std::string_view format) {
  return render(p, parse_render_format(format));
}

}  // namespace textdiv
