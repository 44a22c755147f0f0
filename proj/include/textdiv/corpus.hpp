#pragma once

// Formation dataset ingest (JSON lines or CSV), filtering, exact-duplicate
// removal and description length statistics.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "textdiv/document.hpp"
#include "textdiv/error.hpp"
#include "textdiv/genctl/record.hpp"
#include "textdiv/textproc.hpp"

namespace textdiv {

enum class InputFormat { jsonl, csv };

inline InputFormat detect_format(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".jsonl" || ext == ".ndjson" || ext == ".json") return InputFormat::jsonl;
  if (ext == ".csv") return InputFormat::csv;
  throw Error(Errc::format, "unknown input format '" + ext + "' (expected .jsonl or .csv)");
}

struct RowError {
  std::size_t line = 0;  // 1-based physical line where the row starts
  std::string message;
};

struct IngestResult {
  std::vector<FormationRecord> records;
  std::vector<RowError> errors;
};

/// CSV column -> record field. Columns named like a record field map to it
/// unless overridden; unmapped columns are ignored.
using HeaderMapping = std::map<std::string, std::string>;

namespace detail {

inline const std::set<std::string>& record_keys() {
  static const std::set<std::string> keys = {"id",          "name",        "type",     "homebase",
                                             "radius_km",   "genres",      "event_types",
                                             "description", "language",    "quality_flag"};
  return keys;
}

/// Splits CSV text into rows of fields (RFC 4180 quoting, CRLF or LF).
/// Each row carries the line number it starts on.
struct CsvRow {
  std::size_t line;
  std::vector<std::string> fields;
};

inline std::vector<CsvRow> parse_csv(const std::string& text) {
  std::vector<CsvRow> rows;
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false, row_has_content = false;
  std::size_t line = 1, row_line = 1;
  auto end_row = [&] {
    fields.push_back(std::move(field));
    field.clear();
    if (row_has_content || fields.size() > 1 || !fields.front().empty()) rows.push_back({row_line, std::move(fields)});
    fields.clear();
    row_has_content = false;
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        field += c;
      }
      continue;
    }
    switch (c) {
      case '"':
        quoted = true;
        row_has_content = true;
        break;
      case ',':
        fields.push_back(std::move(field));
        field.clear();
        break;
      case '\r':
        break;
      case '\n':
        end_row();
        row_line = ++line;
        break;
      default:
        field += c;
    }
  }
  if (quoted) throw Error(Errc::format, "unterminated quoted field starting on line " + std::to_string(row_line));
  if (!field.empty() || !fields.empty() || row_has_content) end_row();
  return rows;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace detail

inline IngestResult ingest_jsonl(std::istream& in) {
  IngestResult out;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.records.push_back(nlohmann::json::parse(line).get<FormationRecord>());
    } catch (const std::exception& e) {
      out.errors.push_back({n, e.what()});
    }
  }
  return out;
}

inline IngestResult ingest_csv(const std::string& text, const HeaderMapping& mapping = {}) {
  IngestResult out;
  const auto rows = detail::parse_csv(text);
  if (rows.empty()) return out;

  std::vector<std::optional<std::string>> columns;
  for (const auto& h : rows.front().fields) {
    auto it = mapping.find(h);
    auto key = it != mapping.end() ? it->second : h;
    if (it != mapping.end() && !detail::record_keys().count(key))
      throw Error(Errc::configuration, "header mapping targets unknown field '" + key + "'");
    columns.push_back(detail::record_keys().count(key) ? std::optional(key) : std::nullopt);
  }

  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.fields.size() != columns.size()) {
      out.errors.push_back({row.line, "expected " + std::to_string(columns.size()) + " fields, got " +
                                          std::to_string(row.fields.size())});
      continue;
    }
    nlohmann::json j = nlohmann::json::object();
    for (std::size_t c = 0; c < columns.size(); ++c)
      if (columns[c] && !row.fields[c].empty()) j[*columns[c]] = row.fields[c];
    try {
      out.records.push_back(j.get<FormationRecord>());
    } catch (const std::exception& e) {
      out.errors.push_back({row.line, e.what()});
    }
  }
  return out;
}

/// Reads a dataset file. Row problems are collected with their line numbers;
/// an unknown format or unreadable file throws.
inline IngestResult ingest(const std::filesystem::path& path, const HeaderMapping& mapping = {}) {
  const auto fmt = detect_format(path);
  if (fmt == InputFormat::csv) return ingest_csv(detail::read_file(path), mapping);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io, "cannot open " + path.string());
  return ingest_jsonl(in);
}

inline void write_jsonl(std::ostream& out, const std::vector<FormationRecord>& records) {
  for (const auto& r : records) out << nlohmann::json(r).dump() << '\n';
}

inline bool is_described(const FormationRecord& r) {
  return r.description && r.description->find_first_not_of(" \t\r\n\f\v") != std::string::npos;
}

inline std::vector<FormationRecord> filter_described(const std::vector<FormationRecord>& records) {
  std::vector<FormationRecord> out;
  std::copy_if(records.begin(), records.end(), std::back_inserter(out), is_described);
  return out;
}

/// Comparison key for duplicate detection: case-folded word tokens joined by spaces.
inline std::string normalized_description(const FormationRecord& r) {
  return r.description ? render_tokens(tokenize(*r.description)) : std::string();
}

/// Drops records whose normalized description repeats an earlier one.
/// Records without a description never count as duplicates.
inline std::vector<FormationRecord> dedup_exact(const std::vector<FormationRecord>& records) {
  std::vector<FormationRecord> out;
  std::set<std::string> seen;
  for (const auto& r : records) {
    auto key = normalized_description(r);
    if (key.empty() || seen.insert(std::move(key)).second) out.push_back(r);
  }
  return out;
}

struct HistogramBucket {
  std::size_t lo = 0;  // inclusive
  std::size_t hi = 0;  // exclusive
  std::size_t count = 0;
};

struct CorpusStats {
  std::size_t count = 0;
  std::size_t min_chars = 0;
  std::size_t max_chars = 0;
  double mean_chars = 0.0;
  double stddev_chars = 0.0;  // population
  std::size_t bucket_width = 200;
  std::vector<HistogramBucket> histogram;
};

/// Length in Unicode code points.
inline std::size_t char_length(std::string_view s) {
  return static_cast<std::size_t>(
      std::count_if(s.begin(), s.end(), [](char c) { return (static_cast<unsigned char>(c) & 0xC0) != 0x80; }));
}

inline CorpusStats stats_of_lengths(const std::vector<std::size_t>& lengths, std::size_t bucket_width = 200) {
  if (lengths.empty()) throw Error(Errc::insufficient_corpus, "no described records");
  if (bucket_width == 0) throw Error(Errc::invalid_parameter, "bucket width must be positive");
  CorpusStats s;
  s.count = lengths.size();
  s.bucket_width = bucket_width;
  s.min_chars = *std::min_element(lengths.begin(), lengths.end());
  s.max_chars = *std::max_element(lengths.begin(), lengths.end());
  double sum = 0.0;
  for (auto l : lengths) sum += static_cast<double>(l);
  s.mean_chars = sum / static_cast<double>(s.count);
  double sq = 0.0;
  for (auto l : lengths) sq += (static_cast<double>(l) - s.mean_chars) * (static_cast<double>(l) - s.mean_chars);
  s.stddev_chars = std::sqrt(sq / static_cast<double>(s.count));

  // Contiguous buckets from the one holding min to the one holding max.
  const auto first = s.min_chars / bucket_width, last = s.max_chars / bucket_width;
  for (auto b = first; b <= last; ++b) s.histogram.push_back({b * bucket_width, (b + 1) * bucket_width, 0});
  for (auto l : lengths) ++s.histogram[l / bucket_width - first].count;
  return s;
}

/// Statistics over the described records; undescribed ones are skipped.
inline CorpusStats stats(const std::vector<FormationRecord>& records, std::size_t bucket_width = 200) {
  std::vector<std::size_t> lengths;
  for (const auto& r : records)
    if (is_described(r)) lengths.push_back(char_length(*r.description));
  return stats_of_lengths(lengths, bucket_width);
}

inline nlohmann::json to_json(const CorpusStats& s) {
  nlohmann::json hist = nlohmann::json::array();
  for (const auto& b : s.histogram) hist.push_back({{"lo", b.lo}, {"hi", b.hi}, {"count", b.count}});
  return {{"count", s.count},          {"min_chars", s.min_chars},       {"max_chars", s.max_chars},
          {"mean_chars", s.mean_chars}, {"stddev_chars", s.stddev_chars}, {"bucket_width", s.bucket_width},
          {"histogram", hist}};
}

/// Bar chart of the histogram as a standalone SVG document.
inline std::string histogram_svg(const CorpusStats& s) {
  constexpr int kBarWidth = 40, kGap = 6, kHeight = 200, kMargin = 30;
  std::size_t peak = 1;
  for (const auto& b : s.histogram) peak = std::max(peak, b.count);
  const int width = kMargin * 2 + static_cast<int>(s.histogram.size()) * (kBarWidth + kGap);
  const int height = kHeight + kMargin * 2 + 20;
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"10\">\n";
  svg << "<text x=\"" << kMargin << "\" y=\"16\">description length (chars), n=" << s.count << "</text>\n";
  for (std::size_t i = 0; i < s.histogram.size(); ++i) {
    const auto& b = s.histogram[i];
    const int h = static_cast<int>(std::lround(static_cast<double>(b.count) / static_cast<double>(peak) * kHeight));
    const int x = kMargin + static_cast<int>(i) * (kBarWidth + kGap);
    const int y = kMargin + kHeight - h;
    svg << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << kBarWidth << "\" height=\"" << h
        << "\" fill=\"#4a7ab5\"><title>" << b.lo << "-" << b.hi << ": " << b.count << "</title></rect>\n";
    svg << "<text x=\"" << x + kBarWidth / 2 << "\" y=\"" << y - 3 << "\" text-anchor=\"middle\">" << b.count
        << "</text>\n";
    svg << "<text x=\"" << x + kBarWidth / 2 << "\" y=\"" << kMargin + kHeight + 14 << "\" text-anchor=\"middle\">"
        << b.lo << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

/// Documents from a JSON-lines file of {"id", "text", "meta"?} objects.
inline std::vector<Document> read_documents(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io, "cannot open " + path.string());
  std::vector<Document> docs;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      docs.push_back(nlohmann::json::parse(line).get<Document>());
    } catch (const std::exception& e) {
      throw Error(Errc::format, path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return docs;
}

inline void write_documents(std::ostream& out, const std::vector<Document>& docs) {
  for (const auto& d : docs) out << nlohmann::json(d).dump() << '\n';
}

}  // namespace textdiv
