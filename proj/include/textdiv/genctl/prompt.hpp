#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "textdiv/error.hpp"
#include "textdiv/genctl/params.hpp"
#include "textdiv/genctl/record.hpp"

namespace textdiv {

/// An instruction wording: text placed before and after the data block.
struct InstructionVariant {
  std::string id;
  std::string begin;
  std::string end;
};

class InstructionSet {
 public:
  InstructionSet() = default;
  explicit InstructionSet(std::vector<InstructionVariant> variants) : variants_(std::move(variants)) {
    if (variants_.empty()) throw Error(Errc::configuration, "instruction set is empty");
    for (std::size_t i = 0; i < variants_.size(); ++i) {
      if (variants_[i].id.empty()) throw Error(Errc::configuration, "instruction variant without id");
      for (std::size_t j = 0; j < i; ++j)
        if (variants_[j].id == variants_[i].id)
          throw Error(Errc::configuration, "duplicate instruction variant '" + variants_[i].id + "'");
    }
  }

  static InstructionSet defaults() {
    return InstructionSet({
        {"base",
         "Write a description for the music formation described by the data below. Mention where they are "
         "based, what they play and for which occasions they can be booked.",
         "Write a single paragraph of about 120 words in English."},
        {"planner",
         "An event planner is looking for live music. Using the facts below, explain why this act would be a "
         "good booking.",
         "Answer with one friendly paragraph and do not invent facts."},
        {"profile", "Create a short artist profile from the following structured data.",
         "Use a warm tone and close with an invitation to get in touch."},
        {"advert", "You are writing the listing text that appears on a booking platform. Base it on these facts.",
         "Keep it lively, concrete and under 150 words."},
    });
  }

  static InstructionSet from_json(const nlohmann::json& j) {
    std::vector<InstructionVariant> vs;
    const auto& arr = j.is_object() ? j.at("variants") : j;
    for (const auto& v : arr)
      vs.push_back({v.at("id").get<std::string>(), v.at("begin").get<std::string>(), v.at("end").get<std::string>()});
    return InstructionSet(std::move(vs));
  }

  static InstructionSet load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::io, "cannot open instruction file " + path);
    try {
      return from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::configuration, "bad instruction file " + path + ": " + e.what());
    }
  }

  const InstructionVariant& find(std::string_view id) const {
    for (const auto& v : variants_)
      if (v.id == id) return v;
    throw Error(Errc::configuration, "unknown instruction variant '" + std::string(id) + "'");
  }

  const std::vector<InstructionVariant>& variants() const noexcept { return variants_; }
  std::size_t size() const noexcept { return variants_.size(); }

 private:
  std::vector<InstructionVariant> variants_;
};

enum class PromptStyle { triplet, narrative };

inline PromptStyle parse_prompt_style(std::string_view s) {
  if (s == "triplet") return PromptStyle::triplet;
  if (s == "narrative") return PromptStyle::narrative;
  throw Error(Errc::invalid_parameter, "unknown prompt style '" + std::string(s) + "'");
}

struct PromptSpec {
  std::string instruction_variant = "base";
  std::vector<Field> field_order;
  std::vector<std::string> fewshot_examples;
  PromptStyle style = PromptStyle::narrative;
};

inline constexpr std::string_view kTripletHeader = "Describe the formation given by these data triplets.";

/// `(subject | predicate | object)`; a literal '|' inside a value would break
/// the triplet syntax and is written as '/'.
inline std::string triplet_line(const FormationRecord& r, Field f) {
  auto clean = [](std::string s) {
    std::replace(s.begin(), s.end(), '|', '/');
    std::replace(s.begin(), s.end(), '\n', ' ');
    return s;
  };
  return "(" + clean(r.name) + " | " + std::string(field_predicate(f)) + " | " + clean(*field_value(r, f)) + ")";
}

/// Field order as stored in the record (no shuffling).
inline std::vector<Field> identity_order(const FormationRecord& r) { return present_fields(r); }

inline std::vector<Field> shuffle_fields(const FormationRecord& r, std::uint64_t seed) {
  auto order = present_fields(r);
  Rng rng(mix64(seed));
  // Fisher-Yates
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[uniform_index(rng, i)]);
  return order;
}

inline std::string build_prompt(const FormationRecord& record, const PromptSpec& spec,
                                const InstructionSet& instructions = InstructionSet::defaults()) {
  validate(record);
  const auto& variant = instructions.find(spec.instruction_variant);

  auto expected = present_fields(record);
  auto given = spec.field_order;
  std::sort(expected.begin(), expected.end());
  std::sort(given.begin(), given.end());
  if (expected != given)
    throw Error(Errc::invalid_parameter, "field order must be a permutation of the record's present fields");

  std::string out;
  if (spec.style == PromptStyle::narrative) {
    out += variant.begin;
    out += "\n\n";
  } else {
    out += kTripletHeader;
    out += "\n\n";
  }
  for (std::size_t i = 0; i < spec.fewshot_examples.size(); ++i) {
    out += "Example description " + std::to_string(i + 1) + ":\n";
    out += spec.fewshot_examples[i];
    out += "\n\n";
  }
  out += "Data:\n";
  for (auto f : spec.field_order) {
    out += triplet_line(record, f);
    out += '\n';
  }
  if (spec.style == PromptStyle::narrative) {
    out += '\n';
    out += variant.end;
    out += '\n';
  }
  return out;
}

/// A data line recovered from a prompt.
struct DataTriplet {
  std::string subject;
  std::string predicate;
  std::string object;
};

/// Lines of the form `(s | p | o)`, in prompt order.
inline std::vector<DataTriplet> parse_triplets(std::string_view prompt) {
  std::vector<DataTriplet> out;
  std::size_t pos = 0;
  while (pos < prompt.size()) {
    auto eol = prompt.find('\n', pos);
    auto line = prompt.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
    pos = eol == std::string_view::npos ? prompt.size() : eol + 1;
    if (line.size() < 2 || line.front() != '(' || line.back() != ')') continue;
    line = line.substr(1, line.size() - 2);
    auto p1 = line.find(" | ");
    if (p1 == std::string_view::npos) continue;
    auto p2 = line.find(" | ", p1 + 3);
    if (p2 == std::string_view::npos) continue;
    out.push_back({std::string(line.substr(0, p1)), std::string(line.substr(p1 + 3, p2 - p1 - 3)),
                   std::string(line.substr(p2 + 3))});
  }
  return out;
}

}  // namespace textdiv
