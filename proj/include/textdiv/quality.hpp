#pragma once

// LLM-as-judge quality scoring on four features and their aggregation into
// a single [0, 1] score (per-feature min-max normalization, then mean).

#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "textdiv/document.hpp"
#include "textdiv/error.hpp"
#include "textdiv/genctl/backend.hpp"
#include "textdiv/genctl/prompt.hpp"
#include "textdiv/genctl/record.hpp"
#include "textdiv/textproc.hpp"

namespace textdiv {

enum class Feature { fluency, naturalness, informativeness, engagingness };

inline constexpr std::array<Feature, 4> kAllFeatures = {Feature::fluency, Feature::naturalness,
                                                        Feature::informativeness, Feature::engagingness};

inline std::string_view to_string(Feature f) {
  switch (f) {
    case Feature::fluency: return "fluency";
    case Feature::naturalness: return "naturalness";
    case Feature::informativeness: return "informativeness";
    case Feature::engagingness: return "engagingness";
  }
  return "";
}

inline Feature parse_feature(std::string_view s) {
  for (auto f : kAllFeatures)
    if (to_string(f) == s) return f;
  throw Error(Errc::invalid_parameter, "unknown quality feature '" + std::string(s) + "'");
}

struct Scale {
  double lo;
  double hi;
};

inline Scale feature_scale(Feature f) {
  switch (f) {
    case Feature::fluency: return {1, 3};
    case Feature::naturalness: return {1, 3};
    case Feature::informativeness: return {1, 4};
    case Feature::engagingness: return {1, 5};
  }
  return {0, 1};
}

struct JudgeRubric {
  Feature feature = Feature::fluency;
  std::string prompt_template;  // must contain {{text}} and {{data}}
  Scale scale{1, 3};
};

inline void validate(const JudgeRubric& r) {
  if (r.prompt_template.find("{{text}}") == std::string::npos ||
      r.prompt_template.find("{{data}}") == std::string::npos)
    throw Error(Errc::configuration, "rubric template needs {{text}} and {{data}} slots");
  if (!(r.scale.lo < r.scale.hi)) throw Error(Errc::configuration, "rubric scale must have lo < hi");
}

namespace detail {

inline constexpr std::string_view kRubricFrame =
    "You will be given a description of a music act written for a booking platform, together with the "
    "structured data it was written from.\n\n"
    "Criterion: {{criterion}}\n{{definition}}\n\n"
    "Evaluation steps:\n"
    "1. Read the source data and note the facts it contains.\n"
    "2. Read the description carefully with the criterion in mind.\n"
    "3. Think step by step about how well the description meets the criterion.\n"
    "4. Assign a score from {{lo}} to {{hi}}, where {{lo}} is the lowest and {{hi}} the highest.\n\n"
    "Source data:\n{{data}}\n"
    "Description:\n{{text}}\n\n"
    "Reply with the score only, as a single number.\n";

inline void replace_all(std::string& s, std::string_view from, std::string_view to) {
  for (auto pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size()))
    s.replace(pos, from.size(), to);
}

inline std::string format_number(double v) {
  if (v == std::floor(v)) return std::to_string(static_cast<long long>(v));
  return nlohmann::json(v).dump();
}

}  // namespace detail

inline JudgeRubric default_rubric(Feature f) {
  std::string criterion, definition;
  switch (f) {
    case Feature::fluency:
      criterion = "Fluency";
      definition = "Is the text well formed and grammatical, free of broken or missing words?";
      break;
    case Feature::naturalness:
      criterion = "Naturalness";
      definition = "Could the text plausibly have been written by a person rather than a machine?";
      break;
    case Feature::informativeness:
      criterion = "Informativeness";
      definition = "Does the text convey all of the information given in the source data?";
      break;
    case Feature::engagingness:
      criterion = "Engagingness";
      definition = "Is the text interesting to read, and would it make an event planner want to book the act?";
      break;
  }
  JudgeRubric r;
  r.feature = f;
  r.scale = feature_scale(f);
  r.prompt_template = std::string(detail::kRubricFrame);
  detail::replace_all(r.prompt_template, "{{criterion}}", criterion);
  detail::replace_all(r.prompt_template, "{{definition}}", definition);
  return r;
}

inline std::vector<JudgeRubric> default_rubrics() {
  std::vector<JudgeRubric> out;
  for (auto f : kAllFeatures) out.push_back(default_rubric(f));
  return out;
}

/// Rubrics from a JSON config: [{"feature": "...", "template": "...", "lo": 1, "hi": 3}, ...].
inline std::vector<JudgeRubric> rubrics_from_json(const nlohmann::json& j) {
  std::vector<JudgeRubric> out;
  for (const auto& e : j) {
    JudgeRubric r;
    r.feature = parse_feature(e.at("feature").get<std::string>());
    r.prompt_template = e.at("template").get<std::string>();
    r.scale = {e.value("lo", feature_scale(r.feature).lo), e.value("hi", feature_scale(r.feature).hi)};
    validate(r);
    out.push_back(std::move(r));
  }
  return out;
}

/// Source data block shown to the judge, in the record's own field order.
inline std::string judge_data_block(const FormationRecord& record) {
  std::string out;
  for (auto f : identity_order(record)) out += triplet_line(record, f) + "\n";
  return out;
}

inline std::string fill_rubric(const JudgeRubric& rubric, const Document& doc, const FormationRecord& record) {
  validate(rubric);
  auto prompt = rubric.prompt_template;
  detail::replace_all(prompt, "{{lo}}", detail::format_number(rubric.scale.lo));
  detail::replace_all(prompt, "{{hi}}", detail::format_number(rubric.scale.hi));
  // Data first: the text may itself contain "{{data}}".
  detail::replace_all(prompt, "{{data}}", judge_data_block(record));
  detail::replace_all(prompt, "{{text}}", doc.text);
  return prompt;
}

/// The single in-range number of a judge response. Repeats of the same value
/// count once ("3 out of 3" is fine for a [1, 3] scale); anything else that
/// leaves more than one candidate is ambiguous and rejected.
inline double parse_judge_score(const std::string& response, Scale scale) {
  static const std::regex number(R"((^|[^0-9.])(-?[0-9]+(\.[0-9]+)?))");
  std::set<double> in_range;
  bool any = false;
  for (auto it = std::sregex_iterator(response.begin(), response.end(), number); it != std::sregex_iterator(); ++it) {
    any = true;
    const double v = std::stod((*it)[2].str());
    if (v >= scale.lo && v <= scale.hi) in_range.insert(v);
  }
  if (in_range.size() == 1) return *in_range.begin();
  if (in_range.size() > 1) throw JudgeError(Errc::judge_parse, "response holds several in-range scores", response);
  if (any) throw JudgeError(Errc::judge_range, "score outside the rubric scale", response);
  throw JudgeError(Errc::judge_parse, "response holds no score", response);
}

inline double judge(const Document& doc, const FormationRecord& record, const JudgeRubric& rubric,
                    TextGenerationBackend& backend) {
  GenerationParams params;
  params.temperature = 0.0;
  params.max_tokens = 64;
  const auto result = generate(backend, fill_rubric(rubric, doc, record), params);
  return parse_judge_score(result.text, rubric.scale);
}

struct QualityScores {
  double fluency = 1;
  double naturalness = 1;
  double informativeness = 1;
  double engagingness = 1;
  double overall = 0;

  double get(Feature f) const {
    switch (f) {
      case Feature::fluency: return fluency;
      case Feature::naturalness: return naturalness;
      case Feature::informativeness: return informativeness;
      case Feature::engagingness: return engagingness;
    }
    return 0;
  }
};

using FeatureScores = std::map<Feature, double>;

inline QualityScores aggregate(const FeatureScores& scores) {
  QualityScores q;
  double sum = 0.0;
  for (auto f : kAllFeatures) {
    auto it = scores.find(f);
    if (it == scores.end())
      throw Error(Errc::incomplete_scores, "missing score for " + std::string(to_string(f)));
    const auto s = feature_scale(f);
    if (!(it->second >= s.lo && it->second <= s.hi))
      throw Error(Errc::judge_range, std::string(to_string(f)) + " score outside its scale");
    sum += (it->second - s.lo) / (s.hi - s.lo);
  }
  q.fluency = scores.at(Feature::fluency);
  q.naturalness = scores.at(Feature::naturalness);
  q.informativeness = scores.at(Feature::informativeness);
  q.engagingness = scores.at(Feature::engagingness);
  q.overall = sum / static_cast<double>(kAllFeatures.size());
  return q;
}

inline QualityScores score_document(const Document& doc, const FormationRecord& record,
                                    const std::vector<JudgeRubric>& rubrics, TextGenerationBackend& backend) {
  FeatureScores s;
  for (const auto& r : rubrics) s[r.feature] = judge(doc, record, r, backend);
  return aggregate(s);
}

inline nlohmann::json to_json(const QualityScores& q) {
  return {{"fluency", q.fluency},
          {"naturalness", q.naturalness},
          {"informativeness", q.informativeness},
          {"engagingness", q.engagingness},
          {"overall", q.overall}};
}

/// Offline stand-in judge. Reads the criterion, scale, source triplets and
/// description back out of a rubric prompt and answers "Score: N":
/// informativeness from the share of data values mentioned, the other
/// features from the distinct-token ratio of the description.
inline std::string heuristic_judge_response(const std::string& prompt) {
  auto between = [&](std::string_view open, std::string_view close) -> std::string {
    auto b = prompt.find(open);
    if (b == std::string::npos) return {};
    b += open.size();
    auto e = prompt.find(close, b);
    return prompt.substr(b, e == std::string::npos ? std::string::npos : e - b);
  };
  const auto criterion = fold_case(between("Criterion: ", "\n"));
  std::smatch m;
  static const std::regex scale_re(R"(score from ([0-9]+) to ([0-9]+))");
  double lo = 1, hi = 5;
  if (std::regex_search(prompt, m, scale_re)) {
    lo = std::stod(m[1].str());
    hi = std::stod(m[2].str());
  }
  const auto text = between("Description:\n", "\n\nReply with");
  const auto tokens = tokenize(text).tokens;
  double fraction = 0.0;
  if (criterion == "informativeness") {
    const auto data = parse_triplets(between("Source data:\n", "Description:\n"));
    std::set<std::string> vocab(tokens.begin(), tokens.end());
    std::size_t covered = 0;
    for (const auto& t : data) {
      const auto words = tokenize(t.object).tokens;
      if (std::all_of(words.begin(), words.end(), [&](const auto& w) { return vocab.count(w) > 0; })) ++covered;
    }
    fraction = data.empty() ? 0.0 : static_cast<double>(covered) / static_cast<double>(data.size());
  } else if (!tokens.empty()) {
    fraction = static_cast<double>(std::set<std::string>(tokens.begin(), tokens.end()).size()) /
               static_cast<double>(tokens.size());
  }
  return "Score: " + std::to_string(static_cast<long long>(std::lround(lo + fraction * (hi - lo))));
}

}  // namespace textdiv
