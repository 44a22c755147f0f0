#include <gtest/gtest.h>

#include <fstream>

#include "textdiv/genctl/mock_backend.hpp"
#include "textdiv/quality.hpp"

using namespace textdiv;

namespace {

FormationRecord record() {
  FormationRecord r;
  r.name = "Golden Hour";
  r.homebase = "Hamburg";
  r.genres = {"Acoustic", "Folk"};
  return r;
}

ScriptedBackend answering(std::string reply) {
  return ScriptedBackend([reply](const std::string&, const GenerationParams&) { return reply; });
}

Errc judge_error(const std::string& reply, Feature f = Feature::fluency) {
  auto backend = answering(reply);
  try {
    judge({"d", "some text", {}}, record(), default_rubric(f), backend);
  } catch (const JudgeError& e) {
    EXPECT_EQ(e.raw_response(), reply);
    return e.code();
  }
  ADD_FAILURE() << "no judge error for '" << reply << "'";
  return Errc::io;
}

}  // namespace

TEST(Judge, EchoedScore) {
  auto backend = answering("3");
  EXPECT_EQ(judge({"d", "text", {}}, record(), default_rubric(Feature::fluency), backend), 3.0);
}

TEST(Judge, ParseErrors) {
  EXPECT_EQ(judge_error("great text!"), Errc::judge_parse);
  EXPECT_EQ(judge_error("7"), Errc::judge_range);
  EXPECT_EQ(judge_error("2 or maybe 3"), Errc::judge_parse);
  EXPECT_EQ(judge_error(""), Errc::judge_parse);
}

TEST(Judge, ParserRobustness) {
  const Scale s{1, 5};
  EXPECT_EQ(parse_judge_score("Score: 4", s), 4.0);
  EXPECT_EQ(parse_judge_score("After reflection, 3.5.", s), 3.5);
  EXPECT_EQ(parse_judge_score("4 out of 4, then 4 again; 0 issues found", s), 4.0);
  EXPECT_EQ(parse_judge_score("Rating 2 (on a 10 point idea)", s), 2.0);
  EXPECT_THROW(parse_judge_score("1 2", s), JudgeError);
  EXPECT_THROW(parse_judge_score("-3", s), JudgeError);
}

TEST(Judge, PromptCarriesDataAndText) {
  std::string seen;
  ScriptedBackend backend([&](const std::string& prompt, const GenerationParams& p) {
    seen = prompt;
    EXPECT_EQ(p.temperature, 0.0);
    return std::string("2");
  });
  judge({"d", "A CANDIDATE TEXT", {}}, record(), default_rubric(Feature::informativeness), backend);
  EXPECT_NE(seen.find("A CANDIDATE TEXT"), std::string::npos);
  EXPECT_NE(seen.find("(Golden Hour | based in | Hamburg)"), std::string::npos);
  EXPECT_NE(seen.find("from 1 to 4"), std::string::npos);
  EXPECT_EQ(seen.find("{{"), std::string::npos);
}

TEST(Rubric, ValidationAndConfigFile) {
  JudgeRubric bad{Feature::fluency, "no slots here", {1, 3}};
  EXPECT_THROW(validate(bad), Error);
  std::ifstream in(std::string(TEXTDIV_SOURCE_DIR) + "/data/rubrics.json");
  auto rubrics = rubrics_from_json(nlohmann::json::parse(in));
  ASSERT_EQ(rubrics.size(), 4u);
  for (const auto& r : rubrics) EXPECT_EQ(r.prompt_template, default_rubric(r.feature).prompt_template);
}

TEST(Aggregate, Bounds) {
  FeatureScores lo, hi;
  for (auto f : kAllFeatures) {
    lo[f] = feature_scale(f).lo;
    hi[f] = feature_scale(f).hi;
  }
  EXPECT_EQ(aggregate(lo).overall, 0.0);
  EXPECT_EQ(aggregate(hi).overall, 1.0);
}

TEST(Aggregate, TableRow) {
  auto q = aggregate({{Feature::fluency, 2.94},
                      {Feature::naturalness, 2.98},
                      {Feature::informativeness, 3.00},
                      {Feature::engagingness, 4.00}});
  EXPECT_NEAR(q.overall, 0.8441666666666666, 1e-12);
  EXPECT_NEAR(q.overall, 0.844, 1e-3);
}

TEST(Aggregate, MonotoneInEachFeature) {
  FeatureScores s{{Feature::fluency, 2}, {Feature::naturalness, 2}, {Feature::informativeness, 2},
                  {Feature::engagingness, 2}};
  const auto base = aggregate(s).overall;
  for (auto f : kAllFeatures) {
    auto up = s;
    up[f] += 0.5;
    EXPECT_GT(aggregate(up).overall, base);
  }
}

TEST(Aggregate, Errors) {
  FeatureScores s{{Feature::fluency, 2}, {Feature::naturalness, 2}, {Feature::informativeness, 2}};
  try {
    aggregate(s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::incomplete_scores);
  }
  s[Feature::engagingness] = 9;
  EXPECT_THROW(aggregate(s), Error);
}

TEST(HeuristicJudge, ScoresEveryFeatureInRange) {
  ScriptedBackend judge_backend([](const std::string& p, const GenerationParams&) { return heuristic_judge_response(p); });
  Document full{"d", "Golden Hour from Hamburg plays acoustic folk music", {}};
  auto q = score_document(full, record(), default_rubrics(), judge_backend);
  EXPECT_EQ(q.informativeness, 4.0);
  EXPECT_GE(q.overall, 0.0);
  EXPECT_LE(q.overall, 1.0);
  Document none{"d", "music music music music", {}};
  auto p = score_document(none, record(), default_rubrics(), judge_backend);
  EXPECT_EQ(p.informativeness, 1.0);
  EXPECT_LT(p.fluency, q.fluency);
}
