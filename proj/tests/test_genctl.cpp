#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <set>

#include "textdiv/corpus.hpp"
#include "textdiv/genctl/experiment.hpp"
#include "textdiv/genctl/mock_backend.hpp"
#include "textdiv/jaccdiv.hpp"

using namespace textdiv;

namespace {

FormationRecord velvet() {
  FormationRecord r;
  r.id = "b01";
  r.name = "The Velvet Foxes";
  r.formation_type = "Band";
  r.homebase = "Berlin";
  r.radius_km = 200;
  r.genres = {"Pop", "Jazz", "Lounge"};
  r.event_types = {"Wedding", "Corporate"};
  return r;
}

std::vector<FormationRecord> fixture() {
  return ingest(std::string(TEXTDIV_TEST_DATA) + "/bands.jsonl").records;
}

std::vector<std::string> data_lines(const std::string& prompt) {
  std::vector<std::string> out;
  for (const auto& t : parse_triplets(prompt)) out.push_back(t.subject + "|" + t.predicate + "|" + t.object);
  std::sort(out.begin(), out.end());
  return out;
}

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return Errc::io;
}

double run_diversity(const std::vector<FormationRecord>& corpus, Technique t, std::uint64_t seed) {
  MockBackend backend;
  ExperimentConfig cfg;
  cfg.technique = t;
  cfg.seed = seed;
  auto run = run_experiment(backend, corpus, cfg);
  return corpus_jaccdiv(run_documents(run, corpus, cfg)).mean_diversity;
}

}  // namespace

// --- records and prompts

TEST(Record, ValidationAndJson) {
  auto r = velvet();
  EXPECT_NO_THROW(validate(r));
  auto j = nlohmann::json(r);
  EXPECT_EQ(j["type"], "Band");
  EXPECT_FALSE(j.contains("description"));
  EXPECT_EQ(j.get<FormationRecord>().genres, r.genres);
  r.name.clear();
  EXPECT_EQ(code_of([&] { validate(r); }), Errc::invalid_parameter);
  auto s = nlohmann::json::parse(R"({"name":"X","genres":"Pop; Rock","radius_km":"50"})").get<FormationRecord>();
  EXPECT_EQ(s.genres, (std::vector<std::string>{"Pop", "Rock"}));
  EXPECT_EQ(*s.radius_km, 50.0);
  EXPECT_EQ(code_of([] { nlohmann::json::parse(R"({"name":"X","radius_km":-1})").get<FormationRecord>(); }),
            Errc::invalid_parameter);
}

TEST(Prompt, GenreOrderKept) {
  auto p = build_prompt(velvet(), {.field_order = identity_order(velvet())});
  EXPECT_NE(p.find("(The Velvet Foxes | genre | Pop, Jazz, Lounge)"), std::string::npos);
  EXPECT_NE(p.find("(The Velvet Foxes | travel radius | 200 km)"), std::string::npos);
}

TEST(Prompt, FieldOrderPermutesLinesOnly) {
  auto r = velvet();
  PromptSpec a{.field_order = identity_order(r)};
  PromptSpec b = a;
  std::reverse(b.field_order.begin(), b.field_order.end());
  auto pa = build_prompt(r, a), pb = build_prompt(r, b);
  EXPECT_NE(pa, pb);
  EXPECT_EQ(data_lines(pa), data_lines(pb));
}

TEST(Prompt, FewshotPrecedesData) {
  PromptSpec s{.field_order = identity_order(velvet()), .fewshot_examples = {"FIRST EXAMPLE", "SECOND EXAMPLE"}};
  auto p = build_prompt(velvet(), s);
  auto first = p.find("FIRST EXAMPLE"), second = p.find("SECOND EXAMPLE"), data = p.find("Data:");
  ASSERT_NE(first, std::string::npos);
  EXPECT_LT(first, second);
  EXPECT_LT(second, data);
}

TEST(Prompt, StylesAndVariants) {
  auto r = velvet();
  auto set = InstructionSet::defaults();
  PromptSpec s{.instruction_variant = "planner", .field_order = identity_order(r)};
  auto p = build_prompt(r, s, set);
  EXPECT_EQ(p.rfind(set.find("planner").begin, 0), 0u);
  EXPECT_NE(p.find(set.find("planner").end), std::string::npos);
  s.style = PromptStyle::triplet;
  EXPECT_EQ(build_prompt(r, s, set).rfind(std::string(kTripletHeader), 0), 0u);
  s.instruction_variant = "nope";
  EXPECT_EQ(code_of([&] { build_prompt(r, s, set); }), Errc::configuration);
}

TEST(Prompt, FieldOrderMustCoverPresentFields) {
  auto r = velvet();
  PromptSpec s{.field_order = identity_order(r)};
  s.field_order.pop_back();
  EXPECT_EQ(code_of([&] { build_prompt(r, s); }), Errc::invalid_parameter);
  s.field_order = identity_order(r);
  s.field_order.push_back(Field::name);
  EXPECT_EQ(code_of([&] { build_prompt(r, s); }), Errc::invalid_parameter);
}

TEST(Prompt, InstructionFile) {
  auto set = InstructionSet::load(std::string(TEXTDIV_SOURCE_DIR) + "/data/instructions.json");
  EXPECT_EQ(set.size(), InstructionSet::defaults().size());
  EXPECT_EQ(code_of([] { InstructionSet(std::vector<InstructionVariant>{{"a", "x", "y"}, {"a", "z", "w"}}); }),
            Errc::configuration);
}

TEST(Shuffle, SingleFieldAndDeterminism) {
  FormationRecord r;
  r.name = "Solo";
  EXPECT_EQ(shuffle_fields(r, 99), std::vector<Field>{Field::name});
  EXPECT_EQ(shuffle_fields(velvet(), 1234), shuffle_fields(velvet(), 1234));
}

TEST(Shuffle, PermutationsRoughlyUniform) {
  FormationRecord r = velvet();
  r.event_types.clear();  // 5 present fields
  ASSERT_EQ(present_fields(r).size(), 5u);
  std::map<std::vector<Field>, int> seen;
  const int seeds = 10000;
  for (int s = 0; s < seeds; ++s) ++seen[shuffle_fields(r, static_cast<std::uint64_t>(s))];
  ASSERT_EQ(seen.size(), 120u);
  const double expected = seeds / 120.0;
  for (const auto& [perm, count] : seen) {
    EXPECT_LE(count, 5 * expected);
    EXPECT_GE(count, expected / 5);
  }
}

// --- bias

TEST(Bias, EmptyLedger) {
  TokenUsageLedger ledger;
  for (auto k : {BiasKind::none, BiasKind::fixed, BiasKind::adaptive})
    EXPECT_TRUE(update_bias(ledger, {.kind = k}).empty());
}

TEST(Bias, FixedTopK) {
  TokenUsageLedger ledger;
  std::vector<TokenId> toks;
  for (int i = 0; i < 30; ++i) toks.push_back(1);
  for (int i = 0; i < 20; ++i) toks.push_back(2);
  for (int i = 0; i < 5; ++i) toks.push_back(3);
  ledger.record(toks);
  auto b = update_bias(ledger, {.kind = BiasKind::fixed, .top_k = 2});
  EXPECT_EQ(b, (LogitBias{{1, -50.0}, {2, -50.0}}));
}

TEST(Bias, AdaptiveFormula) {
  TokenUsageLedger ledger;
  std::vector<TokenId> toks(80, 1);
  toks.insert(toks.end(), 10, 2);
  ledger.record(toks);
  auto b = update_bias(ledger, {.kind = BiasKind::adaptive, .adaptive_scale = 2.0, .cap = 100});
  EXPECT_EQ(b, (LogitBias{{1, -100.0}, {2, -20.0}}));
}

TEST(Bias, TiesByTokenId) {
  TokenUsageLedger ledger;
  std::vector<TokenId> toks{9, 4, 7, 4, 9, 7};
  ledger.record(toks);
  auto top = ledger.top(2);
  EXPECT_EQ(top[0].first, 4);
  EXPECT_EQ(top[1].first, 7);
}

TEST(Bias, InvalidPolicy) {
  EXPECT_EQ(code_of([] { validate(BiasPolicy{.adaptive_scale = 0}); }), Errc::invalid_parameter);
  EXPECT_EQ(code_of([] { validate(BiasPolicy{.cap = 150}); }), Errc::invalid_parameter);
  EXPECT_EQ(code_of([] { validate(BiasPolicy{.fixed_value = 5}); }), Errc::invalid_parameter);
  EXPECT_EQ(code_of([] { parse_bias_kind("huge"); }), Errc::invalid_parameter);
}

// --- params and sampler

TEST(Params, Ranges) {
  EXPECT_EQ(code_of([] { validate(GenerationParams{.temperature = 2.5}); }), Errc::invalid_parameter);
  EXPECT_EQ(code_of([] { validate(GenerationParams{.top_p = 0.0}); }), Errc::invalid_parameter);
  EXPECT_EQ(code_of([] { validate(GenerationParams{.logit_bias = {{1, -101}}}); }), Errc::invalid_parameter);
  EXPECT_EQ(code_of([] { validate(GenerationParams{.max_tokens = 0}); }), Errc::invalid_parameter);
  GenerationParams p{.temperature = 0.7, .logit_bias = {{5, -50}}, .seed = 3};
  auto back = nlohmann::json(p).get<GenerationParams>();
  EXPECT_EQ(back.logit_bias, p.logit_bias);
  EXPECT_EQ(back.seed, p.seed);
  EXPECT_EQ(nlohmann::json(p)["logit_bias"].begin().key(), "5");
}

TEST(Sampler, TemperatureZeroIsArgmax) {
  std::vector<double> logits(60, 0.0);
  logits[17] = 3.0;
  logits[40] = 3.0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    Rng rng(s);
    EXPECT_EQ(mock_sample_next(rng, logits, {.temperature = 0.0}), 17);
  }
}

TEST(Sampler, TopPOneKeepsEverything) {
  std::vector<double> logits(60);
  for (std::size_t i = 0; i < logits.size(); ++i) logits[i] = static_cast<double>(i % 7);
  auto c = nucleus_candidates(logits, {.top_p = 1.0, .logit_bias = {{3, -100}}});
  EXPECT_EQ(c.ids.size(), 59u);
}

TEST(Sampler, UniformTopPHalf) {
  std::vector<double> logits(4, 1.0);
  auto c = nucleus_candidates(logits, {.top_p = 0.5});
  EXPECT_EQ(c.ids.size(), 2u);
  EXPECT_DOUBLE_EQ(c.probs[0], 0.5);
}

TEST(Sampler, HardExclusionAndErrors) {
  std::vector<double> logits(50, 0.0);
  logits[7] = 100.0;
  Rng rng(1);
  for (int i = 0; i < 200; ++i) EXPECT_NE(mock_sample_next(rng, logits, {.logit_bias = {{7, -100}}}), 7);
  LogitBias all;
  for (TokenId t = 0; t < 50; ++t) all[t] = -100;
  EXPECT_EQ(code_of([&] { nucleus_candidates(logits, {.logit_bias = all}); }), Errc::empty_candidates);
  EXPECT_EQ(code_of([&] { nucleus_candidates(logits, {.logit_bias = {{50, -1}}}); }), Errc::invalid_bias);
}

// --- mock backend

TEST(Mock, TemperatureZeroDeterministic) {
  MockBackend a, b;
  const auto prompt = build_prompt(velvet(), {.field_order = identity_order(velvet())});
  GenerationParams p{.temperature = 0.0};
  auto first = generate(a, prompt, p).text;
  EXPECT_EQ(generate(a, prompt, p).text, first);
  EXPECT_EQ(generate(b, prompt, p).text, first);
  EXPECT_FALSE(first.empty());
}

TEST(Mock, SeededCallsReplay) {
  const auto prompt = build_prompt(velvet(), {.field_order = identity_order(velvet())});
  MockBackend a, b;
  GenerationParams p{.seed = 42};
  auto ra = generate(a, prompt, p), rb = generate(b, prompt, p);
  EXPECT_EQ(ra.text, rb.text);
  EXPECT_EQ(ra.token_ids, rb.token_ids);
  EXPECT_EQ(ra.prompt_used, prompt);
}

TEST(Mock, TokenIdsDetokenize) {
  MockBackend m;
  auto r = generate(m, build_prompt(velvet(), {.field_order = identity_order(velvet())}), {.seed = 1});
  std::string text;
  for (std::size_t i = 0; i < r.token_ids.size(); ++i) text += (i ? " " : "") + m.token_text(r.token_ids[i]);
  EXPECT_EQ(text, r.text);
}

TEST(Mock, BiasExcludesToken) {
  MockBackend m;
  const auto prompt = build_prompt(velvet(), {.field_order = identity_order(velvet())});
  auto plain = generate(m, prompt, {.seed = 5});
  ASSERT_FALSE(plain.token_ids.empty());
  const auto banned = plain.token_ids.front();
  auto biased = generate(m, prompt, {.logit_bias = {{banned, -100}}, .seed = 5});
  EXPECT_EQ(std::count(biased.token_ids.begin(), biased.token_ids.end(), banned), 0);
  EXPECT_EQ(code_of([&] { generate(m, prompt, {.logit_bias = {{999999, -10}}}); }), Errc::invalid_bias);
}

TEST(Mock, CopiesDataWords) {
  MockBackend m;
  auto r = generate(m, build_prompt(velvet(), {.field_order = identity_order(velvet())}), {.temperature = 0.0});
  EXPECT_NE(r.text.find("berlin"), std::string::npos);
  EXPECT_NE(r.text.find("jazz"), std::string::npos);
}

TEST(Mock, MaxTokensStopsWithLength) {
  MockBackend m;
  auto r = generate(m, build_prompt(velvet(), {.field_order = identity_order(velvet())}), {.max_tokens = 3});
  EXPECT_EQ(r.token_ids.size(), 3u);
  EXPECT_EQ(r.finish_reason, "length");
}

TEST(Mock, HighTemperatureMoreDiverse) {
  const auto prompt = build_prompt(velvet(), {.field_order = identity_order(velvet())});
  auto corpus_at = [&](double t) {
    MockBackend m;
    std::vector<Document> docs;
    for (int i = 0; i < 20; ++i)
      docs.push_back({"g" + std::to_string(i),
                      generate(m, prompt, {.temperature = t, .seed = static_cast<std::uint64_t>(i)}).text, {}});
    return corpus_jaccdiv(docs).mean_diversity;
  };
  EXPECT_GT(corpus_at(1.6), corpus_at(0.0));
}

// --- experiments

TEST(Experiment, BaseUsesNoBias) {
  MockBackend m;
  ExperimentConfig cfg;
  auto run = run_experiment(m, fixture(), cfg);
  ASSERT_TRUE(run.completed);
  for (const auto& r : run.results) EXPECT_TRUE(r.params_used.logit_bias.empty());
  for (const auto& e : run.manifest["records"]) EXPECT_TRUE(e["bias_snapshot"].empty());
}

TEST(Experiment, AlternateInstructionsCycle) {
  MockBackend m;
  ExperimentConfig cfg{.technique = Technique::alt_instructions};
  auto run = run_experiment(m, fixture(), cfg);
  const auto& v = cfg.instructions.variants();
  for (std::size_t i = 0; i < run.results.size(); ++i)
    EXPECT_EQ(run.manifest["records"][i]["instruction_variant"], v[i % v.size()].id);
}

TEST(Experiment, FewshotUsesOtherDescriptions) {
  MockBackend m;
  auto corpus = fixture();
  ExperimentConfig cfg{.technique = Technique::fewshot, .fewshot_k = 2};
  auto run = run_experiment(m, corpus, cfg);
  for (std::size_t i = 0; i < run.results.size(); ++i) {
    EXPECT_EQ(run.manifest["records"][i]["fewshot_examples"], 2);
    if (corpus[i].description) {
      EXPECT_EQ(run.results[i].prompt_used.find(*corpus[i].description), std::string::npos);
    }
  }
}

TEST(Experiment, ShuffledReseedsPerRecord) {
  MockBackend m;
  auto corpus = fixture();
  ExperimentConfig cfg{.technique = Technique::shuffled, .seed = 3};
  auto run = run_experiment(m, corpus, cfg);
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    nlohmann::json order = nlohmann::json::array();
    for (auto f : shuffle_fields(corpus[i], 3 + i)) order.push_back(field_key(f));
    EXPECT_EQ(run.manifest["records"][i]["field_order"], order);
  }
}

TEST(Experiment, ManifestReplayIsByteIdentical) {
  auto corpus = fixture();
  for (auto t : {Technique::base, Technique::shuffled, Technique::fewshot, Technique::adaptive_bias}) {
    MockBackend a, b;
    ExperimentConfig cfg{.technique = t, .seed = 7};
    EXPECT_EQ(run_experiment(a, corpus, cfg).manifest.dump(), run_experiment(b, corpus, cfg).manifest.dump());
  }
}

TEST(Experiment, ManifestContents) {
  MockBackend m;
  ExperimentConfig cfg{.technique = Technique::fixed_bias, .seed = 1};
  auto run = run_experiment(m, fixture(), cfg);
  const auto& j = run.manifest;
  EXPECT_EQ(j["status"], "completed");
  EXPECT_EQ(j["policy"]["kind"], "fixed");
  EXPECT_EQ(j["records_done"], 20);
  const auto& second = j["records"][1];
  for (const auto* key : {"prompt", "params", "bias_snapshot", "output", "token_counts", "finish_reason"})
    EXPECT_TRUE(second.contains(key)) << key;
  for (const auto& [tok, b] : second["bias_snapshot"].items()) EXPECT_EQ(b.get<double>(), -50.0);
  EXPECT_FALSE(second["bias_snapshot"].empty());
}

TEST(Experiment, BiasesStayInRangeAndExcludedTokensNeverAppear) {
  MockBackend m;
  ExperimentConfig cfg{.technique = Technique::adaptive_bias, .seed = 2};
  auto run = run_experiment(m, fixture(), cfg);
  for (const auto& r : run.results) {
    for (const auto& [tok, b] : r.params_used.logit_bias) {
      EXPECT_GE(b, -100.0);
      EXPECT_LE(b, 0.0);
      if (b <= -100.0) {
        EXPECT_EQ(std::count(r.token_ids.begin(), r.token_ids.end(), tok), 0);
      }
    }
  }
}

TEST(Experiment, FailureAbortsWithPartialManifest) {
  int calls = 0;
  ScriptedBackend flaky([&](const std::string&, const GenerationParams&) -> std::string {
    if (++calls == 3) throw BackendError("connection reset", false);
    return "fine text";
  });
  auto run = run_experiment(flaky, fixture(), {});
  EXPECT_FALSE(run.completed);
  EXPECT_EQ(run.results.size(), 2u);
  EXPECT_EQ(run.manifest["status"], "aborted");
  EXPECT_EQ(run.manifest["records"].size(), 3u);
  EXPECT_TRUE(run.manifest["records"][2].contains("error"));
}

TEST(Experiment, RetriableErrorsRetried) {
  int calls = 0;
  ScriptedBackend flaky([&](const std::string&, const GenerationParams&) -> std::string {
    if (++calls % 2 == 1) throw BackendError("429", true);
    return "ok";
  });
  auto run = run_experiment(flaky, fixture(), {.max_retries = 1});
  EXPECT_TRUE(run.completed);
  EXPECT_EQ(run.manifest["records"][0]["attempts"], 2);
}

TEST(Experiment, DirectionalOrdering) {
  auto corpus = fixture();
  for (std::uint64_t seed : {1, 7, 42}) {
    const auto base = run_diversity(corpus, Technique::base, seed);
    const auto shuffled = run_diversity(corpus, Technique::shuffled, seed);
    const auto fixed = run_diversity(corpus, Technique::fixed_bias, seed);
    const auto adaptive = run_diversity(corpus, Technique::adaptive_bias, seed);
    EXPECT_GE(adaptive, fixed) << "seed " << seed;
    EXPECT_GE(fixed, base) << "seed " << seed;
    EXPECT_GE(shuffled, base) << "seed " << seed;
  }
}

TEST(Experiment, EmptyCorpus) {
  MockBackend m;
  EXPECT_EQ(code_of([&] { run_experiment(m, {}, {}); }), Errc::insufficient_corpus);
}
