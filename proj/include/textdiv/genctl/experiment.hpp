#pragma once

// One generation run over a corpus of records with a diversity technique.
// The loop is sequential: each generation feeds the usage ledger that sets
// the logit bias of the next one.

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "textdiv/document.hpp"
#include "textdiv/error.hpp"
#include "textdiv/genctl/backend.hpp"
#include "textdiv/genctl/bias.hpp"
#include "textdiv/genctl/params.hpp"
#include "textdiv/genctl/prompt.hpp"
#include "textdiv/genctl/record.hpp"

namespace textdiv {

enum class Technique { base, shuffled, alt_instructions, fewshot, fixed_bias, adaptive_bias };

inline std::string_view to_string(Technique t) {
  switch (t) {
    case Technique::base: return "base";
    case Technique::shuffled: return "shuffled";
    case Technique::alt_instructions: return "alt_instructions";
    case Technique::fewshot: return "fewshot";
    case Technique::fixed_bias: return "fixed_bias";
    case Technique::adaptive_bias: return "adaptive_bias";
  }
  return "base";
}

inline Technique parse_technique(std::string_view s) {
  for (auto t : {Technique::base, Technique::shuffled, Technique::alt_instructions, Technique::fewshot,
                 Technique::fixed_bias, Technique::adaptive_bias})
    if (to_string(t) == s) return t;
  throw Error(Errc::invalid_parameter, "unknown technique '" + std::string(s) + "'");
}

struct ExperimentConfig {
  Technique technique = Technique::base;
  GenerationParams params;
  /// The bias techniques force the policy kind (fixed / adaptive); other
  /// techniques use the policy as given.
  BiasPolicy policy;
  std::uint64_t seed = 0;
  PromptStyle style = PromptStyle::narrative;
  InstructionSet instructions = InstructionSet::defaults();
  std::size_t fewshot_k = 1;
  int max_retries = 2;
  std::string model_id;
};

struct ExperimentRun {
  std::vector<GenerationResult> results;
  nlohmann::json manifest;
  bool completed = false;
  std::string error;
};

inline BiasPolicy effective_policy(const ExperimentConfig& cfg) {
  auto p = cfg.policy;
  if (cfg.technique == Technique::fixed_bias) p.kind = BiasKind::fixed;
  if (cfg.technique == Technique::adaptive_bias) p.kind = BiasKind::adaptive;
  return p;
}

namespace detail {

inline std::vector<std::string> pick_fewshot(const std::vector<FormationRecord>& corpus, std::size_t self,
                                             std::size_t k, std::uint64_t seed) {
  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < corpus.size(); ++i)
    if (i != self && corpus[i].description && corpus[i].description->find_first_not_of(" \t\r\n") != std::string::npos)
      pool.push_back(i);
  Rng rng(mix64(seed ^ 0x66657773686f74ULL));
  std::vector<std::string> out;
  for (std::size_t n = 0; n < k && !pool.empty(); ++n) {
    auto j = uniform_index(rng, pool.size());
    out.push_back(*corpus[pool[j]].description);
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(j));
  }
  return out;
}

inline nlohmann::json fields_json(const std::vector<Field>& order) {
  nlohmann::json j = nlohmann::json::array();
  for (auto f : order) j.push_back(field_key(f));
  return j;
}

}  // namespace detail

inline ExperimentRun run_experiment(TextGenerationBackend& backend, const std::vector<FormationRecord>& corpus,
                                    const ExperimentConfig& cfg) {
  if (corpus.empty()) throw Error(Errc::insufficient_corpus, "experiment corpus is empty");
  validate(cfg.params);
  const auto policy = effective_policy(cfg);
  validate(policy);
  for (const auto& r : corpus) validate(r);

  ExperimentRun run;
  nlohmann::json entries = nlohmann::json::array();
  TokenUsageLedger ledger;
  const std::uint64_t base_seed = cfg.params.seed.value_or(cfg.seed);

  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& rec = corpus[i];
    PromptSpec spec;
    spec.style = cfg.style;
    spec.field_order =
        cfg.technique == Technique::shuffled ? shuffle_fields(rec, cfg.seed + i) : identity_order(rec);
    spec.instruction_variant = cfg.technique == Technique::alt_instructions
                                   ? cfg.instructions.variants()[i % cfg.instructions.size()].id
                                   : cfg.instructions.variants().front().id;
    if (cfg.technique == Technique::fewshot) spec.fewshot_examples = detail::pick_fewshot(corpus, i, cfg.fewshot_k, cfg.seed + i);

    const auto prompt = build_prompt(rec, spec, cfg.instructions);
    auto params = cfg.params;
    params.seed = base_seed + i;
    const auto feedback = update_bias(ledger, policy);
    for (const auto& [tok, b] : feedback) params.logit_bias[tok] = b;

    nlohmann::json entry{{"index", i},
                         {"record_id", rec.key()},
                         {"instruction_variant", spec.instruction_variant},
                         {"field_order", detail::fields_json(spec.field_order)},
                         {"fewshot_examples", spec.fewshot_examples.size()},
                         {"prompt", prompt},
                         {"params", params},
                         {"bias_snapshot", bias_to_json(feedback)}};

    int attempts = 0;
    while (true) {
      ++attempts;
      try {
        auto result = generate(backend, prompt, params);
        ledger.record(result.token_ids);
        std::map<TokenId, std::uint64_t> counts;
        for (auto t : result.token_ids) ++counts[t];
        nlohmann::json counts_json = nlohmann::json::object();
        for (const auto& [t, c] : counts) counts_json[std::to_string(t)] = c;
        entry["output"] = result.text;
        entry["token_ids"] = result.token_ids;
        entry["token_counts"] = counts_json;
        entry["finish_reason"] = result.finish_reason;
        entry["transcript"] = result.transcript;
        entry["attempts"] = attempts;
        run.results.push_back(std::move(result));
        break;
      } catch (const BackendError& e) {
        if (e.retriable() && attempts <= cfg.max_retries) continue;
        run.error = "record " + std::to_string(i) + " (" + rec.key() + "): " + e.what();
      } catch (const Error& e) {
        run.error = "record " + std::to_string(i) + " (" + rec.key() + "): " + e.what();
      }
      entry["attempts"] = attempts;
      entry["error"] = run.error;
      break;
    }
    entries.push_back(std::move(entry));
    if (!run.error.empty()) break;
  }

  run.completed = run.error.empty();
  run.manifest = nlohmann::json{{"technique", to_string(cfg.technique)},
                                {"backend", backend.name()},
                                {"model_id", cfg.model_id},
                                {"seed", cfg.seed},
                                {"style", cfg.style == PromptStyle::narrative ? "narrative" : "triplet"},
                                {"params", cfg.params},
                                {"policy", policy},
                                {"fewshot_k", cfg.fewshot_k},
                                {"records_total", corpus.size()},
                                {"records_done", run.results.size()},
                                {"status", run.completed ? "completed" : "aborted"},
                                {"error", run.completed ? nlohmann::json(nullptr) : nlohmann::json(run.error)},
                                {"records", std::move(entries)}};
  return run;
}

/// Generated texts as documents, one per record, tagged with model and technique.
inline std::vector<Document> run_documents(const ExperimentRun& run, const std::vector<FormationRecord>& corpus,
                                           const ExperimentConfig& cfg) {
  std::vector<Document> docs;
  for (std::size_t i = 0; i < run.results.size(); ++i) {
    Document d;
    d.id = corpus[i].key();
    d.text = run.results[i].text;
    d.meta["band"] = corpus[i].key();
    d.meta["technique"] = std::string(to_string(cfg.technique));
    if (!cfg.model_id.empty()) d.meta["model"] = cfg.model_id;
    docs.push_back(std::move(d));
  }
  return docs;
}

}  // namespace textdiv
