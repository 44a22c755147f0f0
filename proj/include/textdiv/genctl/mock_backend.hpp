#pragma once

// Deterministic toy language model for offline experiments.
//
// The model reads the data triplets out of the prompt and walks them in prompt
// order. For each triplet it emits a few "filler" tokens from a hashed bigram
// table conditioned on (instruction style, predicate, previous token), then
// tries to copy the object's words by boosting each due word's logit. A short
// closing phrase follows the last triplet. Every token, copied or not, goes
// through mock_sample_next, so logit bias, temperature and top-p apply to the
// whole output.

#include <atomic>
#include <cstdint>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "textdiv/error.hpp"
#include "textdiv/genctl/backend.hpp"
#include "textdiv/genctl/params.hpp"
#include "textdiv/genctl/prompt.hpp"
#include "textdiv/genctl/sampler.hpp"
#include "textdiv/textproc.hpp"

namespace textdiv {

inline const std::vector<std::string>& default_mock_vocabulary() {
  static const std::vector<std::string> vocab = [] {
    // Function words and marketing filler first, domain words after.
    static constexpr const char* kWords =
        "the a an and or but with for from to of in on at by as is are was be been it its they their them "
        "this that these those who which what when where while also very more most so such just only "
        "can will would could should may might must do does did have has had not no all every each some "
        "any many much few both other another same own new old great good best fine lovely wonderful "
        "amazing fantastic brilliant excellent perfect special unique fresh young experienced professional "
        "talented passionate energetic relaxed warm friendly elegant classic modern timeless unforgettable "
        "memorable authentic original versatile dynamic vibrant soulful smooth groovy catchy powerful gentle "
        "intimate festive stylish tight seasoned local regional international popular beloved renowned "
        "band group duo trio quartet quintet ensemble orchestra singer musician musicians artist artists "
        "dj solo act performer performers crew collective project formation lineup vocals vocalist guitar "
        "guitarist bass bassist drums drummer piano pianist keys saxophone trumpet violin voice "
        "music sound sounds songs song tunes hits covers repertoire set sets setlist program show shows "
        "performance performances concert concerts gig gigs stage audience guests crowd people fans "
        "dance dancing floor night evening party parties event events occasion occasions celebration "
        "celebrations atmosphere mood vibe energy experience moments memories style styles mix blend range "
        "play plays playing played perform performs performing bring brings bringing create creates "
        "creating offer offers offering deliver delivers delivering make makes making keep keeps love loves "
        "enjoy enjoys invite book booking booked hire available travel travels traveling ready happy "
        "based home hometown city region area around near within up km kilometers distance radius across "
        "whole entire country germany europe everywhere "
        "wedding weddings birthday birthdays corporate company companies festival festivals club clubs bar "
        "bars restaurant restaurants private public garden christmas anniversary reception gala dinner "
        "street market fair church funeral graduation "
        "pop rock jazz blues soul funk disco house techno electronic hip hop rap reggae latin salsa swing "
        "country folk classical acoustic indie metal punk schlager oldies evergreens lounge ambient chill "
        "rnb gospel world balkan irish celtic tango bossa nova musical "
        "berlin munich hamburg cologne frankfurt stuttgart leipzig dresden vienna zurich bremen hanover "
        "nuremberg bonn mainz "
        "velvet foxes rockets blue notes golden hour silver moon night owls river cats summer wind "
        "red lanterns jazz cats city lights brass kings groove factory soul sisters echo park northern "
        "stars paper planes wild honey lucky strings "
        "10 20 25 30 40 50 60 75 80 100 120 150 200 250 300 500 "
        "first next then after before over under together always never ever here there now today "
        "really truly simply every one two three more than into out about like well";
    std::vector<std::string> out;
    std::istringstream in(kWords);
    std::string w;
    std::unordered_map<std::string, bool> seen;
    while (in >> w)
      if (!seen[w]) {
        seen[w] = true;
        out.push_back(w);
      }
    return out;
  }();
  return vocab;
}

struct MockModelConfig {
  std::vector<std::string> vocabulary = default_mock_vocabulary();
  std::uint64_t model_seed = 0x6d6f636b;
  int filler_per_triplet = 4;
  int closing_tokens = 6;
  /// Logits of a context's plausible successors, strongest first. A peaked
  /// head over a far-away tail: sampling at temperature 1 mostly stays on the
  /// head, so unbiased runs repeat themselves.
  std::vector<double> preferred_logits = {30.0, 28.0, 26.0, 24.0, 22.0, 20.0, 18.0, 16.0, 14.0, 12.0};
  /// Every other token gets a hashed logit in [tail_logit_min, tail_logit_min + tail_logit_width).
  double tail_logit_min = -60.0;
  double tail_logit_width = 2.0;
  /// A due object word is lifted this far above the strongest successor.
  double copy_boost = 20.0;
};

class MockBackend final : public TextGenerationBackend {
 public:
  explicit MockBackend(MockModelConfig config = {}) : config_(std::move(config)) {
    if (config_.vocabulary.size() < 50) throw Error(Errc::configuration, "mock vocabulary needs >= 50 tokens");
    for (std::size_t i = 0; i < config_.vocabulary.size(); ++i)
      index_.emplace(config_.vocabulary[i], static_cast<TokenId>(i));
  }

  std::string name() const override { return "mock"; }

  bool knows_token(TokenId id) const override {
    return id >= 0 && id < static_cast<TokenId>(config_.vocabulary.size());
  }

  std::size_t vocabulary_size() const noexcept { return config_.vocabulary.size(); }
  const std::string& token_text(TokenId id) const { return config_.vocabulary.at(static_cast<std::size_t>(id)); }

  std::optional<TokenId> token_id(const std::string& word) const {
    auto it = index_.find(word);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  /// Number of complete() calls so far.
  std::uint64_t calls() const noexcept { return calls_; }

  GenerationResult complete(const std::string& prompt, const GenerationParams& params) override {
    const auto call = calls_++;
    Rng rng(params.seed ? mix64(*params.seed) : hash_combine(config_.model_seed, call));
    const auto plan = make_plan(prompt);

    GenerationResult r;
    r.finish_reason = "stop";
    TokenId prev = -1;
    std::vector<double> logits(config_.vocabulary.size());
    for (const auto& step : plan) {
      if (static_cast<int>(r.token_ids.size()) >= params.max_tokens) {
        r.finish_reason = "length";
        break;
      }
      fill_logits(step.context, prev, logits);
      if (step.due) {
        auto& l = logits[static_cast<std::size_t>(*step.due)];
        l = std::max(l, config_.preferred_logits.front()) + config_.copy_boost;
      }
      const auto tok = mock_sample_next(rng, logits, params);
      r.token_ids.push_back(tok);
      prev = tok;
    }
    for (std::size_t i = 0; i < r.token_ids.size(); ++i) {
      if (i) r.text += ' ';
      r.text += token_text(r.token_ids[i]);
    }
    r.transcript = {{"backend", "mock"}, {"call", call}};
    return r;
  }

 private:
  struct Step {
    std::uint64_t context;
    std::optional<TokenId> due;
  };

  std::vector<Step> make_plan(const std::string& prompt) const {
    const auto triplets = parse_triplets(prompt);
    // Everything except the data lines sets the "style" of the output.
    std::string style_text;
    {
      std::size_t pos = 0;
      while (pos < prompt.size()) {
        auto eol = prompt.find('\n', pos);
        auto line = prompt.substr(pos, eol == std::string::npos ? std::string::npos : eol - pos);
        pos = eol == std::string::npos ? prompt.size() : eol + 1;
        if (!(line.size() >= 2 && line.front() == '(' && line.back() == ')')) style_text += line + '\n';
      }
    }
    const auto style = hash_combine(config_.model_seed, stable_hash(style_text));

    std::vector<Step> plan;
    for (const auto& t : triplets) {
      const auto ctx = hash_combine(style, stable_hash(t.predicate));
      for (int i = 0; i < config_.filler_per_triplet; ++i) plan.push_back({ctx, std::nullopt});
      for (const auto& w : tokenize(t.object).tokens)
        if (auto id = token_id(w)) plan.push_back({ctx, *id});
    }
    const auto closing = hash_combine(style, stable_hash("<closing>"));
    for (int i = 0; i < config_.closing_tokens; ++i) plan.push_back({closing, std::nullopt});
    return plan;
  }

  void fill_logits(std::uint64_t context, TokenId prev, std::vector<double>& logits) const {
    const auto key = hash_combine(context, static_cast<std::uint64_t>(prev + 1));
    const auto vocab = logits.size();
    for (std::size_t v = 0; v < vocab; ++v)
      logits[v] = config_.tail_logit_min +
                  config_.tail_logit_width * (static_cast<double>(hash_combine(key, v) >> 11) * 0x1.0p-53);
    for (std::size_t k = 0; k < config_.preferred_logits.size(); ++k) {
      const auto v = hash_combine(key, 0x70726566ULL + k) % vocab;
      logits[v] = std::max(logits[v], config_.preferred_logits[k]);
    }
  }

  MockModelConfig config_;
  std::unordered_map<std::string, TokenId> index_;
  std::uint64_t calls_ = 0;
};

/// Backend that answers every prompt through a callback. Used as a stand-in
/// judge and for failure injection.
class ScriptedBackend final : public TextGenerationBackend {
 public:
  using Responder = std::function<std::string(const std::string& prompt, const GenerationParams& params)>;

  explicit ScriptedBackend(Responder responder, std::string name = "scripted")
      : responder_(std::move(responder)), name_(std::move(name)) {}

  std::string name() const override { return name_; }
  bool knows_token(TokenId id) const override { return id >= 0; }

  GenerationResult complete(const std::string& prompt, const GenerationParams& params) override {
    GenerationResult r;
    r.text = responder_(prompt, params);
    r.finish_reason = "stop";
    return r;
  }

 private:
  Responder responder_;
  std::string name_;
};

}  // namespace textdiv
