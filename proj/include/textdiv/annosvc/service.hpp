#pragma once

// Annotation session logic behind the HTTP API: batch layout, next-pair
// selection per annotator, score validation and the agreement report.
//
// Session file:
//   {"session_id": "s1", "seed": 7, "n": 3, "scale": 5, "bands": [...5 ids, optional],
//    "models": {"gpt4-adaptive": [{"id": "...", "band": "b01", "text": "..."}, ...], ...}}

#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "textdiv/annosvc/store.hpp"
#include "textdiv/annotation.hpp"
#include "textdiv/document.hpp"
#include "textdiv/error.hpp"
#include "textdiv/highlight.hpp"
#include "textdiv/jaccdiv.hpp"

namespace textdiv::annosvc {

struct SessionSpec {
  std::string session_id = "session";
  std::uint64_t seed = 0;
  std::size_t n = 3;
  int scale = 5;
  std::optional<std::vector<std::string>> bands;
  Session models;
};

inline SessionSpec session_from_json(const nlohmann::json& j) {
  SessionSpec s;
  try {
    s.session_id = j.value("session_id", s.session_id);
    s.seed = j.value("seed", s.seed);
    s.n = j.value("n", s.n);
    s.scale = j.value("scale", s.scale);
    if (j.contains("bands") && !j.at("bands").is_null()) s.bands = j.at("bands").get<std::vector<std::string>>();
    for (const auto& [model, docs] : j.at("models").items()) {
      auto& out = s.models[model];
      for (const auto& d : docs) {
        Document doc;
        doc.text = d.at("text").get<std::string>();
        doc.id = d.value("id", std::string());
        if (auto band = d.value("band", std::string()); !band.empty()) doc.meta["band"] = band;
        if (doc.id.empty()) doc.id = band_of(doc);
        if (doc.id.empty()) throw Error(Errc::format, "document of model '" + model + "' has neither id nor band");
        out.push_back(std::move(doc));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::format, std::string("malformed session: ") + e.what());
  }
  return s;
}

inline SessionSpec load_session(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io, "cannot open session " + path.string());
  try {
    return session_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(Errc::format, path.string() + ": " + e.what());
  }
}

struct ServiceOptions {
  std::filesystem::path state_dir = "annotation-state";
  bool blind = true;  // hide model ids from annotators
  std::size_t snapshot_every = 25;
};

class AnnotationService {
 public:
  AnnotationService(SessionSpec spec, ServiceOptions opt)
      : spec_(std::move(spec)), opt_(std::move(opt)), store_(opt_.state_dir, opt_.snapshot_every) {
    if (spec_.scale < 2) throw Error(Errc::configuration, "scale must have at least 2 categories");
    if (spec_.n < 2) throw Error(Errc::configuration, "n must be at least 2");
    batches_ = make_batches(spec_.models, spec_.bands, spec_.seed, spec_.n);
    for (std::size_t b = 0; b < batches_.size(); ++b) {
      const auto& batch = batches_[b];
      for (const auto& p : batch.pairs) {
        order_.push_back(p.pair_id);
        pairs_.emplace(p.pair_id,
                       Entry{b, p, highlight_pair(batch.documents[p.a], batch.documents[p.b], spec_.n)});
      }
      DiversityOptions dopt;
      dopt.n = spec_.n;
      jaccdiv_[batch.model_id] = corpus_jaccdiv(spec_.models.at(batch.model_id), dopt).mean_diversity;
    }
    for (const auto& d : batches_.front().documents) bands_.push_back(band_of(d));
  }

  const std::vector<AnnotationBatch>& batches() const noexcept { return batches_; }
  const SessionSpec& spec() const noexcept { return spec_; }
  std::size_t pairs_total() const noexcept { return order_.size(); }
  ScoreStore& store() noexcept { return store_; }

  nlohmann::json session_json() const {
    const auto st = store_.state();
    std::map<std::string, std::size_t> done;
    for (const auto& [key, _] : st->scores) ++done[key.first];
    nlohmann::json models = nlohmann::json::array();
    for (const auto& b : batches_) models.push_back(model_label(b));
    return {{"session_id", spec_.session_id},
            {"n", spec_.n},
            {"scale", spec_.scale},
            {"blind", opt_.blind},
            {"models", models},
            {"bands", bands_},
            {"pairs_total", pairs_total()},
            {"progress", done}};
  }

  /// The first pair in session order the annotator has not scored, or a
  /// completion payload.
  nlohmann::json next_pair(const std::string& annotator) const {
    if (annotator.empty()) throw Error(Errc::invalid_parameter, "annotator id is required");
    const auto st = store_.state();
    std::size_t done = 0;
    const std::string* next = nullptr;
    for (const auto& id : order_) {
      if (st->scores.count({annotator, id}))
        ++done;
      else if (!next)
        next = &id;
    }
    nlohmann::json progress{{"done", done}, {"total", pairs_total()}};
    if (!next) return {{"complete", true}, {"progress", progress}};
    auto j = pair_json(*next);
    j["complete"] = false;
    j["progress"] = progress;
    return j;
  }

  nlohmann::json pair_json(const std::string& pair_id) const {
    auto it = pairs_.find(pair_id);
    if (it == pairs_.end()) throw Error(Errc::not_found, "unknown pair '" + pair_id + "'");
    const auto& e = it->second;
    const auto& batch = batches_[e.batch];
    return {{"pair_id", pair_id},
            {"batch_id", batch.batch_id},
            {"model", model_label(batch)},
            {"scale", spec_.scale},
            {"highlight", to_json(e.highlight)}};
  }

  nlohmann::json submit(const std::string& annotator, const std::string& pair_id, int category) {
    if (annotator.empty()) throw Error(Errc::invalid_parameter, "annotator id is required");
    if (!pairs_.count(pair_id)) throw Error(Errc::not_found, "unknown pair '" + pair_id + "'");
    if (category < 1 || category > spec_.scale)
      throw Error(Errc::invalid_parameter,
                  "category must lie in 1.." + std::to_string(spec_.scale) + ", got " + std::to_string(category));
    const auto r = store_.submit(annotator, pair_id, category);
    return {{"ok", true}, {"seq", r.seq}, {"overwritten", r.overwritten}};
  }

  AgreementReport report() const {
    return build_report(batches_, store_.state()->entries(), jaccdiv_, spec_.scale);
  }

  nlohmann::json audit_json() const {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& a : store_.state()->audit) out.push_back(detail::audit_json(a));
    return out;
  }

 private:
  struct Entry {
    std::size_t batch;
    AnnotationPair pair;
    HighlightedPair highlight;
  };

  std::string model_label(const AnnotationBatch& b) const { return opt_.blind ? b.batch_id : b.model_id; }

  SessionSpec spec_;
  ServiceOptions opt_;
  ScoreStore store_;
  std::vector<AnnotationBatch> batches_;
  std::vector<std::string> bands_;
  std::vector<std::string> order_;
  std::map<std::string, Entry> pairs_;
  std::map<std::string, double> jaccdiv_;
};

}  // namespace textdiv::annosvc
