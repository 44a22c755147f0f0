// textdiv: command line front end for the diversity, generation, judging,
// corpus and annotation tools.

#include <csignal>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "textdiv/annosvc/server.hpp"
#include "textdiv/annosvc/service.hpp"
#include "textdiv/corpus.hpp"
#include "textdiv/genctl/experiment.hpp"
#include "textdiv/genctl/http_backend.hpp"
#include "textdiv/genctl/mock_backend.hpp"
#include "textdiv/highlight.hpp"
#include "textdiv/jaccdiv.hpp"
#include "textdiv/quality.hpp"

namespace {

using namespace textdiv;
using nlohmann::json;

void write_output(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io, "cannot write " + path);
  out << content;
}

std::vector<FormationRecord> load_records(const std::string& path) {
  auto r = ingest(path);
  for (const auto& e : r.errors) std::cerr << path << ":" << e.line << ": " << e.message << "\n";
  if (!r.errors.empty()) throw Error(Errc::format, std::to_string(r.errors.size()) + " malformed rows in " + path);
  return r.records;
}

// Documents from {"id","text"} lines; with records=true, the described
// records of a dataset file instead.
std::vector<Document> load_docs(const std::string& path, bool records) {
  if (!records) return read_documents(path);
  std::vector<Document> docs;
  for (const auto& r : filter_described(load_records(path))) docs.push_back({r.key(), *r.description, {}});
  return docs;
}

struct HttpFlags {
  std::string base_url = "https://api.openai.com";
  std::string path = "/v1/chat/completions";
  std::string api_key_env = "OPENAI_API_KEY";
  std::string tokenize_path;
  int timeout = 120;
};

void add_http_flags(CLI::App* cmd, HttpFlags& f) {
  cmd->add_option("--base-url", f.base_url, "HTTP backend base URL")->capture_default_str();
  cmd->add_option("--endpoint", f.path, "chat completions path")->capture_default_str();
  cmd->add_option("--api-key-env", f.api_key_env, "environment variable holding the API key")->capture_default_str();
  cmd->add_option("--tokenize-path", f.tokenize_path, "tokenize endpoint used to recover token ids");
  cmd->add_option("--timeout", f.timeout, "request timeout in seconds")->capture_default_str();
}

HttpBackend make_http(const HttpFlags& f, const std::string& model) {
  HttpBackendConfig cfg;
  cfg.base_url = f.base_url;
  cfg.path = f.path;
  cfg.model = model;
  cfg.api_key_env = f.api_key_env;
  if (!f.tokenize_path.empty()) cfg.tokenize_path = f.tokenize_path;
  cfg.timeout_seconds = f.timeout;
  return HttpBackend(cfg);
}

httplib::Server* g_server = nullptr;

void stop_server(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"textdiv: n-gram diversity, controlled generation and annotation tools"};
  app.require_subcommand(1);

  // diversity
  struct {
    std::string input, out, experiment_id;
    std::size_t n = 3;
    bool per_order = false, records = false;
    double length_ratio = 2.0;
    unsigned threads = 0;
  } div;
  auto* cdiv = app.add_subcommand("diversity", "pairwise JaccDiv over a document corpus");
  cdiv->add_option("--input", div.input, "documents (JSON lines with id and text)")->required();
  cdiv->add_option("--n", div.n, "maximum n-gram order (orders 2..n are pooled)")->capture_default_str();
  cdiv->add_flag("--per-order", div.per_order, "also report similarity per n-gram order");
  cdiv->add_option("--length-ratio", div.length_ratio, "flag pairs whose length ratio exceeds this")->capture_default_str();
  cdiv->add_flag("--records", div.records, "input is a dataset file; use the described records");
  cdiv->add_option("--experiment-id", div.experiment_id, "label stored in the report");
  cdiv->add_option("--threads", div.threads, "worker threads (0: automatic)");
  cdiv->add_option("--out", div.out, "report path (default stdout)");

  // highlight
  struct {
    std::string input, a, b, format = "ansi", out;
    std::size_t n = 3;
    bool records = false;
  } hl;
  auto* chl = app.add_subcommand("highlight", "mark the n-grams two documents share");
  chl->add_option("--a", hl.a, "first text file (a document id with --input)")->required();
  chl->add_option("--b", hl.b, "second text file (a document id with --input)")->required();
  chl->add_option("--input", hl.input, "documents (JSON lines with id and text)");
  chl->add_option("--n", hl.n, "n-gram order")->capture_default_str();
  chl->add_option("--format", hl.format, "ansi, html or json")->capture_default_str();
  chl->add_flag("--records", hl.records, "input is a dataset file");
  chl->add_option("--out", hl.out, "output path (default stdout)");

  // generate
  struct {
    std::string corpus, technique = "base", backend = "mock", model, out, manifest, instructions, style = "narrative";
    std::uint64_t seed = 0;
    double scale = BiasPolicy{}.adaptive_scale, cap = 100, fixed_value = -50, temperature = 1.0, top_p = 1.0;
    std::size_t top_k = 100, fewshot_k = 1;
    int max_tokens = 256, retries = 2;
    HttpFlags http;
  } gen;
  auto* cgen = app.add_subcommand("generate", "generate descriptions with a diversity technique");
  cgen->add_option("--corpus", gen.corpus, "formation records (.jsonl or .csv)")->required();
  cgen->add_option("--technique", gen.technique,
                   "base, shuffled, alt_instructions, fewshot, fixed_bias or adaptive_bias")
      ->capture_default_str();
  cgen->add_option("--backend", gen.backend, "mock or http")->capture_default_str();
  cgen->add_option("--model", gen.model, "model name (http backend) or label");
  cgen->add_option("--n-out", gen.out, "generated documents (JSON lines)")->required();
  cgen->add_option("--manifest", gen.manifest, "run manifest path (default <n-out>.manifest.json)");
  cgen->add_option("--seed", gen.seed, "run seed")->capture_default_str();
  cgen->add_option("--scale", gen.scale, "adaptive bias per-use step")->capture_default_str();
  cgen->add_option("--top-k", gen.top_k, "number of most used tokens biased")->capture_default_str();
  cgen->add_option("--cap", gen.cap, "largest bias magnitude")->capture_default_str();
  cgen->add_option("--fixed-value", gen.fixed_value, "bias of the fixed policy")->capture_default_str();
  cgen->add_option("--temperature", gen.temperature, "sampling temperature")->capture_default_str();
  cgen->add_option("--top-p", gen.top_p, "nucleus mass")->capture_default_str();
  cgen->add_option("--max-tokens", gen.max_tokens, "token limit per output")->capture_default_str();
  cgen->add_option("--instructions", gen.instructions, "instruction variants file");
  cgen->add_option("--style", gen.style, "narrative or triplet")->capture_default_str();
  cgen->add_option("--fewshot-k", gen.fewshot_k, "examples per prompt for fewshot")->capture_default_str();
  cgen->add_option("--retries", gen.retries, "retries of a transient backend failure")->capture_default_str();
  add_http_flags(cgen, gen.http);

  // judge
  struct {
    std::string corpus, records, backend = "mock", model, out, rubrics;
    HttpFlags http;
  } jd;
  auto* cjd = app.add_subcommand("judge", "score generated documents with an LLM judge");
  cjd->add_option("--corpus", jd.corpus, "generated documents (JSON lines)")->required();
  cjd->add_option("--records", jd.records, "source formation records")->required();
  cjd->add_option("--backend", jd.backend, "mock or http")->capture_default_str();
  cjd->add_option("--model", jd.model, "judge model name (http backend)");
  cjd->add_option("--rubrics", jd.rubrics, "rubric templates file");
  cjd->add_option("--out", jd.out, "scores path (default stdout)");
  add_http_flags(cjd, jd.http);

  // ingest
  struct {
    std::string in, out;
    std::vector<std::string> map;
    bool filter = false, dedup = false;
  } ing;
  auto* cing = app.add_subcommand("ingest", "read a raw dataset into JSON lines");
  cing->add_option("--in", ing.in, "raw dataset (.csv or .jsonl)")->required();
  cing->add_option("--out", ing.out, "records (JSON lines, default stdout)");
  cing->add_option("--map", ing.map, "CSV column to field mapping, column=field (repeatable)");
  cing->add_flag("--filter", ing.filter, "keep only described records");
  cing->add_flag("--dedup", ing.dedup, "drop duplicate descriptions");

  // stats
  struct {
    std::string in, out, svg;
    std::size_t bucket = 200;
  } st;
  auto* cst = app.add_subcommand("stats", "description length statistics");
  cst->add_option("--in", st.in, "records (.jsonl or .csv)")->required();
  cst->add_option("--bucket", st.bucket, "histogram bucket width in characters")->capture_default_str();
  cst->add_option("--out", st.out, "statistics path (default stdout)");
  cst->add_option("--histogram-svg", st.svg, "write the histogram as SVG");

  // serve
  struct {
    std::string session, host = "127.0.0.1", state_dir = "annotation-state", static_dir;
    int port = 8080;
    std::optional<int> scale;
    std::optional<std::size_t> n;
    bool reveal = false;
  } sv;
  auto* csv = app.add_subcommand("serve", "annotation service");
  csv->add_option("--session", sv.session, "session file")->required();
  csv->add_option("--port", sv.port, "port")->capture_default_str();
  csv->add_option("--host", sv.host, "bind address")->capture_default_str();
  csv->add_option("--scale", sv.scale, "number of diversity categories (overrides the session)");
  csv->add_option("--n", sv.n, "highlight order (overrides the session)");
  csv->add_option("--state-dir", sv.state_dir, "score log and snapshot directory")->capture_default_str();
  csv->add_option("--static", sv.static_dir, "annotation UI directory served at /");
  csv->add_flag("--reveal-models", sv.reveal, "show model ids to annotators");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*cdiv) {
      DiversityOptions opt;
      opt.n = div.n;
      opt.per_order = div.per_order;
      opt.length_ratio_threshold = div.length_ratio;
      opt.threads = div.threads;
      const auto report = corpus_jaccdiv(load_docs(div.input, div.records), opt, div.experiment_id);
      write_output(div.out, to_json(report).dump(2) + "\n");
      if (!div.out.empty()) std::cerr << "mean diversity " << report.mean_diversity << "\n";
    } else if (*chl) {
      std::vector<Document> docs;
      if (!hl.input.empty()) docs = load_docs(hl.input, hl.records);
      auto find = [&](const std::string& ref) {
        if (hl.input.empty()) {
          std::ifstream in(ref, std::ios::binary);
          if (!in) throw Error(Errc::io, "cannot open " + ref);
          std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
          while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.pop_back();
          return Document{std::filesystem::path(ref).stem().string(), text, {}};
        }
        for (const auto& d : docs)
          if (d.id == ref) return d;
        throw Error(Errc::not_found, "no document '" + ref + "' in " + hl.input);
      };
      const auto pair = highlight_pair(find(hl.a), find(hl.b), hl.n);
      write_output(hl.out, render(pair, parse_render_format(hl.format)));
    } else if (*cgen) {
      const auto corpus = load_records(gen.corpus);
      ExperimentConfig cfg;
      cfg.technique = parse_technique(gen.technique);
      cfg.seed = gen.seed;
      cfg.params.temperature = gen.temperature;
      cfg.params.top_p = gen.top_p;
      cfg.params.max_tokens = gen.max_tokens;
      cfg.policy.adaptive_scale = gen.scale;
      cfg.policy.top_k = gen.top_k;
      cfg.policy.cap = gen.cap;
      cfg.policy.fixed_value = gen.fixed_value;
      cfg.style = parse_prompt_style(gen.style);
      cfg.fewshot_k = gen.fewshot_k;
      cfg.max_retries = gen.retries;
      if (!gen.instructions.empty()) cfg.instructions = InstructionSet::load(gen.instructions);

      ExperimentRun run;
      if (gen.backend == "mock") {
        cfg.model_id = gen.model.empty() ? "mock" : gen.model;
        MockBackend backend;
        run = run_experiment(backend, corpus, cfg);
      } else if (gen.backend == "http") {
        if (gen.model.empty()) throw Error(Errc::configuration, "--model is required for the http backend");
        cfg.model_id = gen.model;
        auto backend = make_http(gen.http, gen.model);
        run = run_experiment(backend, corpus, cfg);
      } else {
        throw Error(Errc::invalid_parameter, "unknown backend '" + gen.backend + "'");
      }
      std::ofstream out(gen.out, std::ios::binary | std::ios::trunc);
      if (!out) throw Error(Errc::io, "cannot write " + gen.out);
      write_documents(out, run_documents(run, corpus, cfg));
      write_output(gen.manifest.empty() ? gen.out + ".manifest.json" : gen.manifest, run.manifest.dump(2) + "\n");
      std::cerr << run.results.size() << "/" << corpus.size() << " records generated\n";
      if (!run.completed) {
        std::cerr << "run aborted: " << run.error << "\n";
        return 3;
      }
    } else if (*cjd) {
      const auto docs = read_documents(jd.corpus);
      std::map<std::string, FormationRecord> by_key;
      for (auto& r : load_records(jd.records)) by_key.emplace(r.key(), r);
      const auto rubrics = jd.rubrics.empty() ? default_rubrics() : [&] {
        std::ifstream in(jd.rubrics);
        if (!in) throw Error(Errc::io, "cannot open " + jd.rubrics);
        return rubrics_from_json(json::parse(in));
      }();

      std::unique_ptr<TextGenerationBackend> backend;
      if (jd.backend == "mock")
        backend = std::make_unique<ScriptedBackend>(
            [](const std::string& prompt, const GenerationParams&) { return heuristic_judge_response(prompt); }, "mock-judge");
      else if (jd.backend == "http")
        backend = std::make_unique<HttpBackend>(make_http(jd.http, jd.model));
      else
        throw Error(Errc::invalid_parameter, "unknown backend '" + jd.backend + "'");

      json rows = json::array();
      std::map<std::string, double> sums;
      std::size_t scored = 0, failed = 0;
      for (const auto& d : docs) {
        auto band = d.meta.count("band") ? d.meta.at("band") : d.id;
        auto it = by_key.find(band);
        if (it == by_key.end()) throw Error(Errc::not_found, "no record for document '" + d.id + "'");
        try {
          const auto q = to_json(score_document(d, it->second, rubrics, *backend));
          rows.push_back({{"id", d.id}, {"scores", q}});
          for (const auto& [k, v] : q.items()) sums[k] += v.get<double>();
          ++scored;
        } catch (const JudgeError& e) {
          rows.push_back({{"id", d.id},
                          {"error", to_string(e.code())},
                          {"message", e.what()},
                          {"raw_response", e.raw_response()}});
          ++failed;
        }
      }
      json mean = json::object();
      if (scored)
        for (const auto& [k, v] : sums) mean[k] = v / static_cast<double>(scored);
      write_output(jd.out, json{{"documents", rows}, {"mean", mean}, {"scored", scored}, {"failed", failed}}.dump(2) + "\n");
      return failed ? 4 : 0;
    } else if (*cing) {
      HeaderMapping mapping;
      for (const auto& m : ing.map) {
        const auto eq = m.find('=');
        if (eq == std::string::npos) throw Error(Errc::invalid_parameter, "--map expects column=field, got " + m);
        mapping[m.substr(0, eq)] = m.substr(eq + 1);
      }
      auto result = ingest(ing.in, mapping);
      for (const auto& e : result.errors) std::cerr << ing.in << ":" << e.line << ": " << e.message << "\n";
      auto records = result.records;
      if (ing.filter) records = filter_described(records);
      if (ing.dedup) records = dedup_exact(records);
      std::ostringstream out;
      write_jsonl(out, records);
      write_output(ing.out, out.str());
      std::cerr << records.size() << " records written, " << result.errors.size() << " rows rejected\n";
      return result.errors.empty() ? 0 : 2;
    } else if (*cst) {
      const auto s = stats(load_records(st.in), st.bucket);
      write_output(st.out, to_json(s).dump(2) + "\n");
      if (!st.svg.empty()) write_output(st.svg, histogram_svg(s));
    } else if (*csv) {
      auto spec = annosvc::load_session(sv.session);
      if (sv.scale) spec.scale = *sv.scale;
      if (sv.n) spec.n = *sv.n;
      annosvc::ServiceOptions opt;
      opt.state_dir = sv.state_dir;
      opt.blind = !sv.reveal;
      annosvc::AnnotationService svc(std::move(spec), opt);
      httplib::Server server;
      annosvc::install_routes(server, svc, sv.static_dir);
      g_server = &server;
      std::signal(SIGINT, stop_server);
      std::signal(SIGTERM, stop_server);
      std::cerr << "serving " << svc.pairs_total() << " pairs on http://" << sv.host << ":" << sv.port << "\n";
      if (!server.listen(sv.host, sv.port)) throw Error(Errc::io, "cannot listen on port " + std::to_string(sv.port));
      svc.store().snapshot();
    }
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.code()) << "): " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
