#pragma once

// Chat-completions client for OpenAI-compatible endpoints (hosted APIs,
// llama.cpp server, vLLM, ...).
//
// Chat-completion responses carry text but not token ids. When the server
// also exposes a tokenize endpoint (llama.cpp: POST /tokenize {"content": ...}
// -> {"tokens": [...]}) the completion is re-tokenized there so that the
// usage ledger sees provider token ids; otherwise token_ids stays empty and
// bias feedback has nothing to count.

#include <cstdlib>
#include <optional>
#include <string>

#include <httplib.h>
#include <json.hpp>

#include "textdiv/error.hpp"
#include "textdiv/genctl/backend.hpp"

namespace textdiv {

struct HttpBackendConfig {
  std::string base_url = "https://api.openai.com";
  std::string path = "/v1/chat/completions";
  std::string model;
  /// Environment variable holding the bearer token; unset means no auth header.
  std::string api_key_env = "OPENAI_API_KEY";
  std::optional<std::string> tokenize_path;
  std::string system_prompt;
  int timeout_seconds = 120;
};

class HttpBackend final : public TextGenerationBackend {
 public:
  explicit HttpBackend(HttpBackendConfig config) : config_(std::move(config)) {
    if (config_.model.empty()) throw Error(Errc::configuration, "http backend needs a model name");
  }

  std::string name() const override { return "http:" + config_.model; }

  // Provider vocabularies are opaque here; the provider rejects unknown ids.
  bool knows_token(TokenId id) const override { return id >= 0; }

  nlohmann::json request_body(const std::string& prompt, const GenerationParams& params) const {
    nlohmann::json messages = nlohmann::json::array();
    if (!config_.system_prompt.empty()) messages.push_back({{"role", "system"}, {"content", config_.system_prompt}});
    messages.push_back({{"role", "user"}, {"content", prompt}});
    nlohmann::json body{{"model", config_.model},
                        {"messages", messages},
                        {"temperature", params.temperature},
                        {"top_p", params.top_p},
                        {"max_tokens", params.max_tokens}};
    if (!params.logit_bias.empty()) body["logit_bias"] = bias_to_json(params.logit_bias);
    if (params.seed) body["seed"] = *params.seed;
    return body;
  }

  GenerationResult complete(const std::string& prompt, const GenerationParams& params) override {
    const auto body = request_body(prompt, params);
    const auto response = post(config_.path, body);

    GenerationResult r;
    try {
      const auto& choice = response.at("choices").at(0);
      const auto& content = choice.at("message").at("content");
      r.text = content.is_null() ? std::string() : content.get<std::string>();
      r.finish_reason = choice.value("finish_reason", std::string("unknown"));
    } catch (const nlohmann::json::exception& e) {
      throw BackendError(std::string("unexpected completion payload: ") + e.what(), false);
    }
    r.transcript = {{"request", body}, {"response", response}};

    if (config_.tokenize_path) {
      const auto tok = post(*config_.tokenize_path, {{"content", r.text}});
      try {
        for (const auto& t : tok.at("tokens"))
          r.token_ids.push_back(t.is_object() ? t.at("id").get<TokenId>() : t.get<TokenId>());
      } catch (const nlohmann::json::exception& e) {
        throw BackendError(std::string("unexpected tokenize payload: ") + e.what(), false);
      }
    }
    return r;
  }

 private:
  nlohmann::json post(const std::string& path, const nlohmann::json& body) const {
    httplib::Client client(config_.base_url);
    client.set_connection_timeout(config_.timeout_seconds, 0);
    client.set_read_timeout(config_.timeout_seconds, 0);
    httplib::Headers headers;
    if (const char* key = std::getenv(config_.api_key_env.c_str()); key && *key)
      headers.emplace("Authorization", std::string("Bearer ") + key);

    auto res = client.Post(path, headers, body.dump(), "application/json");
    if (!res) throw BackendError("transport failure: " + httplib::to_string(res.error()), true);
    if (res->status == 429 || res->status >= 500)
      throw BackendError("server returned " + std::to_string(res->status) + ": " + res->body, true);
    if (res->status != 200)
      throw BackendError("server returned " + std::to_string(res->status) + ": " + res->body, false);
    try {
      return nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception&) {
      throw BackendError("response is not JSON", false);
    }
  }

  HttpBackendConfig config_;
};

}  // namespace textdiv
