#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "textdiv/error.hpp"
#include "textdiv/genctl/params.hpp"

namespace textdiv {

struct GenerationResult {
  std::string text;
  std::vector<TokenId> token_ids;
  std::string finish_reason;
  GenerationParams params_used;
  std::string prompt_used;
  /// Backend-specific exchange log (HTTP request and response bodies).
  nlohmann::json transcript;
};

/// A text generation service. Implementations are used by one run at a time.
class TextGenerationBackend {
 public:
  virtual ~TextGenerationBackend() = default;

  virtual std::string name() const = 0;

  /// Whether a bias map may reference this token id.
  virtual bool knows_token(TokenId id) const = 0;

  /// Produce one completion. Parameters have already been validated.
  virtual GenerationResult complete(const std::string& prompt, const GenerationParams& params) = 0;
};

inline GenerationResult generate(TextGenerationBackend& backend, const std::string& prompt,
                                 const GenerationParams& params) {
  validate(params);
  for (const auto& [tok, b] : params.logit_bias)
    if (!backend.knows_token(tok))
      throw Error(Errc::invalid_bias, "token id " + std::to_string(tok) + " is unknown to backend " + backend.name());
  auto r = backend.complete(prompt, params);
  r.params_used = params;
  r.prompt_used = prompt;
  return r;
}

}  // namespace textdiv
