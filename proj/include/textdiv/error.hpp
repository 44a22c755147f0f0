#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace textdiv {

enum class Errc {
  invalid_parameter,
  invalid_comparison,
  insufficient_corpus,
  duplicate_id,
  empty_document,
  configuration,
  backend,
  invalid_bias,
  empty_candidates,
  judge_parse,
  judge_range,
  incomplete_scores,
  incomplete_session,
  undefined_kappa,
  insufficient_data,
  undefined_correlation,
  format,
  io,
  not_found,
};

inline std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::invalid_parameter: return "invalid-parameter";
    case Errc::invalid_comparison: return "invalid-comparison";
    case Errc::insufficient_corpus: return "insufficient-corpus";
    case Errc::duplicate_id: return "duplicate-id";
    case Errc::empty_document: return "empty-document";
    case Errc::configuration: return "configuration";
    case Errc::backend: return "backend";
    case Errc::invalid_bias: return "invalid-bias";
    case Errc::empty_candidates: return "empty-candidates";
    case Errc::judge_parse: return "judge-parse";
    case Errc::judge_range: return "judge-range";
    case Errc::incomplete_scores: return "incomplete-scores";
    case Errc::incomplete_session: return "incomplete-session";
    case Errc::undefined_kappa: return "undefined-kappa";
    case Errc::insufficient_data: return "insufficient-data";
    case Errc::undefined_correlation: return "undefined-correlation";
    case Errc::format: return "format";
    case Errc::io: return "io";
    case Errc::not_found: return "not-found";
  }
  return "unknown";
}

/// Base exception for everything the toolkit throws on a contract violation.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

/// Failure talking to a generation backend. Transport problems and
/// rate limiting are retriable; malformed requests are not.
class BackendError : public Error {
 public:
  BackendError(const std::string& what, bool retriable)
      : Error(Errc::backend, what), retriable_(retriable) {}

  bool retriable() const noexcept { return retriable_; }

 private:
  bool retriable_;
};

/// Judge response that could not be turned into a score. Keeps the raw text.
class JudgeError : public Error {
 public:
  JudgeError(Errc code, const std::string& what, std::string raw_response)
      : Error(code, what), raw_(std::move(raw_response)) {}

  const std::string& raw_response() const noexcept { return raw_; }

 private:
  std::string raw_;
};

}  // namespace textdiv
