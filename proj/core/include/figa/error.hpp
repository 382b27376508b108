#pragma once

#include <stdexcept>
#include <string>

namespace figa {

// Categories map one-to-one onto CLI exit codes (see exit_code()).
enum class ErrorKind {
  Configuration,  // 2
  Ingestion,      // 3
  Service,        // 4
  Divergence,     // 5
  Structural,
  Vocabulary,
  Stats,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& what) : Error(ErrorKind::Configuration, what) {}
};

struct IngestionError : Error {
  IngestionError(const std::string& what, std::size_t line)
      : Error(ErrorKind::Ingestion, "line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Failure talking to (or parsing the answer of) a remote completion / reward service.
struct ServiceError : Error {
  ServiceError(const std::string& what, std::string payload = {})
      : Error(ErrorKind::Service, what), payload_(std::move(payload)) {}
  const std::string& payload() const noexcept { return payload_; }

 private:
  std::string payload_;
};

struct DivergenceError : Error {
  explicit DivergenceError(const std::string& what) : Error(ErrorKind::Divergence, what) {}
};

struct StructuralError : Error {
  explicit StructuralError(const std::string& what) : Error(ErrorKind::Structural, what) {}
};

struct VocabularyError : Error {
  explicit VocabularyError(const std::string& token)
      : Error(ErrorKind::Vocabulary, "token not in vocabulary: '" + token + "'"), token_(token) {}
  const std::string& token() const noexcept { return token_; }

 private:
  std::string token_;
};

struct StatsError : Error {
  explicit StatsError(const std::string& what) : Error(ErrorKind::Stats, what) {}
};

inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Configuration: return 2;
    case ErrorKind::Ingestion: return 3;
    case ErrorKind::Service: return 4;
    case ErrorKind::Divergence: return 5;
    default: return 1;
  }
}

}  // namespace figa
