#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace cca {

enum class ErrorKind {
  invalid_dimension,
  invalid_color,
  parse,
  domain,
  insufficient_population,
  incomplete_evaluation,
  invalid_box,
  no_ground_truth,
  empty_evaluation,
  unknown_transformation,
  oracle_refused,
  config,
  transport,
  service,
  protocol,
  version,
  io,
};

inline const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::invalid_dimension: return "invalid-dimension";
    case ErrorKind::invalid_color: return "invalid-color";
    case ErrorKind::parse: return "parse";
    case ErrorKind::domain: return "domain";
    case ErrorKind::insufficient_population: return "insufficient-population";
    case ErrorKind::incomplete_evaluation: return "incomplete-evaluation";
    case ErrorKind::invalid_box: return "invalid-box";
    case ErrorKind::no_ground_truth: return "no-ground-truth";
    case ErrorKind::empty_evaluation: return "empty-evaluation";
    case ErrorKind::unknown_transformation: return "unknown-transformation";
    case ErrorKind::oracle_refused: return "oracle-refused";
    case ErrorKind::config: return "config";
    case ErrorKind::transport: return "transport";
    case ErrorKind::service: return "service";
    case ErrorKind::protocol: return "protocol";
    case ErrorKind::version: return "version";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

// Every error raised by the library derives from this; kind() is stable for
// callers that branch on the failure class.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + " error: " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t offset, const std::string& what)
      : Error(ErrorKind::parse, what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class TransportError : public Error {
 public:
  TransportError(int attempts, const std::string& what)
      : Error(ErrorKind::transport, what + " after " + std::to_string(attempts) + " attempt(s)"),
        attempts_(attempts) {}

  int attempts() const noexcept { return attempts_; }

 private:
  int attempts_;
};

class ServiceError : public Error {
 public:
  ServiceError(int status, const std::string& body_excerpt)
      : Error(ErrorKind::service, "HTTP " + std::to_string(status) + ": " + body_excerpt), status_(status) {}

  int status() const noexcept { return status_; }

 private:
  int status_;
};

class ProtocolError : public Error {
 public:
  ProtocolError(std::string field, const std::string& what)
      : Error(ErrorKind::protocol, "field '" + field + "': " + what), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace cca
