#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mref {

/// Base of every error this library throws.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Incompatible tensor or vector shapes.
class ShapeError : public Error {
public:
  using Error::Error;
};

/// Invalid configuration values (hyperparameters, judge settings, flags).
class ConfigError : public Error {
public:
  using Error::Error;
};

/// Malformed bytes or text in a file or payload we were asked to decode.
class FormatError : public Error {
public:
  using Error::Error;
};

/// Filesystem or stream failure.
class IoError : public Error {
public:
  using Error::Error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
  using Error::Error;
};

/// Well-formed document that breaks the manifest schema or a case invariant.
class SchemaError : public Error {
public:
  SchemaError(std::string case_id, const std::string& what)
      : Error(case_id.empty() ? what : "case '" + case_id + "': " + what),
        case_id_(std::move(case_id)) {}

  const std::string& case_id() const noexcept { return case_id_; }

private:
  std::string case_id_;
};

/// Verdicts and checkpoints do not correspond one to one.
class CoverageError : public Error {
public:
  CoverageError(const std::string& what, std::vector<std::string> missing,
                std::vector<std::string> extra)
      : Error(what), missing_(std::move(missing)), extra_(std::move(extra)) {}

  const std::vector<std::string>& missing() const noexcept { return missing_; }
  const std::vector<std::string>& extra() const noexcept { return extra_; }

private:
  std::vector<std::string> missing_;
  std::vector<std::string> extra_;
};

/// The judge endpoint could not be reached or kept failing.
class TransportError : public Error {
public:
  TransportError(const std::string& what, int last_status = 0)
      : Error(what), last_status_(last_status) {}

  int last_status() const noexcept { return last_status_; }

private:
  int last_status_;
};

/// The judge answered, but not in the required machine-readable form.
class ParseError : public Error {
public:
  ParseError(const std::string& what, std::string raw_response)
      : Error(what), raw_response_(std::move(raw_response)) {}

  const std::string& raw_response() const noexcept { return raw_response_; }

private:
  std::string raw_response_;
};

/// Judge-generated checkpoints kept violating the checkpoint rules.
class GenerationError : public Error {
public:
  GenerationError(const std::string& what, std::string raw_response)
      : Error(what), raw_response_(std::move(raw_response)) {}

  const std::string& raw_response() const noexcept { return raw_response_; }

private:
  std::string raw_response_;
};

}  // namespace mref
