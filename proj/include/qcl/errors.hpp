#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace qcl {

enum class ErrorKind {
  Config,
  Shape,
  DegenerateState,
  Domain,
  NumericalBlowup,
  Resource,
  Schema,
};

const char* to_string(ErrorKind kind);

/// Base of every error raised by the library. The kind selects the CLI exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorKind::Config, what) {}
};

class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& what) : Error(ErrorKind::Shape, what) {}
};

class DegenerateStateError : public Error {
 public:
  explicit DegenerateStateError(const std::string& what)
      : Error(ErrorKind::DegenerateState, what) {}
};

class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error(ErrorKind::Domain, what) {}
};

class ResourceError : public Error {
 public:
  explicit ResourceError(const std::string& what) : Error(ErrorKind::Resource, what) {}
};

class NumericalBlowupError : public Error {
 public:
  NumericalBlowupError(std::size_t step_index, const std::string& what)
      : Error(ErrorKind::NumericalBlowup, what), step_index_(step_index) {}
  std::size_t step_index() const noexcept { return step_index_; }

 private:
  std::size_t step_index_;
};

/// Raised while validating experiment files; `key` is the dotted path of the offending entry.
class SchemaError : public Error {
 public:
  SchemaError(std::string key, const std::string& what)
      : Error(ErrorKind::Schema, key + ": " + what), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

}  // namespace qcl
