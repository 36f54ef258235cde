#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace rgd {

// Base of every error the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input data could not be parsed. `location` is a 1-based line number for
// line-oriented formats and a 0-based byte offset for XML.
class ParseError : public Error {
 public:
  enum class Unit { line, byte_offset };

  ParseError(const std::string& what, Unit unit, std::size_t location)
      : Error(what), unit_(unit), location_(location) {}

  Unit unit() const { return unit_; }
  std::size_t location() const { return location_; }

 private:
  Unit unit_;
  std::size_t location_;
};

// A required column/field is absent.
class SchemaError : public Error {
 public:
  SchemaError(const std::string& what, std::string field)
      : Error(what), field_(std::move(field)) {}

  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

class EmptyLogError : public Error {
 public:
  EmptyLogError() : Error("event log contains no traces") {}
};

// Caller violated a documented precondition.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

// Discovery could not pick a cut (all candidates pruned, abort policy).
class DiscoveryError : public Error {
 public:
  DiscoveryError(const std::string& what, std::vector<std::string> blocking_rules)
      : Error(what), blocking_rules_(std::move(blocking_rules)) {}

  const std::vector<std::string>& blocking_rules() const { return blocking_rules_; }

 private:
  std::vector<std::string> blocking_rules_;
};

// Failure talking to an LLM provider.
class LlmError : public Error {
 public:
  LlmError(const std::string& what, bool retryable) : Error(what), retryable_(retryable) {}

  bool retryable() const { return retryable_; }

 private:
  bool retryable_;
};

}  // namespace rgd
