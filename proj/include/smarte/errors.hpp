#pragma once

#include <stdexcept>
#include <string>

namespace smarte {

// Error taxonomy. The CLI maps these onto exit codes (see tools/smarte.cpp).

struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

/// Raised on NaN/Inf; `iteration` is -1 when not attributable to a loop step.
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& what, int iteration = -1)
      : std::runtime_error(what), iteration(iteration) {}
  int iteration;
};

struct ContractError : std::logic_error {
  using std::logic_error::logic_error;
};

struct CapacityError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ParseError : std::runtime_error {
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error(what), line(line) {}
  std::size_t line;
};

struct SchemaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct LookupError : std::out_of_range {
  using std::out_of_range::out_of_range;
};

}  // namespace smarte
