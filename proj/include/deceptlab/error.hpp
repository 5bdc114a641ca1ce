#pragma once

#include <stdexcept>
#include <string>

namespace deceptlab {

// Shared error vocabulary. The CLI maps these onto stable exit codes:
// io 2, lookup 3, parse 4, everything else 1.
struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ContractError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct LookupError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace deceptlab
