#pragma once

#include <stdexcept>
#include <string>

namespace palette {

// Exit-code classes used by the CLI: validation 1, numerical degeneracy 2, I/O 3.

// Violated precondition or malformed input (dimension mismatch, bad counts, bad config).
class ContractViolation : public std::invalid_argument {
 public:
  explicit ContractViolation(const std::string& what) : std::invalid_argument(what) {}
};

// Numerical degeneracy: every model at zero density, reducible transition
// matrix, zero posterior probability where a ratio is required.
class DegenerateError : public std::runtime_error {
 public:
  explicit DegenerateError(const std::string& what) : std::runtime_error(what) {}
};

// Missing, unreadable or unwritable files.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ContractViolation(message);
}

}  // namespace palette
