#pragma once

#include <stdexcept>
#include <string>

namespace qasym {

/// Input rejected: wrong shape, outside a domain, not Hermitian/PSD, ...
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

/// An iterative routine failed to reach its tolerance.
class ConvergenceError : public std::runtime_error {
 public:
  explicit ConvergenceError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace qasym
