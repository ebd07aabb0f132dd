#pragma once

#include <stdexcept>
#include <string>

namespace mdiqkd {

// Argument outside the mathematical domain of a function (negative intensity, e > 1, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Malformed configuration, counts file, or linear program.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A decoy-state linear program has no feasible point: the observed data are
// inconsistent with any photon-number channel.
class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Solver reached a state that should be unreachable (iteration cap, unbounded box LP).
class SolverDefect : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace mdiqkd
