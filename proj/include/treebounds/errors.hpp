#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace treebounds {

enum class ErrorKind {
  // Tree structure and marginal consistency.
  cycle_detected,
  disconnected,
  duplicate_edge,
  duplicate_node,
  unknown_node,
  multiple_parents,
  invalid_ordering,
  probability_out_of_range,
  frechet_violation,
  // Input parsing.
  parse_error,
  // Optimization.
  infeasible_cardinality,
  negative_weight,
  solver_failure,
  numerical_failure,
  degenerate_conditioning,
  size_cap,
  invariant_breach,
};

std::string_view to_string(ErrorKind kind);

/// Base exception for every failure raised by the library. The kind is
/// stable and is what the CLI maps onto exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace treebounds
