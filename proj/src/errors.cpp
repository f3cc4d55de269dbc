#include "treebounds/errors.hpp"

namespace treebounds {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::cycle_detected: return "CycleDetected";
    case ErrorKind::disconnected: return "Disconnected";
    case ErrorKind::duplicate_edge: return "DuplicateEdge";
    case ErrorKind::duplicate_node: return "DuplicateNode";
    case ErrorKind::unknown_node: return "UnknownNode";
    case ErrorKind::multiple_parents: return "MultipleParents";
    case ErrorKind::invalid_ordering: return "InvalidOrdering";
    case ErrorKind::probability_out_of_range: return "ProbabilityOutOfRange";
    case ErrorKind::frechet_violation: return "FrechetViolation";
    case ErrorKind::parse_error: return "ParseError";
    case ErrorKind::infeasible_cardinality: return "InfeasibleCardinality";
    case ErrorKind::negative_weight: return "NegativeWeight";
    case ErrorKind::solver_failure: return "SolverFailure";
    case ErrorKind::numerical_failure: return "NumericalFailure";
    case ErrorKind::degenerate_conditioning: return "DegenerateConditioning";
    case ErrorKind::size_cap: return "SizeCap";
    case ErrorKind::invariant_breach: return "InvariantBreach";
  }
  return "Unknown";
}

}  // namespace treebounds
