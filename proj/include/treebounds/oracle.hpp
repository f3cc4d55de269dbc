#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "treebounds/bounds.hpp"
#include "treebounds/knapsack.hpp"
#include "treebounds/lp.hpp"
#include "treebounds/tree_model.hpp"

namespace treebounds {

/// Largest n the exhaustive routines accept.
inline constexpr int kOracleMaxNodes = 20;

/// Marginals on an arbitrary edge set (cycles allowed). Only pairwise
/// consistency is checked; a joint distribution need not exist.
struct GeneralMarginalModel {
  struct Edge {
    int i = 0;
    int j = 0;
    double p11 = 0.0;
  };
  std::vector<ExternalId> ids;
  std::vector<double> p;
  std::vector<Edge> edges;

  int size() const noexcept { return static_cast<int>(p.size()); }

  /// Throws Error on duplicate ids/edges, self loops, out-of-range values or
  /// Fréchet violations.
  void validate() const;
};

GeneralMarginalModel general_from_tree(const TreeModel& t);

/// Same layout as the tree format, with "root" and "ordering" optional and
/// ignored, and no restriction on the edge structure.
GeneralMarginalModel parse_general_json(std::string_view text);

struct OracleResult {
  lp::Status status = lp::Status::infeasible;
  double value = 0.0;
  /// theta(c) for c encoded as a bit mask over node indices.
  std::vector<double> theta;
};

/// Exact bound from the full primal LP over all 2^n outcomes. Objective is
/// P(sum c >= k), maximized (upper) or minimized (lower).
OracleResult oracle_bound(const GeneralMarginalModel& m, int k, Direction dir,
                          const lp::SolverConfig& cfg = {});
/// Objective sum_c theta(c) w_{|c|}.
OracleResult oracle_bound(const GeneralMarginalModel& m, std::span<const double> w,
                          Direction dir, const lp::SolverConfig& cfg = {});

/// Minimum of the knapsack objective over every c with sum c >= k.
double qkp_enumerate(const KnapsackInstance& inst);

/// P(sum c >= k) by summing the product-form probability over all outcomes.
double ci_enumerate(const TreeModel& t, int k);

}  // namespace treebounds
