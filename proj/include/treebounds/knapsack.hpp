#pragma once

#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "treebounds/lp.hpp"
#include "treebounds/state_table.hpp"
#include "treebounds/tree_model.hpp"

namespace treebounds {

/// Which (c_i, c_{i(s)}) combination a split row covers.
enum class SplitCase { c00 = 1, c01 = 2, c10 = 3, c11 = 4 };

struct IndexRange {
  int lo = 0;
  int hi = -1;
  bool empty() const noexcept { return lo > hi; }
};

/// Range of a, the number of selected nodes inside the s-th child subtree,
/// when T(i,s) holds t selected nodes. Empty ranges are legal. Also valid for
/// s = 1, where T(i,0) is the single node i.
IndexRange admissible_ranges(const TreeTopology& topo, int node, int s, int t, SplitCase c);

/// min  sum_i alpha_i c_i + sum_{(i,j) in E} beta_ij c_i c_j  s.t.  sum_i c_i >= k.
struct KnapsackInstance {
  std::shared_ptr<const TreeTopology> topology;
  std::vector<double> alpha;  // per node
  std::vector<double> beta;   // per edge
  int k = 0;
};

struct KnapsackSolution {
  double value = 0.0;
  std::vector<int> selection;  // 0/1 per node
};

/// DP values x_{i,s,y,t}: minimum cost on T(i,s) with c_i = y and t selected.
class DpTable {
 public:
  DpTable() = default;
  explicit DpTable(const TreeTopology& topo);

  double& at(int i, int s, int y, int t) { return values_.at(i, s, y, t); }
  double at(int i, int s, int y, int t) const { return values_.at(i, s, y, t); }

  /// Rows "i,s,y,t,value" with external node ids; inadmissible states are
  /// omitted.
  void write_csv(std::ostream& os) const;

 private:
  friend std::vector<double> qkp_by_cardinality(const KnapsackInstance&, DpTable*);
  friend KnapsackSolution solve_qkp(const KnapsackInstance&, DpTable*);
  std::shared_ptr<const TreeTopology> topo_;
  StateTable<double> values_;
  StateTable<std::pair<int, int>> choice_;  // (y of child, a) for s >= 1
};

/// Minimum cost over selections of exactly t nodes, for t = 0..n.
std::vector<double> qkp_by_cardinality(const KnapsackInstance& inst, DpTable* table = nullptr);

/// Throws Error(infeasible_cardinality) when k > n.
KnapsackSolution solve_qkp(const KnapsackInstance& inst, DpTable* table = nullptr);

/// How the root of the emitted block is tied to the outer LP.
struct KnapsackLink {
  enum class Mode {
    threshold,        // one z with z <= x_{root,d,y,t} for t >= k
    per_cardinality,  // z_t <= x_{root,d,y,t} for every t in [0, n]
  };
  Mode mode = Mode::threshold;
  int k = 0;
  /// When set, also emit  lambda + z >= rhs  (threshold mode, rhs[0]) or
  /// lambda + z_t >= rhs[t]  (per-cardinality mode).
  std::optional<int> lambda;
  std::vector<double> rhs;
};

struct KnapsackBlock {
  StateTable<int> x;   // LP variable per admissible state
  std::vector<int> z;  // one entry, or n + 1 in per-cardinality mode
  int first_row = 0;
  int row_count = 0;
};

/// Appends the DP inequalities to `problem` over the given cost variables:
/// base equalities, first-child rows, split rows for every nonempty range and
/// the root linking rows. Only admissible states become variables.
KnapsackBlock emit_knapsack_block(lp::LPProblem& problem, const TreeTopology& topo,
                                  std::span<const int> alpha_vars,
                                  std::span<const int> beta_vars, const KnapsackLink& link);

}  // namespace treebounds
