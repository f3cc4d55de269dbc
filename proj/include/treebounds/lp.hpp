#pragma once

#include <initializer_list>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "treebounds/errors.hpp"

namespace treebounds::lp {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

enum class Sense { minimize, maximize };
enum class Relation { less_equal, greater_equal, equal };

struct Term {
  int var = 0;
  double coef = 0.0;
};

struct Variable {
  std::string name;
  double lower = -kInfinity;
  double upper = kInfinity;
  double objective = 0.0;
};

struct Constraint {
  std::string name;
  std::vector<Term> terms;
  Relation relation = Relation::greater_equal;
  double rhs = 0.0;
};

/// Sparse linear program. Variables default to free; duplicate terms within
/// a row are merged when the row is added.
class LPProblem {
 public:
  explicit LPProblem(Sense sense = Sense::minimize) : sense_(sense) {}

  int add_variable(std::string name, double lower = -kInfinity, double upper = kInfinity,
                   double objective = 0.0);
  int add_constraint(std::span<const Term> terms, Relation relation, double rhs,
                     std::string name = {});
  int add_constraint(std::initializer_list<Term> terms, Relation relation, double rhs,
                     std::string name = {}) {
    return add_constraint(std::span<const Term>(terms.begin(), terms.size()), relation, rhs,
                          std::move(name));
  }

  void set_sense(Sense sense) noexcept { sense_ = sense; }
  void set_objective(int var, double coef);
  void set_bounds(int var, double lower, double upper);

  Sense sense() const noexcept { return sense_; }
  int num_variables() const noexcept { return static_cast<int>(vars_.size()); }
  int num_constraints() const noexcept { return static_cast<int>(rows_.size()); }
  const Variable& variable(int j) const { return vars_.at(j); }
  const Constraint& constraint(int i) const { return rows_.at(i); }
  std::span<const Variable> variables() const noexcept { return vars_; }
  std::span<const Constraint> constraints() const noexcept { return rows_; }
  std::size_t num_nonzeros() const noexcept { return nonzeros_; }

  /// Objective value of an assignment.
  double evaluate(std::span<const double> x) const;

  /// CPLEX-style LP text, one constraint per line.
  void write_lp(std::ostream& os) const;

 private:
  Sense sense_;
  std::vector<Variable> vars_;
  std::vector<Constraint> rows_;
  std::size_t nonzeros_ = 0;
};

enum class Status { optimal, infeasible, unbounded };

std::string_view to_string(Status s);

/// Tolerances and algorithm switches for `solve`.
struct SolverConfig {
  /// Primal and dual feasibility, measured relative to row and column norms.
  double feasibility_tol = 1e-7;
  /// Smallest admissible pivot magnitude in the ratio test.
  double pivot_tol = 1e-9;
  /// Reduced-cost threshold for entering candidates.
  double optimality_tol = 1e-9;
  /// Rebuild the basis inverse from scratch every this many pivots.
  int refactor_interval = 100;
  /// Consecutive degenerate pivots before switching to Bland's rule.
  int degenerate_switch = 30;
  long max_iterations = 1'000'000;

  enum class Route {
    automatic,  // dualize when the problem has more rows than columns
    primal,
    dual,
  };
  Route route = Route::automatic;
};

struct Residuals {
  double primal = 0.0;
  double dual = 0.0;
  double complementarity = 0.0;
};

struct LPSolution {
  Status status = Status::infeasible;
  double objective = 0.0;
  /// One value per variable.
  std::vector<double> primal;
  /// One value per constraint: the rate of change of the optimal objective
  /// per unit increase of the row's right-hand side.
  std::vector<double> dual;
  long iterations = 0;
  bool dualized = false;
  Residuals residuals;
};

/// Deterministic bounded-variable revised simplex. Throws
/// Error(numerical_failure) when an optimal basis cannot be certified within
/// the configured residual tolerances.
LPSolution solve(const LPProblem& problem, const SolverConfig& config = {});

/// Residuals of a candidate primal/dual pair against `problem`, each scaled by
/// the relevant row or column norm.
Residuals check_optimality(const LPProblem& problem, std::span<const double> primal,
                           std::span<const double> dual);

}  // namespace treebounds::lp
