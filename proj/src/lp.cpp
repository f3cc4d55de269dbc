#include "treebounds/lp.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cctype>
#include <cmath>
#include <optional>
#include <ostream>
#include <sstream>

namespace treebounds::lp {

// ---------------------------------------------------------------------------
// LPProblem

int LPProblem::add_variable(std::string name, double lower, double upper, double objective) {
  if (std::isnan(lower) || std::isnan(upper) || !std::isfinite(objective) || lower > upper) {
    throw Error(ErrorKind::invariant_breach, "invalid bounds or objective for variable " + name);
  }
  vars_.push_back({std::move(name), lower, upper, objective});
  return static_cast<int>(vars_.size()) - 1;
}

int LPProblem::add_constraint(std::span<const Term> terms, Relation relation, double rhs,
                              std::string name) {
  if (!std::isfinite(rhs)) throw Error(ErrorKind::invariant_breach, "non-finite right-hand side");
  Constraint row{std::move(name), {}, relation, rhs};
  row.terms.assign(terms.begin(), terms.end());
  for (const Term& t : row.terms) {
    if (t.var < 0 || t.var >= num_variables() || !std::isfinite(t.coef)) {
      throw Error(ErrorKind::invariant_breach, "constraint references an undeclared variable");
    }
  }
  std::sort(row.terms.begin(), row.terms.end(),
            [](const Term& a, const Term& b) { return a.var < b.var; });
  std::vector<Term> merged;
  merged.reserve(row.terms.size());
  for (const Term& t : row.terms) {
    if (!merged.empty() && merged.back().var == t.var) {
      merged.back().coef += t.coef;
    } else {
      merged.push_back(t);
    }
  }
  std::erase_if(merged, [](const Term& t) { return t.coef == 0.0; });
  row.terms = std::move(merged);
  nonzeros_ += row.terms.size();
  rows_.push_back(std::move(row));
  return static_cast<int>(rows_.size()) - 1;
}

void LPProblem::set_objective(int var, double coef) {
  if (!std::isfinite(coef)) throw Error(ErrorKind::invariant_breach, "non-finite objective");
  vars_.at(var).objective = coef;
}

void LPProblem::set_bounds(int var, double lower, double upper) {
  if (std::isnan(lower) || std::isnan(upper) || lower > upper) {
    throw Error(ErrorKind::invariant_breach, "invalid bounds");
  }
  vars_.at(var).lower = lower;
  vars_.at(var).upper = upper;
}

double LPProblem::evaluate(std::span<const double> x) const {
  double v = 0.0;
  for (int j = 0; j < num_variables(); ++j) v += vars_[j].objective * x[j];
  return v;
}

namespace {

std::string lp_name(const std::string& name, char prefix, int index) {
  if (name.empty()) return prefix + std::to_string(index);
  std::string out;
  for (char ch : name) {
    out += (std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '.') ? ch : '_';
  }
  return out;
}

void write_terms(std::ostream& os, std::span<const Term> terms,
                 const std::vector<std::string>& names) {
  bool first = true;
  for (const Term& t : terms) {
    if (first) {
      if (t.coef < 0) os << "- ";
      first = false;
    } else {
      os << (t.coef < 0 ? " - " : " + ");
    }
    os << std::abs(t.coef) << ' ' << names[t.var];
  }
  if (first) os << "0";
}

}  // namespace

void LPProblem::write_lp(std::ostream& os) const {
  const auto old_precision = os.precision(17);
  std::vector<std::string> names;
  names.reserve(vars_.size());
  for (int j = 0; j < num_variables(); ++j) names.push_back(lp_name(vars_[j].name, 'x', j));

  os << (sense_ == Sense::minimize ? "Minimize\n" : "Maximize\n") << " obj: ";
  std::vector<Term> obj;
  for (int j = 0; j < num_variables(); ++j) {
    if (vars_[j].objective != 0.0) obj.push_back({j, vars_[j].objective});
  }
  write_terms(os, obj, names);
  os << "\nSubject To\n";
  for (int i = 0; i < num_constraints(); ++i) {
    const Constraint& row = rows_[i];
    os << ' ' << lp_name(row.name, 'c', i) << ": ";
    write_terms(os, row.terms, names);
    switch (row.relation) {
      case Relation::less_equal: os << " <= "; break;
      case Relation::greater_equal: os << " >= "; break;
      case Relation::equal: os << " = "; break;
    }
    os << row.rhs << '\n';
  }
  os << "Bounds\n";
  for (int j = 0; j < num_variables(); ++j) {
    const Variable& v = vars_[j];
    const bool lo = std::isfinite(v.lower);
    const bool hi = std::isfinite(v.upper);
    if (!lo && !hi) {
      os << ' ' << names[j] << " free\n";
    } else if (lo && hi && v.lower == v.upper) {
      os << ' ' << names[j] << " = " << v.lower << '\n';
    } else if (lo && hi) {
      os << ' ' << v.lower << " <= " << names[j] << " <= " << v.upper << '\n';
    } else if (lo) {
      if (v.lower != 0.0) os << ' ' << names[j] << " >= " << v.lower << '\n';
    } else {
      os << " -inf <= " << names[j] << " <= " << v.upper << '\n';
    }
  }
  os << "End\n";
  os.precision(old_precision);
}

std::string_view to_string(Status s) {
  switch (s) {
    case Status::optimal: return "Optimal";
    case Status::infeasible: return "Infeasible";
    case Status::unbounded: return "Unbounded";
  }
  return "Unknown";
}

// ---------------------------------------------------------------------------
// Residual checks, always in minimization orientation internally.

namespace {

double row_norm(const Constraint& row) {
  double s = 0.0;
  for (const Term& t : row.terms) s += t.coef * t.coef;
  return std::max(1.0, std::sqrt(s));
}

}  // namespace

Residuals check_optimality(const LPProblem& problem, std::span<const double> primal,
                           std::span<const double> dual) {
  const int n = problem.num_variables();
  const int m = problem.num_constraints();
  const double sign = problem.sense() == Sense::minimize ? 1.0 : -1.0;
  Residuals r;

  std::vector<double> reduced(n);
  std::vector<double> col_norm2(n, 0.0);
  for (int j = 0; j < n; ++j) reduced[j] = sign * problem.variable(j).objective;

  for (int i = 0; i < m; ++i) {
    const Constraint& row = problem.constraint(i);
    const double y = sign * dual[i];
    double activity = 0.0;
    for (const Term& t : row.terms) {
      activity += t.coef * primal[t.var];
      reduced[t.var] -= y * t.coef;
      col_norm2[t.var] += t.coef * t.coef;
    }
    const double scale = row_norm(row);
    const double slack = activity - row.rhs;
    double viol = 0.0;
    double dual_viol = 0.0;
    switch (row.relation) {
      case Relation::greater_equal:
        viol = std::max(0.0, -slack);
        dual_viol = std::max(0.0, -y);
        break;
      case Relation::less_equal:
        viol = std::max(0.0, slack);
        dual_viol = std::max(0.0, y);
        break;
      case Relation::equal: viol = std::abs(slack); break;
    }
    r.primal = std::max(r.primal, viol / scale);
    r.dual = std::max(r.dual, dual_viol);
    if (row.relation != Relation::equal) {
      r.complementarity = std::max(r.complementarity, std::abs(y) * std::abs(slack) / scale);
    }
  }

  for (int j = 0; j < n; ++j) {
    const Variable& v = problem.variable(j);
    const double x = primal[j];
    const double d = reduced[j];
    const double cscale = std::max(1.0, std::sqrt(col_norm2[j]));
    if (std::isfinite(v.lower)) {
      r.primal = std::max(r.primal, std::max(0.0, v.lower - x) / std::max(1.0, std::abs(v.lower)));
    }
    if (std::isfinite(v.upper)) {
      r.primal = std::max(r.primal, std::max(0.0, x - v.upper) / std::max(1.0, std::abs(v.upper)));
    }
    const bool lo = std::isfinite(v.lower);
    const bool hi = std::isfinite(v.upper);
    double dual_viol = 0.0;
    if (!lo && !hi) {
      dual_viol = std::abs(d);
    } else if (lo && !hi) {
      dual_viol = std::max(0.0, -d);
    } else if (!lo && hi) {
      dual_viol = std::max(0.0, d);
    }
    r.dual = std::max(r.dual, dual_viol / cscale);
    double gap = 0.0;
    if (d > 0 && lo) gap = x - v.lower;
    if (d < 0 && hi) gap = v.upper - x;
    r.complementarity = std::max(r.complementarity, std::abs(d) * std::abs(gap) / cscale);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Bounded-variable revised simplex over  A x - r = 0,  l <= (x, r) <= u.
//
// Columns 0..n-1 are structural, n..n+m-1 are the row logicals r_i whose
// bounds encode each row's relation. The starting basis is all logicals.
// Phase 1 minimizes the sum of bound violations of basic variables
// (first-breakpoint ratio test); phase 2 minimizes c^T x. Dantzig pricing
// drops to Bland's rule after a run of degenerate pivots and returns once
// the objective moves again.

namespace {

struct CoreResult {
  Status status = Status::infeasible;
  std::vector<double> x;  // structural values
  std::vector<double> y;  // row duals, minimization orientation
  long iterations = 0;
};

class Simplex {
 public:
  Simplex(const LPProblem& p, const SolverConfig& cfg) : cfg_(cfg) {
    n_ = p.num_variables();
    m_ = p.num_constraints();
    total_ = n_ + m_;
    const double sign = p.sense() == Sense::minimize ? 1.0 : -1.0;

    std::vector<std::vector<std::pair<int, double>>> cols(n_);
    for (int i = 0; i < m_; ++i) {
      for (const Term& t : p.constraint(i).terms) cols[t.var].push_back({i, t.coef});
    }
    col_start_.reserve(n_ + 1);
    col_start_.push_back(0);
    for (int j = 0; j < n_; ++j) {
      for (auto [i, v] : cols[j]) {
        row_idx_.push_back(i);
        vals_.push_back(v);
      }
      col_start_.push_back(static_cast<int>(row_idx_.size()));
    }

    lower_.resize(total_);
    upper_.resize(total_);
    cost_.assign(total_, 0.0);
    for (int j = 0; j < n_; ++j) {
      const Variable& v = p.variable(j);
      lower_[j] = v.lower;
      upper_[j] = v.upper;
      cost_[j] = sign * v.objective;
    }
    for (int i = 0; i < m_; ++i) {
      const Constraint& row = p.constraint(i);
      switch (row.relation) {
        case Relation::less_equal:
          lower_[n_ + i] = -kInfinity;
          upper_[n_ + i] = row.rhs;
          break;
        case Relation::greater_equal:
          lower_[n_ + i] = row.rhs;
          upper_[n_ + i] = kInfinity;
          break;
        case Relation::equal:
          lower_[n_ + i] = row.rhs;
          upper_[n_ + i] = row.rhs;
          break;
      }
    }

    x_.assign(total_, 0.0);
    for (int j = 0; j < n_; ++j) {
      if (std::isfinite(lower_[j])) {
        x_[j] = lower_[j];
      } else if (std::isfinite(upper_[j])) {
        x_[j] = upper_[j];
      }
    }
    head_.resize(m_);
    basis_pos_.assign(total_, -1);
    for (int i = 0; i < m_; ++i) {
      head_[i] = n_ + i;
      basis_pos_[n_ + i] = i;
    }
    binv_ = -Eigen::MatrixXd::Identity(m_, m_);
    recompute_basic_values();
  }

  CoreResult run() {
    CoreResult out;
    bool phase_two = false;
    int reentries = 0;
    while (true) {
      if (iterations_ >= cfg_.max_iterations) {
        throw Error(ErrorKind::numerical_failure, "simplex iteration limit reached");
      }
      if (since_refactor_ >= cfg_.refactor_interval) refactor();

      if (!phase_two && max_infeasibility() <= cfg_.feasibility_tol) {
        phase_two = true;
        bland_ = false;
        degenerate_run_ = 0;
      }
      compute_duals(phase_two);
      const auto entering = choose_entering(phase_two);
      if (!entering) {
        // Confirm with a fresh factorization before declaring anything.
        if (since_refactor_ > 0) {
          refactor();
          continue;
        }
        if (!phase_two) {
          out.status = Status::infeasible;
          break;
        }
        if (max_infeasibility() > cfg_.feasibility_tol) {
          if (++reentries > 5) {
            throw Error(ErrorKind::numerical_failure, "simplex lost primal feasibility");
          }
          phase_two = false;
          continue;
        }
        out.status = Status::optimal;
        break;
      }
      const StepOutcome step = pivot(entering->first, entering->second, phase_two);
      if (step == StepOutcome::unbounded) {
        if (!phase_two) {
          if (since_refactor_ > 0) {
            refactor();
            continue;
          }
          throw Error(ErrorKind::numerical_failure, "phase 1 ray without breakpoint");
        }
        out.status = Status::unbounded;
        break;
      }
      ++iterations_;
    }
    out.iterations = iterations_;
    out.x.assign(x_.begin(), x_.begin() + n_);
    if (out.status == Status::optimal) {
      compute_duals(true);
      out.y.assign(y_.data(), y_.data() + m_);
    }
    return out;
  }

 private:
  enum class StepOutcome { moved, unbounded };

  bool is_basic(int j) const { return basis_pos_[j] >= 0; }

  // Dense copy of column j of [A, -I].
  template <class F>
  void for_column(int j, F&& f) const {
    if (j < n_) {
      for (int k = col_start_[j]; k < col_start_[j + 1]; ++k) f(row_idx_[k], vals_[k]);
    } else {
      f(j - n_, -1.0);
    }
  }

  void recompute_basic_values() {
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m_);
    for (int j = 0; j < total_; ++j) {
      if (is_basic(j) || x_[j] == 0.0) continue;
      const double xj = x_[j];
      for_column(j, [&](int i, double v) { rhs[i] -= v * xj; });
    }
    Eigen::VectorXd xb = binv_ * rhs;
    for (int i = 0; i < m_; ++i) x_[head_[i]] = xb[i];
  }

  void refactor() {
    since_refactor_ = 0;
    if (m_ == 0) return;
    Eigen::MatrixXd basis = Eigen::MatrixXd::Zero(m_, m_);
    for (int i = 0; i < m_; ++i) {
      for_column(head_[i], [&](int r, double v) { basis(r, i) = v; });
    }
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(basis);
    binv_ = lu.inverse();
    const double err =
        (basis * binv_ - Eigen::MatrixXd::Identity(m_, m_)).lpNorm<Eigen::Infinity>();
    if (!std::isfinite(err) || err > 1e-6) {
      throw Error(ErrorKind::numerical_failure, "basis matrix is numerically singular");
    }
    recompute_basic_values();
  }

  double violation(int j) const {
    const double v = x_[j];
    if (v < lower_[j]) return (lower_[j] - v) / std::max(1.0, std::abs(lower_[j]));
    if (v > upper_[j]) return (v - upper_[j]) / std::max(1.0, std::abs(upper_[j]));
    return 0.0;
  }

  double max_infeasibility() const {
    double worst = 0.0;
    for (int i = 0; i < m_; ++i) worst = std::max(worst, violation(head_[i]));
    return worst;
  }

  double phase_cost(int j, bool phase_two) const {
    if (phase_two) return cost_[j];
    if (!is_basic(j)) return 0.0;
    const double tol = cfg_.feasibility_tol;
    if (x_[j] < lower_[j] - tol * std::max(1.0, std::abs(lower_[j]))) return -1.0;
    if (x_[j] > upper_[j] + tol * std::max(1.0, std::abs(upper_[j]))) return 1.0;
    return 0.0;
  }

  void compute_duals(bool phase_two) {
    Eigen::VectorXd cb(m_);
    for (int i = 0; i < m_; ++i) cb[i] = phase_cost(head_[i], phase_two);
    y_.noalias() = binv_.transpose() * cb;
  }

  double reduced_cost(int j, bool phase_two) const {
    double d = phase_cost(j, phase_two);
    for_column(j, [&](int i, double v) { d -= y_[i] * v; });
    return d;
  }

  // Returns (column, direction) where direction is +1 to increase.
  std::optional<std::pair<int, int>> choose_entering(bool phase_two) const {
    int best = -1;
    int best_dir = 0;
    double best_score = 0.0;
    const double tol = cfg_.optimality_tol;
    for (int j = 0; j < total_; ++j) {
      if (is_basic(j) || lower_[j] == upper_[j]) continue;
      const double d = reduced_cost(j, phase_two);
      int dir = 0;
      if (d < -tol && x_[j] < upper_[j]) {
        dir = 1;
      } else if (d > tol && x_[j] > lower_[j]) {
        dir = -1;
      }
      if (dir == 0) continue;
      if (bland_) return std::pair{j, dir};
      const double score = std::abs(d);
      if (score > best_score) {
        best_score = score;
        best = j;
        best_dir = dir;
      }
    }
    if (best < 0) return std::nullopt;
    return std::pair{best, best_dir};
  }

  // Step length allowed by basic variable at row i moving at `rate` per unit
  // step; `relax` widens the bounds (Harris pass 1). Sets `target` to the
  // bound that is reached.
  double limit_for(int i, double rate, double relax, double& target) const {
    const int j = head_[i];
    const double v = x_[j];
    const double lo = lower_[j];
    const double hi = upper_[j];
    const double tol = cfg_.feasibility_tol;
    if (rate < 0) {
      if (v > hi + tol * std::max(1.0, std::abs(hi))) {
        target = hi;
        return (v - hi + relax) / -rate;
      }
      if (!std::isfinite(lo) || v < lo - tol * std::max(1.0, std::abs(lo))) return kInfinity;
      target = lo;
      return std::max(0.0, v - lo + relax) / -rate;
    }
    if (v < lo - tol * std::max(1.0, std::abs(lo))) {
      target = lo;
      return (lo - v + relax) / rate;
    }
    if (!std::isfinite(hi) || v > hi + tol * std::max(1.0, std::abs(hi))) return kInfinity;
    target = hi;
    return std::max(0.0, hi - v + relax) / rate;
  }

  StepOutcome pivot(int q, int dir, bool /*phase_two*/) {
    Eigen::VectorXd alpha = Eigen::VectorXd::Zero(m_);
    for_column(q, [&](int i, double v) { alpha.noalias() += v * binv_.col(i); });

    const double ptol = cfg_.pivot_tol;
    int leave = -1;
    double theta = kInfinity;
    double leave_target = 0.0;
    double dummy = 0.0;

    if (bland_) {
      for (int i = 0; i < m_; ++i) {
        if (std::abs(alpha[i]) <= ptol) continue;
        double target = 0.0;
        const double lim = limit_for(i, -dir * alpha[i], 0.0, target);
        if (!std::isfinite(lim)) continue;
        const bool tie = leave >= 0 && std::abs(lim - theta) <= 1e-12 * std::max(1.0, theta);
        if (lim < theta && !tie) {
          theta = lim;
          leave = i;
          leave_target = target;
        } else if (tie && head_[i] < head_[leave]) {
          leave = i;
          leave_target = target;
        }
      }
    } else {
      // Harris two-pass: find the relaxed step, then the largest pivot whose
      // exact limit fits within it.
      double relaxed = kInfinity;
      for (int i = 0; i < m_; ++i) {
        if (std::abs(alpha[i]) <= ptol) continue;
        const int j = head_[i];
        const double relax =
            cfg_.feasibility_tol * 0.5 *
            std::max(1.0, std::min(std::abs(lower_[j]) + 0.0, std::abs(upper_[j]) + 0.0));
        relaxed = std::min(relaxed, limit_for(i, -dir * alpha[i], relax, dummy));
      }
      if (std::isfinite(relaxed)) {
        double best_pivot = 0.0;
        for (int i = 0; i < m_; ++i) {
          if (std::abs(alpha[i]) <= ptol) continue;
          double target = 0.0;
          const double lim = limit_for(i, -dir * alpha[i], 0.0, target);
          if (lim <= relaxed && std::abs(alpha[i]) > best_pivot) {
            best_pivot = std::abs(alpha[i]);
            leave = i;
            theta = lim;
            leave_target = target;
          }
        }
      }
    }

    const double flip = upper_[q] - lower_[q];
    if (std::isfinite(flip) && flip <= theta) {
      // Bound flip: entering moves to its opposite bound, basis unchanged.
      apply_step(q, dir, flip, alpha);
      x_[q] = dir > 0 ? upper_[q] : lower_[q];
      note_progress(flip);
      return StepOutcome::moved;
    }
    if (leave < 0) return StepOutcome::unbounded;

    theta = std::max(0.0, theta);
    apply_step(q, dir, theta, alpha);
    const int out = head_[leave];
    x_[out] = leave_target;
    basis_pos_[out] = -1;
    basis_pos_[q] = leave;
    head_[leave] = q;

    // Rank-one update of the inverse.
    const double piv = alpha[leave];
    Eigen::RowVectorXd rho = binv_.row(leave) / piv;
    alpha[leave] -= 1.0;
    binv_.noalias() -= alpha * rho;
    ++since_refactor_;
    note_progress(theta);
    return StepOutcome::moved;
  }

  void apply_step(int q, int dir, double theta, const Eigen::VectorXd& alpha) {
    if (theta == 0.0) return;
    x_[q] += dir * theta;
    for (int i = 0; i < m_; ++i) x_[head_[i]] -= dir * theta * alpha[i];
  }

  void note_progress(double theta) {
    if (theta > 1e-12) {
      degenerate_run_ = 0;
      bland_ = false;
    } else if (++degenerate_run_ >= cfg_.degenerate_switch) {
      bland_ = true;
    }
  }

  const SolverConfig& cfg_;
  int n_ = 0;
  int m_ = 0;
  int total_ = 0;
  std::vector<int> col_start_;
  std::vector<int> row_idx_;
  std::vector<double> vals_;
  std::vector<double> lower_, upper_, cost_;
  std::vector<double> x_;
  std::vector<int> head_;
  std::vector<int> basis_pos_;
  Eigen::MatrixXd binv_;
  Eigen::VectorXd y_;
  long iterations_ = 0;
  int since_refactor_ = 0;
  int degenerate_run_ = 0;
  bool bland_ = false;
};

// Removes rows without coefficients. Returns false when one of them is
// violated, i.e. the problem is trivially infeasible.
bool drop_empty_rows(const LPProblem& p, LPProblem& reduced, std::vector<int>& kept,
                     double tol) {
  reduced = LPProblem(p.sense());
  for (const Variable& v : p.variables()) reduced.add_variable(v.name, v.lower, v.upper, v.objective);
  for (int i = 0; i < p.num_constraints(); ++i) {
    const Constraint& row = p.constraint(i);
    if (row.terms.empty()) {
      const bool ok = (row.relation == Relation::greater_equal && row.rhs <= tol) ||
                      (row.relation == Relation::less_equal && row.rhs >= -tol) ||
                      (row.relation == Relation::equal && std::abs(row.rhs) <= tol);
      if (!ok) return false;
      continue;
    }
    kept.push_back(i);
    reduced.add_constraint(row.terms, row.relation, row.rhs, row.name);
  }
  return true;
}

struct RouteResult {
  Status status = Status::infeasible;
  std::vector<double> x;
  std::vector<double> y;  // in the problem's own sense
  long iterations = 0;
  bool dualized = false;
  bool ambiguous = false;  // dual route could not tell infeasible from unbounded
};

RouteResult solve_primal_route(const LPProblem& p, const SolverConfig& cfg) {
  Simplex simplex(p, cfg);
  CoreResult core = simplex.run();
  RouteResult r;
  r.status = core.status;
  r.x = std::move(core.x);
  r.iterations = core.iterations;
  if (core.status == Status::optimal) {
    const double sign = p.sense() == Sense::minimize ? 1.0 : -1.0;
    r.y.resize(core.y.size());
    for (std::size_t i = 0; i < core.y.size(); ++i) r.y[i] = sign * core.y[i];
  }
  return r;
}

// Solves the LP dual with the primal core. The problem is first brought to
// minimization form with every variable free or nonnegative:
//   finite lower:  x = l + x'      (plus a row x' <= u - l when u is finite)
//   upper only:    x = u - x'
// The dual is  max b'^T y  s.t.  A'^T y <= c' (x' >= 0 columns),  = c' (free
// columns), with y sign-restricted by row relation. Its row duals are x'.
RouteResult solve_dual_route(const LPProblem& p, const SolverConfig& cfg) {
  const int n = p.num_variables();
  const int m = p.num_constraints();
  const double sign = p.sense() == Sense::minimize ? 1.0 : -1.0;

  std::vector<double> offset(n, 0.0);
  std::vector<double> flip(n, 1.0);
  std::vector<char> nonneg(n, 0);
  std::vector<std::pair<int, double>> box_rows;  // (var, u - l)
  for (int j = 0; j < n; ++j) {
    const Variable& v = p.variable(j);
    if (std::isfinite(v.lower)) {
      offset[j] = v.lower;
      nonneg[j] = 1;
      if (std::isfinite(v.upper)) box_rows.push_back({j, v.upper - v.lower});
    } else if (std::isfinite(v.upper)) {
      offset[j] = v.upper;
      flip[j] = -1.0;
      nonneg[j] = 1;
    }
  }

  // Column-wise view of A' = A * diag(flip), plus the box rows.
  const int md = m + static_cast<int>(box_rows.size());
  std::vector<std::vector<Term>> cols(n);
  std::vector<double> rhs(md);
  std::vector<Relation> rel(md);
  for (int i = 0; i < m; ++i) {
    const Constraint& row = p.constraint(i);
    double b = row.rhs;
    for (const Term& t : row.terms) {
      b -= t.coef * offset[t.var];
      cols[t.var].push_back({i, t.coef * flip[t.var]});
    }
    rhs[i] = b;
    rel[i] = row.relation;
  }
  for (std::size_t k = 0; k < box_rows.size(); ++k) {
    const int i = m + static_cast<int>(k);
    cols[box_rows[k].first].push_back({i, 1.0});
    rhs[i] = box_rows[k].second;
    rel[i] = Relation::less_equal;
  }

  LPProblem dual(Sense::maximize);
  for (int i = 0; i < md; ++i) {
    switch (rel[i]) {
      case Relation::greater_equal: dual.add_variable({}, 0.0, kInfinity, rhs[i]); break;
      case Relation::less_equal: dual.add_variable({}, -kInfinity, 0.0, rhs[i]); break;
      case Relation::equal: dual.add_variable({}, -kInfinity, kInfinity, rhs[i]); break;
    }
  }
  for (int j = 0; j < n; ++j) {
    const double c = sign * p.variable(j).objective * flip[j];
    dual.add_constraint(cols[j], nonneg[j] ? Relation::less_equal : Relation::equal, c);
  }

  Simplex simplex(dual, cfg);
  CoreResult core = simplex.run();
  RouteResult r;
  r.dualized = true;
  r.iterations = core.iterations;
  if (core.status == Status::unbounded) {
    r.status = Status::infeasible;
    return r;
  }
  if (core.status == Status::infeasible) {
    r.ambiguous = true;
    return r;
  }
  r.status = Status::optimal;
  // core.y holds duals of the maximization in minimization orientation, so
  // the sensitivity of the dual's maximum is -core.y.
  r.x.resize(n);
  for (int j = 0; j < n; ++j) r.x[j] = offset[j] + flip[j] * (-core.y[j]);
  r.y.resize(m);
  for (int i = 0; i < m; ++i) r.y[i] = sign * core.x[i];
  return r;
}

bool within(const Residuals& r, double tol) {
  return r.primal <= tol && r.dual <= tol && r.complementarity <= tol;
}

}  // namespace

LPSolution solve(const LPProblem& problem, const SolverConfig& config) {
  LPSolution sol;
  LPProblem reduced;
  std::vector<int> kept;
  if (!drop_empty_rows(problem, reduced, kept, config.feasibility_tol)) {
    sol.status = Status::infeasible;
    return sol;
  }

  bool use_dual = false;
  switch (config.route) {
    case SolverConfig::Route::automatic:
      use_dual = reduced.num_constraints() > reduced.num_variables();
      break;
    case SolverConfig::Route::primal: use_dual = false; break;
    case SolverConfig::Route::dual: use_dual = true; break;
  }

  const auto finish = [&](RouteResult r) -> std::optional<LPSolution> {
    LPSolution s;
    s.status = r.status;
    s.iterations = r.iterations;
    s.dualized = r.dualized;
    if (r.status != Status::optimal) return s;
    s.primal = std::move(r.x);
    s.dual.assign(problem.num_constraints(), 0.0);
    for (std::size_t k = 0; k < kept.size(); ++k) s.dual[kept[k]] = r.y[k];
    s.objective = problem.evaluate(s.primal);
    s.residuals = check_optimality(problem, s.primal, s.dual);
    if (!within(s.residuals, config.feasibility_tol)) return std::nullopt;
    return s;
  };

  std::optional<LPSolution> result;
  if (use_dual) {
    RouteResult r = solve_dual_route(reduced, config);
    if (!r.ambiguous) result = finish(std::move(r));
  }
  if (!result) {
    // Primal route: either chosen directly, or the dual route was
    // inconclusive or failed its residual check.
    result = finish(solve_primal_route(reduced, config));
  }
  if (!result) {
    SolverConfig tight = config;
    tight.refactor_interval = std::max(1, config.refactor_interval / 4);
    tight.pivot_tol = config.pivot_tol * 10;
    result = finish(solve_primal_route(reduced, tight));
  }
  if (!result) {
    throw Error(ErrorKind::numerical_failure,
                "optimal basis found but residuals exceed the feasibility tolerance");
  }
  return *result;
}

}  // namespace treebounds::lp
