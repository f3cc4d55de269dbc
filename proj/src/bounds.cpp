#include "treebounds/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "treebounds/errors.hpp"

namespace treebounds {

namespace {

using lp::Relation;
using lp::Term;

constexpr double kValueSlack = 1e-7;

struct Target {
  std::optional<int> k;   // threshold mode
  std::vector<double> w;  // per-cardinality mode
};

BoundResult solve_compact(const TreeModel& t, const Target& target, const lp::SolverConfig& cfg) {
  const auto& topo = t.topology();
  const int n = topo.size();
  const int m = topo.edge_count();

  lp::LPProblem problem(lp::Sense::minimize);
  const int lambda = problem.add_variable("lambda", -lp::kInfinity, lp::kInfinity, 1.0);
  std::vector<int> alpha(n), tau(n), beta(m), delta(m), eta(m), gamma(m), chi(m);
  for (int i = 0; i < n; ++i) {
    const std::string id = std::to_string(topo.external_id(i));
    alpha[i] = problem.add_variable("alpha_" + id, -lp::kInfinity, lp::kInfinity, t.p(i));
    tau[i] = problem.add_variable("tau_" + id, 0.0);
  }
  for (int e = 0; e < m; ++e) {
    const auto& ed = topo.edge(e);
    const std::string id = std::to_string(topo.external_id(ed.parent)) + '_' +
                           std::to_string(topo.external_id(ed.child));
    beta[e] = problem.add_variable("beta_" + id, -lp::kInfinity, lp::kInfinity, t.p11(e));
    delta[e] = problem.add_variable("delta_" + id, 0.0);
    eta[e] = problem.add_variable("eta_" + id, 0.0);
    gamma[e] = problem.add_variable("gamma_" + id, 0.0);
    chi[e] = problem.add_variable("chi_" + id, 0.0);
  }

  // Separation rows: lambda + alpha.c + beta.cc >= 0 for every binary c.
  {
    std::vector<Term> row{{lambda, 1.0}};
    for (int e = 0; e < m; ++e) {
      row.push_back({delta[e], -1.0});
      row.push_back({chi[e], -1.0});
    }
    for (int i = 0; i < n; ++i) row.push_back({tau[i], -1.0});
    problem.add_constraint(row, Relation::greater_equal, 0.0, "sep_total");
  }
  for (int i = 0; i < n; ++i) {
    std::vector<Term> row{{tau[i], 1.0}, {alpha[i], 1.0}};
    for (int c : topo.children(i)) {
      const int e = topo.edge_into(c);
      row.push_back({delta[e], 1.0});
      row.push_back({eta[e], -1.0});
    }
    if (const int e = topo.edge_into(i); e >= 0) {
      row.push_back({delta[e], 1.0});
      row.push_back({gamma[e], -1.0});
    }
    problem.add_constraint(row, Relation::greater_equal, 0.0);
  }
  for (int e = 0; e < m; ++e) {
    problem.add_constraint({{eta[e], 1.0}, {gamma[e], 1.0}, {delta[e], -1.0}, {chi[e], 1.0},
                            {beta[e], 1.0}},
                           Relation::greater_equal, 0.0);
  }

  KnapsackLink link;
  link.lambda = lambda;
  if (target.k) {
    link.mode = KnapsackLink::Mode::threshold;
    link.k = *target.k;
    link.rhs = {1.0};
  } else {
    link.mode = KnapsackLink::Mode::per_cardinality;
    link.rhs = target.w;
  }
  const KnapsackBlock block = emit_knapsack_block(problem, topo, alpha, beta, link);

  const lp::LPSolution sol = lp::solve(problem, cfg);
  if (sol.status != lp::Status::optimal) {
    // Theta is never empty for a tree, so the dual is always bounded and
    // feasible; anything else means the solver went wrong.
    throw Error(ErrorKind::solver_failure,
                "compact LP returned " + std::string(lp::to_string(sol.status)));
  }

  const double cap = target.k ? 1.0 : *std::max_element(target.w.begin(), target.w.end());
  if (sol.objective < -kValueSlack || sol.objective > cap + kValueSlack) {
    throw Error(ErrorKind::invariant_breach, "bound value outside its feasible range");
  }

  BoundResult r;
  r.value = std::clamp(sol.objective, 0.0, cap);
  r.direction = Direction::upper;
  r.diagnostics = {sol.iterations, sol.residuals, sol.dualized, problem.num_constraints(),
                   problem.num_variables()};

  DualCertificate cert;
  const auto& x = sol.primal;
  cert.lambda = x[lambda];
  for (int i = 0; i < n; ++i) {
    cert.alpha.push_back(x[alpha[i]]);
    cert.tau.push_back(x[tau[i]]);
  }
  for (int e = 0; e < m; ++e) {
    cert.beta.push_back(x[beta[e]]);
    cert.delta.push_back(x[delta[e]]);
    cert.eta.push_back(x[eta[e]]);
    cert.gamma.push_back(x[gamma[e]]);
    cert.chi.push_back(x[chi[e]]);
  }
  for (int z : block.z) cert.z.push_back(x[z]);
  cert.x = StateTable<double>(topo, std::nan(""));
  for (int i = 0; i < n; ++i) {
    for (int s = 0; s <= topo.out_degree(i); ++s) {
      for (int y = 0; y <= 1; ++y) {
        for (int tt = y; tt <= topo.subtree_size(i, s) - 1 + y; ++tt) {
          const int v = block.x.at(i, s, y, tt);
          if (v >= 0) cert.x.at(i, s, y, tt) = x[v];
        }
      }
    }
  }
  r.certificate = std::move(cert);
  return r;
}

void require_weights(std::span<const double> w, int n) {
  if (static_cast<int>(w.size()) != n + 1) {
    throw Error(ErrorKind::invariant_breach,
                "weight vector needs " + std::to_string(n + 1) + " entries");
  }
  for (std::size_t s = 0; s < w.size(); ++s) {
    if (!std::isfinite(w[s]) || w[s] < 0.0) {
      throw Error(ErrorKind::negative_weight,
                  "weight w_" + std::to_string(s) + " must be finite and nonnegative");
    }
  }
}

void note(double violation, const std::string& what, CertificateCheck& out, double tol) {
  if (violation > out.max_violation) out.max_violation = violation;
  if (violation > tol && out.message.empty()) out.message = what;
}

}  // namespace

std::string_view to_string(Direction d) { return d == Direction::upper ? "upper" : "lower"; }

double DualCertificate::objective(const TreeModel& t) const {
  double v = lambda;
  for (int i = 0; i < t.size(); ++i) v += alpha[i] * t.p(i);
  for (int e = 0; e < t.topology().edge_count(); ++e) v += beta[e] * t.p11(e);
  return v;
}

BoundResult upper_bound(const TreeModel& t, int k, const lp::SolverConfig& cfg) {
  BoundResult r;
  if (k <= 0 || k > t.size()) {
    r.value = k <= 0 ? 1.0 : 0.0;
  } else {
    r = solve_compact(t, {k, {}}, cfg);
  }
  r.k = k;
  r.certificate_k = k;
  r.direction = Direction::upper;
  return r;
}

BoundResult lower_bound(const TreeModel& t, int k, const lp::SolverConfig& cfg) {
  const int n = t.size();
  BoundResult r;
  if (k <= 0 || k > n) {
    r.value = k <= 0 ? 1.0 : 0.0;
    r.certificate_k = k;
  } else {
    r = upper_bound(complement(t), n - k + 1, cfg);
    r.value = std::clamp(1.0 - r.value, 0.0, 1.0);
    r.complemented = true;
    r.offset = 1.0;
    r.sign = -1.0;
  }
  r.k = k;
  r.direction = Direction::lower;
  return r;
}

BoundResult weighted_bound(const TreeModel& t, std::span<const double> w, Direction dir,
                           const lp::SolverConfig& cfg) {
  require_weights(w, t.size());
  if (dir == Direction::upper) {
    BoundResult r = solve_compact(t, {std::nullopt, {w.begin(), w.end()}}, cfg);
    r.certificate_w.assign(w.begin(), w.end());
    return r;
  }
  // min sum w_s P_s = w_max - max sum (w_max - w_s) P_s, using sum P_s = 1.
  const double w_max = *std::max_element(w.begin(), w.end());
  std::vector<double> flipped(w.size());
  for (std::size_t s = 0; s < w.size(); ++s) flipped[s] = w_max - w[s];
  BoundResult r = solve_compact(t, {std::nullopt, flipped}, cfg);
  r.value = std::clamp(w_max - r.value, 0.0, w_max);
  r.certificate_w = std::move(flipped);
  r.offset = w_max;
  r.sign = -1.0;
  r.direction = Direction::lower;
  return r;
}

BoundResult partition_bound(std::span<const double> a_probs, const TreeModel& t_b, int k,
                            Direction dir, const lp::SolverConfig& cfg) {
  std::vector<double> w(t_b.size() + 1);
  for (int s = 0; s <= t_b.size(); ++s) w[s] = poisson_binomial_tail(a_probs, k - s);
  BoundResult r = weighted_bound(t_b, w, dir, cfg);
  r.k = k;
  return r;
}

double univariate_upper(std::span<const double> p, int k) {
  const int n = static_cast<int>(p.size());
  if (k <= 0) return 1.0;
  if (k > n) return 0.0;
  std::vector<double> sorted(p.begin(), p.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> prefix(n + 1, 0.0);
  for (int i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + sorted[i];
  double best = 1.0;
  for (int t = 0; t <= k - 1; ++t) best = std::min(best, prefix[n - t] / (k - t));
  return best;
}

double univariate_lower(std::span<const double> p, int k) {
  const int n = static_cast<int>(p.size());
  if (k <= 0) return 1.0;
  if (k > n) return 0.0;
  std::vector<double> q(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) q[i] = 1.0 - p[i];
  return std::clamp(1.0 - univariate_upper(q, n - k + 1), 0.0, 1.0);
}

std::vector<double> poisson_binomial_pmf(std::span<const double> p) {
  std::vector<double> pmf{1.0};
  for (double pi : p) {
    std::vector<double> next(pmf.size() + 1, 0.0);
    for (std::size_t s = 0; s < pmf.size(); ++s) {
      next[s] += pmf[s] * (1.0 - pi);
      next[s + 1] += pmf[s] * pi;
    }
    pmf = std::move(next);
  }
  return pmf;
}

double poisson_binomial_tail(std::span<const double> p, int m) {
  const int n = static_cast<int>(p.size());
  if (m <= 0) return 1.0;
  if (m > n) return 0.0;
  const auto pmf = poisson_binomial_pmf(p);
  double tail = 0.0;
  for (int s = n; s >= m; --s) tail += pmf[s];
  return std::min(tail, 1.0);
}

CertificateCheck verify_certificate(const TreeModel& t, const DualCertificate& cert,
                                    double claimed_value, std::optional<int> threshold_k,
                                    std::span<const double> w, double tol) {
  const auto& topo = t.topology();
  const int n = topo.size();
  const int m = topo.edge_count();
  CertificateCheck out;
  const auto sized = [](const std::vector<double>& v, int len) {
    return static_cast<int>(v.size()) == len;
  };
  if (!sized(cert.alpha, n) || !sized(cert.tau, n) || !sized(cert.beta, m) ||
      !sized(cert.delta, m) || !sized(cert.eta, m) || !sized(cert.gamma, m) ||
      !sized(cert.chi, m) || cert.z.size() != (threshold_k ? 1u : std::size_t(n) + 1) ||
      (!threshold_k && static_cast<int>(w.size()) != n + 1)) {
    out.message = "certificate dimensions do not match the model";
    out.max_violation = std::numeric_limits<double>::infinity();
    return out;
  }

  for (int i = 0; i < n; ++i) note(-cert.tau[i], "negative tau", out, tol);
  for (int e = 0; e < m; ++e) {
    note(-cert.delta[e], "negative delta", out, tol);
    note(-cert.eta[e], "negative eta", out, tol);
    note(-cert.gamma[e], "negative gamma", out, tol);
    note(-cert.chi[e], "negative chi", out, tol);
  }

  double total = cert.lambda;
  for (int e = 0; e < m; ++e) total -= cert.delta[e] + cert.chi[e];
  for (int i = 0; i < n; ++i) total -= cert.tau[i];
  note(-total, "separation total row violated", out, tol);
  for (int i = 0; i < n; ++i) {
    double row = cert.tau[i] + cert.alpha[i];
    for (int c : topo.children(i)) {
      const int e = topo.edge_into(c);
      row += cert.delta[e] - cert.eta[e];
    }
    if (const int e = topo.edge_into(i); e >= 0) row += cert.delta[e] - cert.gamma[e];
    note(-row, "separation node row violated", out, tol);
  }
  for (int e = 0; e < m; ++e) {
    const double row = cert.eta[e] + cert.gamma[e] - cert.delta[e] + cert.chi[e] + cert.beta[e];
    note(-row, "separation edge row violated", out, tol);
  }

  // Exponential row families, checked exactly with the knapsack DP.
  KnapsackInstance inst{t.shared_topology(), cert.alpha, cert.beta, 0};
  const std::vector<double> best = qkp_by_cardinality(inst);
  const double overall = *std::min_element(best.begin(), best.end());
  note(-(cert.lambda + overall), "some outcome has negative dual slack", out, tol);
  if (threshold_k) {
    const int k = std::max(0, *threshold_k);
    const double in_event = *std::min_element(best.begin() + k, best.end());
    note(1.0 - (cert.lambda + in_event), "an outcome in the event is not covered", out, tol);
    note(1.0 - (cert.lambda + cert.z[0]), "linking row violated", out, tol);
    note(cert.z[0] - in_event, "z exceeds the knapsack optimum", out, tol);
  } else {
    for (int s = 0; s <= n; ++s) {
      note(w[s] - (cert.lambda + best[s]), "a cardinality is not covered", out, tol);
      note(w[s] - (cert.lambda + cert.z[s]), "linking row violated", out, tol);
      note(cert.z[s] - best[s], "z exceeds the knapsack optimum", out, tol);
    }
  }

  note(std::abs(cert.objective(t) - claimed_value), "objective does not match the value", out,
       tol);
  out.ok = out.max_violation <= tol;
  if (out.ok) out.message = "ok";
  return out;
}

CertificateCheck verify_bound(const TreeModel& t, const BoundResult& r, double tol) {
  if (!r.certificate) {
    CertificateCheck out;
    const bool trivial = r.k <= 0 || r.k > t.size();
    const double expect = r.k <= 0 ? 1.0 : 0.0;
    out.ok = trivial && r.value == expect;
    out.message = out.ok ? "ok" : "missing certificate";
    return out;
  }
  const TreeModel model = r.complemented ? complement(t) : t;
  const double claimed = (r.value - r.offset) / r.sign;
  if (r.certificate_w.empty()) {
    return verify_certificate(model, *r.certificate, claimed, r.certificate_k, {}, tol);
  }
  return verify_certificate(model, *r.certificate, claimed, std::nullopt, r.certificate_w, tol);
}

}  // namespace treebounds
