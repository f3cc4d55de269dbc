#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "treebounds/knapsack.hpp"
#include "treebounds/lp.hpp"
#include "treebounds/tree_model.hpp"

namespace treebounds {

enum class Direction { upper, lower };

std::string_view to_string(Direction d);

/// Dual variables of the compact LP. Node vectors are indexed by internal
/// node, edge vectors by edge index. `z` holds one entry in threshold mode
/// and n + 1 entries (one per cardinality) in weighted mode.
struct DualCertificate {
  double lambda = 0.0;
  std::vector<double> alpha;
  std::vector<double> beta;
  std::vector<double> delta;
  std::vector<double> eta;
  std::vector<double> gamma;
  std::vector<double> chi;
  std::vector<double> tau;
  std::vector<double> z;
  StateTable<double> x;

  /// lambda + sum alpha_i p_i + sum beta_ij p_ij
  double objective(const TreeModel& t) const;
};

struct SolverDiagnostics {
  long iterations = 0;
  lp::Residuals residuals;
  bool dualized = false;
  int lp_rows = 0;
  int lp_columns = 0;
};

struct BoundResult {
  double value = 0.0;
  int k = 0;
  Direction direction = Direction::upper;
  /// Empty for short-circuited queries (k <= 0 or k > n).
  std::optional<DualCertificate> certificate;
  /// Lower bounds and weighted minimization are solved as maximization on a
  /// transformed problem; the certificate belongs to this transformed
  /// problem and these fields describe the transform.
  bool complemented = false;           // certificate is for complement(t)
  int certificate_k = 0;               // threshold the certificate proves
  std::vector<double> certificate_w;   // weights the certificate proves
  double offset = 0.0;                 // value = offset + sign * certificate value
  double sign = 1.0;
  SolverDiagnostics diagnostics;
};

/// U(k) = max over Theta of P(sum c_i >= k). k <= 0 gives 1, k > n gives 0.
BoundResult upper_bound(const TreeModel& t, int k, const lp::SolverConfig& cfg = {});

/// L(k) = 1 - U_complement(n - k + 1).
BoundResult lower_bound(const TreeModel& t, int k, const lp::SolverConfig& cfg = {});

/// max (upper) or min (lower) of sum_s w_s P(sum c_i = s); w has n + 1
/// entries, all >= 0 (Error(negative_weight) otherwise).
BoundResult weighted_bound(const TreeModel& t, std::span<const double> w, Direction dir,
                           const lp::SolverConfig& cfg = {});

/// Bound on P(sum_{A} c + sum_{B} c >= k) with the A-variables independent
/// Bernoulli(a_probs) and independent of the tree-structured B-variables.
BoundResult partition_bound(std::span<const double> a_probs, const TreeModel& t_b, int k,
                            Direction dir, const lp::SolverConfig& cfg = {});

/// Bound from the marginals alone: min over t in [0, k-1] of
/// (sum of the n - t smallest p) / (k - t), capped at 1.
double univariate_upper(std::span<const double> p, int k);
/// 1 - univariate_upper(1 - p, n - k + 1).
double univariate_lower(std::span<const double> p, int k);

/// Distribution of the number of successes among independent Bernoullis.
std::vector<double> poisson_binomial_pmf(std::span<const double> p);
/// P(S >= m); m <= 0 gives 1 and m > n gives 0.
double poisson_binomial_tail(std::span<const double> p, int m);

struct CertificateCheck {
  bool ok = false;
  double max_violation = 0.0;
  std::string message;
};

/// Re-derives feasibility of a certificate without the LP: sign constraints,
/// the separation rows, and the two exponential families of dual rows via the
/// knapsack DP (every outcome, and every outcome in the target event).
/// `threshold_k` selects threshold mode; otherwise `w` gives per-cardinality
/// right-hand sides.
CertificateCheck verify_certificate(const TreeModel& t, const DualCertificate& cert,
                                    double claimed_value, std::optional<int> threshold_k,
                                    std::span<const double> w = {}, double tol = 1e-7);

/// Checks a BoundResult end to end, including the transform to the model the
/// certificate belongs to.
CertificateCheck verify_bound(const TreeModel& t, const BoundResult& r, double tol = 1e-7);

}  // namespace treebounds
