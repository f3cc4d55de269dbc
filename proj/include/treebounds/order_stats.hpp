#pragma once

#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "treebounds/lp.hpp"
#include "treebounds/tree_model.hpp"

namespace treebounds {

enum class Copula { independence, comonotone, anti_comonotone };

std::string_view to_string(Copula c);
/// Accepts "independence", "comonotone", "anti-comonotone".
std::optional<Copula> parse_copula(std::string_view name);

/// Joint P(c_i = 1, c_j = 1) of two Bernoullis coupled by `kind`.
double copula_bivariate(Copula kind, double pi, double pj);

/// P(X <= x) for X ~ N(mu, sigma^2).
double gaussian_marginal_cdf(double mu, double sigma, double x);

/// Marginal and edge CDF values on a common threshold grid. Edge values are
/// keyed by the unordered pair of external ids (smaller id first). When
/// `copula` is set, edge values are derived from the marginals instead.
struct CdfGrid {
  std::vector<double> x;
  std::map<ExternalId, std::vector<double>> marginals;
  std::map<std::pair<ExternalId, ExternalId>, std::vector<double>> bivariates;
  std::optional<Copula> copula;

  /// Shapes, sortedness, ranges and monotone marginals; edge coverage for
  /// `topo`. Fréchet bounds are checked per point by threshold_model.
  void validate(const TreeTopology& topo) const;
};

/// {"x": [...], "marginals": {"1": [...]}, "bivariates": {"1-2": [...]}}
/// or with "copula": "comonotone" in place of "bivariates".
CdfGrid parse_cdf_grid(std::string_view text);

/// Independent-coordinate Gaussian marginals on `xs`, coupled by `copula`.
/// `mu` and `sigma` are indexed by internal node of `topo`.
CdfGrid gaussian_grid(const TreeTopology& topo, std::span<const double> mu,
                      std::span<const double> sigma, std::span<const double> xs,
                      Copula copula);

/// Bernoulli model of 1{X_i <= x} at grid index `point`. Throws
/// Error(frechet_violation) naming x when an edge is inconsistent.
TreeModel threshold_model(const std::shared_ptr<const TreeTopology>& topo, const CdfGrid& grid,
                          std::size_t point);

struct OrderStatPoint {
  double x = 0.0;
  double upper = 0.0;
  double lower = 0.0;
  double ci = 0.0;
  double univariate_upper = 0.0;
  double univariate_lower = 0.0;
};

struct OrderStatCurves {
  int k = 0;
  std::vector<OrderStatPoint> points;
};

/// Bounds on P(X_{k:n} <= x) = P(sum 1{X_i <= x} >= k) at every grid point.
OrderStatCurves sweep(const std::shared_ptr<const TreeTopology>& topo, const CdfGrid& grid,
                      int k, int jobs = 1, const lp::SolverConfig& cfg = {});

}  // namespace treebounds
