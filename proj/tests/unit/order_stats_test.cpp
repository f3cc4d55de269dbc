#include "treebounds/bounds.hpp"
#include "treebounds/errors.hpp"
#include "treebounds/generators.hpp"
#include "treebounds/oracle.hpp"
#include "treebounds/order_stats.hpp"

#include <gtest/gtest.h>

namespace tb = treebounds;

namespace {

std::shared_ptr<const tb::TreeTopology> series(int n) {
  std::vector<tb::ExternalId> ids;
  std::vector<std::pair<tb::ExternalId, tb::ExternalId>> edges;
  for (int i = 1; i <= n; ++i) {
    ids.push_back(i);
    if (i > 1) edges.push_back({i - 1, i});
  }
  return tb::TreeTopology::build(1, ids, edges);
}

const std::vector<double> kMeans{0.5426, -0.9585, 0.2673, 0.4976, -0.0030};

std::vector<double> grid_points(double lo, double hi, double step) {
  std::vector<double> xs;
  const int count = static_cast<int>(std::lround((hi - lo) / step));
  for (int i = 0; i <= count; ++i) xs.push_back(lo + step * i);
  return xs;
}

}  // namespace

TEST(Copula, Formulas) {
  EXPECT_DOUBLE_EQ(tb::copula_bivariate(tb::Copula::comonotone, 0.3, 0.7), 0.3);
  EXPECT_DOUBLE_EQ(tb::copula_bivariate(tb::Copula::anti_comonotone, 0.3, 0.7), 0.0);
  EXPECT_DOUBLE_EQ(tb::copula_bivariate(tb::Copula::independence, 0.3, 0.7), 0.21);
  EXPECT_EQ(tb::parse_copula("anti-comonotone"), tb::Copula::anti_comonotone);
  EXPECT_FALSE(tb::parse_copula("gumbel"));
}

TEST(Gaussian, Cdf) {
  EXPECT_DOUBLE_EQ(tb::gaussian_marginal_cdf(0, 1, 0), 0.5);
  EXPECT_DOUBLE_EQ(tb::gaussian_marginal_cdf(0, 1, 1e300), 1.0);
  EXPECT_DOUBLE_EQ(tb::gaussian_marginal_cdf(0.5426, 1, 0.5426), 0.5);
  EXPECT_NEAR(tb::gaussian_marginal_cdf(0, 1, 1.0), 0.8413447460685429, 1e-15);
  EXPECT_NEAR(tb::gaussian_marginal_cdf(0, 1, -5.0), 2.866515718791939e-07, 1e-20);
}

TEST(ThresholdModel, ExtremesAndIndependence) {
  const auto topo = series(5);
  const auto xs = grid_points(-30, 30, 1.0);
  const std::vector<double> sigma(5, 1.0);
  const auto grid = tb::gaussian_grid(*topo, kMeans, sigma, xs, tb::Copula::independence);
  const auto low = tb::threshold_model(topo, grid, 0);
  const auto high = tb::threshold_model(topo, grid, xs.size() - 1);
  for (int i = 0; i < 5; ++i) {
    EXPECT_NEAR(low.p(i), 0.0, 1e-150);
    EXPECT_EQ(high.p(i), 1.0);
  }
  for (int e = 0; e < 4; ++e) {
    EXPECT_NEAR(low.p11(e), 0.0, 1e-150);
    EXPECT_EQ(high.p11(e), 1.0);
  }
  const auto mid = tb::threshold_model(topo, grid, 30);
  for (int e = 0; e < 4; ++e) {
    const auto& ed = topo->edge(e);
    EXPECT_DOUBLE_EQ(mid.p11(e), mid.p(ed.parent) * mid.p(ed.child));
  }
}

TEST(Sweep, GaussianIndependenceMatchesPoissonBinomial) {
  const auto topo = series(5);
  const auto xs = grid_points(-3, 3, 0.1);
  const std::vector<double> sigma(5, 1.0);
  const auto grid = tb::gaussian_grid(*topo, kMeans, sigma, xs, tb::Copula::independence);
  for (int k : {1, 3, 5}) {
    const auto curves = tb::sweep(topo, grid, k, 2);
    ASSERT_EQ(curves.points.size(), 61u);
    double prev = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const auto& pt = curves.points[i];
      std::vector<double> p;
      for (int j = 0; j < 5; ++j) p.push_back(tb::gaussian_marginal_cdf(kMeans[j], 1.0, xs[i]));
      EXPECT_NEAR(pt.ci, tb::poisson_binomial_tail(p, k), 1e-10);
      EXPECT_GE(pt.ci, prev - 1e-15);
      prev = pt.ci;
      EXPECT_LE(pt.univariate_lower, pt.lower + 1e-7);
      EXPECT_LE(pt.lower, pt.ci + 1e-7);
      EXPECT_LE(pt.ci, pt.upper + 1e-7);
      EXPECT_LE(pt.upper, pt.univariate_upper + 1e-7);
      if (k == 1) {
        const auto m = tb::threshold_model(topo, grid, i);
        double hw = 0.0;
        for (int j = 0; j < 5; ++j) hw += m.p(j);
        for (int e = 0; e < 4; ++e) hw -= m.p11(e);
        EXPECT_NEAR(pt.upper, std::min(1.0, hw), 1e-7);
      }
    }
  }
}

TEST(Sweep, ComonotoneIdenticalMarginalsAgainstOracle) {
  const auto topo = series(4);
  const std::vector<double> xs{-1.5, -0.5, 0.0, 0.7, 1.9};
  const std::vector<double> mu(4, 0.0), sigma(4, 1.0);
  const auto grid = tb::gaussian_grid(*topo, mu, sigma, xs, tb::Copula::comonotone);
  for (int k = 1; k <= 4; ++k) {
    const auto curves = tb::sweep(topo, grid, k);
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const auto g = tb::general_from_tree(tb::threshold_model(topo, grid, i));
      const double px = tb::gaussian_marginal_cdf(0, 1, xs[i]);
      // Comonotone identical coordinates move together: the law is pinned.
      EXPECT_NEAR(curves.points[i].upper, px, 1e-7);
      EXPECT_NEAR(curves.points[i].lower, px, 1e-7);
      EXPECT_NEAR(curves.points[i].upper, tb::oracle_bound(g, k, tb::Direction::upper).value,
                  1e-7);
      EXPECT_NEAR(curves.points[i].lower, tb::oracle_bound(g, k, tb::Direction::lower).value,
                  1e-7);
    }
  }
}

TEST(Sweep, ExtremePointsAreZeroAndOne) {
  const auto topo = series(5);
  const std::vector<double> xs{-40.0, 40.0};
  const std::vector<double> sigma(5, 1.0);
  const auto grid = tb::gaussian_grid(*topo, kMeans, sigma, xs, tb::Copula::independence);
  for (int k = 1; k <= 5; ++k) {
    const auto c = tb::sweep(topo, grid, k);
    const auto& a = c.points[0];
    const auto& b = c.points[1];
    for (double v : {a.upper, a.lower, a.ci, a.univariate_upper, a.univariate_lower}) {
      EXPECT_NEAR(v, 0.0, 1e-9);
    }
    for (double v : {b.upper, b.lower, b.ci, b.univariate_upper, b.univariate_lower}) {
      EXPECT_NEAR(v, 1.0, 1e-9);
    }
  }
}

TEST(CdfGridJson, ParseAndReportFrechetPoint) {
  const auto topo = series(2);
  const auto grid = tb::parse_cdf_grid(R"({
    "x": [0, 1, 2],
    "marginals": {"1": [0.1, 0.5, 0.9], "2": [0.2, 0.5, 0.8]},
    "bivariates": {"2-1": [0.05, 0.6, 0.75]}})");
  EXPECT_NO_THROW(grid.validate(*topo));
  EXPECT_NO_THROW(tb::threshold_model(topo, grid, 0));
  try {
    tb::sweep(topo, grid, 1);
    ADD_FAILURE();
  } catch (const tb::Error& e) {
    EXPECT_EQ(e.kind(), tb::ErrorKind::frechet_violation);
    EXPECT_NE(std::string(e.what()).find("x=1"), std::string::npos) << e.what();
  }
  EXPECT_THROW(tb::parse_cdf_grid(R"({"x":[0],"marginals":{"1":[0.1]},"copula":"gumbel"})"),
               tb::Error);
  EXPECT_THROW(tb::parse_cdf_grid(R"({"x":[0],"marginals":{"1":[0.1]}})"), tb::Error);
  const auto cop = tb::parse_cdf_grid(
      R"({"x":[0,1],"marginals":{"1":[0.1,0.2],"2":[0.3,0.4]},"copula":"comonotone"})");
  EXPECT_DOUBLE_EQ(tb::threshold_model(topo, cop, 1).p11(0), 0.2);
  const auto decreasing = tb::parse_cdf_grid(
      R"({"x":[0,1],"marginals":{"1":[0.3,0.2],"2":[0.3,0.4]},"copula":"independence"})");
  EXPECT_THROW(decreasing.validate(*topo), tb::Error);
}
