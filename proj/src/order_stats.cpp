#include "treebounds/order_stats.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <string>

#include "json.hpp"
#include "treebounds/bounds.hpp"
#include "treebounds/cond_ind.hpp"
#include "treebounds/errors.hpp"
#include "treebounds/parallel.hpp"

namespace treebounds {

namespace {

using Json = nlohmann::json;

[[noreturn]] void parse_fail(const std::string& message) {
  throw Error(ErrorKind::parse_error, message);
}

ExternalId parse_id(std::string_view s, const std::string& where) {
  ExternalId v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    parse_fail(where + ": \"" + std::string(s) + "\" is not an integer id");
  }
  return v;
}

std::vector<double> number_array(const Json& v, const std::string& where) {
  if (!v.is_array()) parse_fail(where + " must be an array");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number() || !std::isfinite(e.get<double>())) {
      parse_fail(where + " must hold finite numbers");
    }
    out.push_back(e.get<double>());
  }
  return out;
}

std::pair<ExternalId, ExternalId> edge_key(ExternalId a, ExternalId b) {
  return std::minmax(a, b);
}

std::string format_x(double x) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

}  // namespace

std::string_view to_string(Copula c) {
  switch (c) {
    case Copula::independence: return "independence";
    case Copula::comonotone: return "comonotone";
    case Copula::anti_comonotone: return "anti-comonotone";
  }
  return "unknown";
}

std::optional<Copula> parse_copula(std::string_view name) {
  if (name == "independence") return Copula::independence;
  if (name == "comonotone") return Copula::comonotone;
  if (name == "anti-comonotone") return Copula::anti_comonotone;
  return std::nullopt;
}

double copula_bivariate(Copula kind, double pi, double pj) {
  switch (kind) {
    case Copula::independence: return pi * pj;
    case Copula::comonotone: return std::min(pi, pj);
    case Copula::anti_comonotone: return std::max(pi + pj - 1.0, 0.0);
  }
  return 0.0;
}

double gaussian_marginal_cdf(double mu, double sigma, double x) {
  if (!(sigma > 0.0)) throw Error(ErrorKind::invariant_breach, "sigma must be positive");
  return 0.5 * std::erfc(-(x - mu) / (sigma * std::sqrt(2.0)));
}

void CdfGrid::validate(const TreeTopology& topo) const {
  const std::size_t len = x.size();
  if (len == 0) throw Error(ErrorKind::parse_error, "grid has no points");
  for (std::size_t i = 0; i < len; ++i) {
    if (!std::isfinite(x[i]) || (i > 0 && !(x[i] > x[i - 1]))) {
      throw Error(ErrorKind::parse_error, "grid x values must be finite and strictly increasing");
    }
  }
  for (int node = 0; node < topo.size(); ++node) {
    const ExternalId id = topo.external_id(node);
    const auto it = marginals.find(id);
    if (it == marginals.end()) {
      throw Error(ErrorKind::unknown_node, "grid has no marginal for node " + std::to_string(id));
    }
    const auto& v = it->second;
    if (v.size() != len) {
      throw Error(ErrorKind::parse_error,
                  "marginal of node " + std::to_string(id) + " has the wrong length");
    }
    for (std::size_t i = 0; i < len; ++i) {
      if (!(v[i] >= 0.0 && v[i] <= 1.0)) {
        throw Error(ErrorKind::probability_out_of_range,
                    "marginal of node " + std::to_string(id) + " at x=" + format_x(x[i]) +
                        " is outside [0,1]");
      }
      if (i > 0 && v[i] < v[i - 1]) {
        throw Error(ErrorKind::parse_error,
                    "marginal of node " + std::to_string(id) + " decreases at x=" +
                        format_x(x[i]));
      }
    }
  }
  for (const auto& [id, v] : marginals) topo.index_of(id);
  if (copula) return;
  for (const auto& e : topo.edges()) {
    const auto key = edge_key(topo.external_id(e.parent), topo.external_id(e.child));
    const auto it = bivariates.find(key);
    if (it == bivariates.end()) {
      throw Error(ErrorKind::parse_error, "grid has no bivariate for edge " +
                                              std::to_string(key.first) + "-" +
                                              std::to_string(key.second));
    }
    if (it->second.size() != len) {
      throw Error(ErrorKind::parse_error, "bivariate for edge " + std::to_string(key.first) +
                                              "-" + std::to_string(key.second) +
                                              " has the wrong length");
    }
  }
}

CdfGrid parse_cdf_grid(std::string_view text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    parse_fail(std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) parse_fail("grid document must be a JSON object");
  for (const auto& [key, value] : doc.items()) {
    if (key != "x" && key != "marginals" && key != "bivariates" && key != "copula") {
      parse_fail("unknown field \"" + key + "\" in grid");
    }
  }
  CdfGrid grid;
  if (!doc.contains("x")) parse_fail("grid: missing \"x\"");
  grid.x = number_array(doc["x"], "grid x");
  if (!doc.contains("marginals") || !doc["marginals"].is_object()) {
    parse_fail("grid: \"marginals\" must be an object");
  }
  for (const auto& [key, value] : doc["marginals"].items()) {
    grid.marginals[parse_id(key, "marginals")] = number_array(value, "marginal " + key);
  }
  const bool has_bivariates = doc.contains("bivariates");
  const bool has_copula = doc.contains("copula");
  if (has_bivariates == has_copula) {
    parse_fail("grid needs exactly one of \"bivariates\" and \"copula\"");
  }
  if (has_copula) {
    if (!doc["copula"].is_string()) parse_fail("grid: \"copula\" must be a string");
    grid.copula = parse_copula(doc["copula"].get<std::string>());
    if (!grid.copula) parse_fail("grid: unknown copula \"" + doc["copula"].get<std::string>() + "\"");
  } else {
    if (!doc["bivariates"].is_object()) parse_fail("grid: \"bivariates\" must be an object");
    for (const auto& [key, value] : doc["bivariates"].items()) {
      const auto dash = key.find('-', 1);
      if (dash == std::string::npos) parse_fail("bivariate key \"" + key + "\" is not \"i-j\"");
      const ExternalId a = parse_id(std::string_view(key).substr(0, dash), "bivariates");
      const ExternalId b = parse_id(std::string_view(key).substr(dash + 1), "bivariates");
      if (!grid.bivariates.emplace(edge_key(a, b), number_array(value, "bivariate " + key))
               .second) {
        parse_fail("bivariate for edge " + key + " given twice");
      }
    }
  }
  return grid;
}

CdfGrid gaussian_grid(const TreeTopology& topo, std::span<const double> mu,
                      std::span<const double> sigma, std::span<const double> xs,
                      Copula copula) {
  CdfGrid grid;
  grid.x.assign(xs.begin(), xs.end());
  grid.copula = copula;
  for (int i = 0; i < topo.size(); ++i) {
    auto& v = grid.marginals[topo.external_id(i)];
    for (double x : xs) v.push_back(gaussian_marginal_cdf(mu[i], sigma[i], x));
  }
  return grid;
}

TreeModel threshold_model(const std::shared_ptr<const TreeTopology>& topo, const CdfGrid& grid,
                          std::size_t point) {
  std::vector<double> p(topo->size());
  for (int i = 0; i < topo->size(); ++i) {
    p[i] = grid.marginals.at(topo->external_id(i)).at(point);
  }
  std::vector<double> p11(topo->edge_count());
  for (int e = 0; e < topo->edge_count(); ++e) {
    const auto& ed = topo->edge(e);
    if (grid.copula) {
      p11[e] = copula_bivariate(*grid.copula, p[ed.parent], p[ed.child]);
    } else {
      p11[e] = grid.bivariates
                   .at(edge_key(topo->external_id(ed.parent), topo->external_id(ed.child)))
                   .at(point);
    }
  }
  try {
    return TreeModel(topo, std::move(p), std::move(p11));
  } catch (const Error& err) {
    throw Error(err.kind(), "at x=" + format_x(grid.x.at(point)) + ": " + err.what());
  }
}

OrderStatCurves sweep(const std::shared_ptr<const TreeTopology>& topo, const CdfGrid& grid,
                      int k, int jobs, const lp::SolverConfig& cfg) {
  grid.validate(*topo);
  if (k < 1 || k > topo->size()) {
    throw Error(ErrorKind::infeasible_cardinality, "order statistic index out of range");
  }
  OrderStatCurves curves;
  curves.k = k;
  curves.points.resize(grid.x.size());
  parallel_for(grid.x.size(), jobs, [&](std::size_t i) {
    const TreeModel model = threshold_model(topo, grid, i);
    OrderStatPoint& pt = curves.points[i];
    pt.x = grid.x[i];
    pt.upper = upper_bound(model, k, cfg).value;
    pt.lower = lower_bound(model, k, cfg).value;
    pt.ci = ci_tail(model, k);
    pt.univariate_upper = univariate_upper(model.marginals(), k);
    pt.univariate_lower = univariate_lower(model.marginals(), k);
  });
  return curves;
}

}  // namespace treebounds
