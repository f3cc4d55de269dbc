#include "treebounds/oracle.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <limits>
#include <map>
#include "json.hpp"
#include <set>
#include <string>

#include "treebounds/errors.hpp"

namespace treebounds {

namespace {

using Json = nlohmann::json;

void check_size(int n) {
  if (n > kOracleMaxNodes) {
    throw Error(ErrorKind::size_cap, "exhaustive enumeration is capped at " +
                                         std::to_string(kOracleMaxNodes) + " nodes, got " +
                                         std::to_string(n));
  }
}

// Neumaier's variant of compensated summation.
class CompensatedSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

[[noreturn]] void parse_fail(const std::string& message) {
  throw Error(ErrorKind::parse_error, message);
}

void allow_only(const Json& obj, std::initializer_list<std::string_view> allowed,
                const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      parse_fail("unknown field \"" + key + "\" in " + where);
    }
  }
}

double number(const Json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key) || !obj[key].is_number()) {
    parse_fail(where + ": field \"" + key + "\" must be a number");
  }
  const double v = obj[key].get<double>();
  if (!std::isfinite(v)) parse_fail(where + ": field \"" + key + "\" is not finite");
  return v;
}

ExternalId integer(const Json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key) || !obj[key].is_number_integer()) {
    parse_fail(where + ": field \"" + key + "\" must be an integer");
  }
  return obj[key].get<ExternalId>();
}

OracleResult solve_primal(const GeneralMarginalModel& m, std::span<const double> outcome_weight,
                          Direction dir, const lp::SolverConfig& cfg) {
  const int n = m.size();
  const std::uint32_t outcomes = 1u << n;
  lp::LPProblem problem(dir == Direction::upper ? lp::Sense::maximize : lp::Sense::minimize);
  for (std::uint32_t c = 0; c < outcomes; ++c) {
    problem.add_variable({}, 0.0, lp::kInfinity, outcome_weight[std::popcount(c)]);
  }
  std::vector<lp::Term> row;
  row.reserve(outcomes);
  for (std::uint32_t c = 0; c < outcomes; ++c) row.push_back({static_cast<int>(c), 1.0});
  problem.add_constraint(row, lp::Relation::equal, 1.0, "total");
  for (int i = 0; i < n; ++i) {
    row.clear();
    for (std::uint32_t c = 0; c < outcomes; ++c) {
      if (c >> i & 1u) row.push_back({static_cast<int>(c), 1.0});
    }
    problem.add_constraint(row, lp::Relation::equal, m.p[i]);
  }
  for (const auto& e : m.edges) {
    row.clear();
    const std::uint32_t mask = (1u << e.i) | (1u << e.j);
    for (std::uint32_t c = 0; c < outcomes; ++c) {
      if ((c & mask) == mask) row.push_back({static_cast<int>(c), 1.0});
    }
    problem.add_constraint(row, lp::Relation::equal, e.p11);
  }
  const lp::LPSolution sol = lp::solve(problem, cfg);
  OracleResult out;
  out.status = sol.status;
  if (sol.status == lp::Status::optimal) {
    out.value = sol.objective;
    out.theta = sol.primal;
  }
  return out;
}

}  // namespace

void GeneralMarginalModel::validate() const {
  const int n = size();
  if (static_cast<int>(ids.size()) != n) {
    throw Error(ErrorKind::invariant_breach, "general model ids and marginals differ in size");
  }
  std::set<ExternalId> seen;
  for (int i = 0; i < n; ++i) {
    if (!seen.insert(ids[i]).second) {
      throw Error(ErrorKind::duplicate_node, "node " + std::to_string(ids[i]) + " repeated");
    }
    if (!(p[i] >= -kFrechetTolerance && p[i] <= 1.0 + kFrechetTolerance)) {
      throw Error(ErrorKind::probability_out_of_range,
                  "p of node " + std::to_string(ids[i]) + " is outside [0,1]");
    }
  }
  std::set<std::pair<int, int>> pairs;
  for (const auto& e : edges) {
    if (e.i < 0 || e.i >= n || e.j < 0 || e.j >= n) {
      throw Error(ErrorKind::unknown_node, "edge references an unknown node");
    }
    const std::string name = "(" + std::to_string(ids[e.i]) + "," + std::to_string(ids[e.j]) + ")";
    if (e.i == e.j) throw Error(ErrorKind::cycle_detected, "self-loop on edge " + name);
    if (!pairs.insert(std::minmax(e.i, e.j)).second) {
      throw Error(ErrorKind::duplicate_edge, "edge " + name + " repeated");
    }
    const double lo = std::max(0.0, p[e.i] + p[e.j] - 1.0);
    const double hi = std::min(p[e.i], p[e.j]);
    if (e.p11 < lo - kFrechetTolerance) {
      throw Error(ErrorKind::frechet_violation,
                  "edge " + name + ": p11 below max(0, p_i + p_j - 1)");
    }
    if (e.p11 > hi + kFrechetTolerance) {
      throw Error(ErrorKind::frechet_violation, "edge " + name + ": p11 above min(p_i, p_j)");
    }
  }
}

GeneralMarginalModel general_from_tree(const TreeModel& t) {
  GeneralMarginalModel m;
  const auto& topo = t.topology();
  for (int i = 0; i < t.size(); ++i) {
    m.ids.push_back(topo.external_id(i));
    m.p.push_back(t.p(i));
  }
  for (int e = 0; e < topo.edge_count(); ++e) {
    m.edges.push_back({topo.edge(e).parent, topo.edge(e).child, t.p11(e)});
  }
  return m;
}

GeneralMarginalModel parse_general_json(std::string_view text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    parse_fail(std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) parse_fail("model document must be a JSON object");
  allow_only(doc, {"root", "nodes", "edges", "ordering"}, "model");
  if (!doc.contains("nodes") || !doc["nodes"].is_array()) {
    parse_fail("model: \"nodes\" must be an array");
  }
  GeneralMarginalModel m;
  std::map<ExternalId, int> index;
  for (const auto& node : doc["nodes"]) {
    if (!node.is_object()) parse_fail("nodes: entries must be objects");
    allow_only(node, {"id", "p"}, "node");
    const ExternalId id = integer(node, "id", "node");
    if (!index.emplace(id, m.size()).second) {
      throw Error(ErrorKind::duplicate_node, "node " + std::to_string(id) + " repeated");
    }
    m.ids.push_back(id);
    m.p.push_back(number(node, "p", "node " + std::to_string(id)));
  }
  if (doc.contains("edges")) {
    if (!doc["edges"].is_array()) parse_fail("model: \"edges\" must be an array");
    for (const auto& edge : doc["edges"]) {
      if (!edge.is_object()) parse_fail("edges: entries must be objects");
      allow_only(edge, {"parent", "child", "p11"}, "edge");
      const ExternalId a = integer(edge, "parent", "edge");
      const ExternalId b = integer(edge, "child", "edge");
      const auto ia = index.find(a);
      const auto ib = index.find(b);
      if (ia == index.end() || ib == index.end()) {
        throw Error(ErrorKind::unknown_node, "edge (" + std::to_string(a) + "," +
                                                 std::to_string(b) + ") has an unknown endpoint");
      }
      m.edges.push_back({ia->second, ib->second, number(edge, "p11", "edge")});
    }
  }
  m.validate();
  return m;
}

OracleResult oracle_bound(const GeneralMarginalModel& m, int k, Direction dir,
                          const lp::SolverConfig& cfg) {
  check_size(m.size());
  m.validate();
  std::vector<double> w(m.size() + 1);
  for (int s = 0; s <= m.size(); ++s) w[s] = s >= k ? 1.0 : 0.0;
  return solve_primal(m, w, dir, cfg);
}

OracleResult oracle_bound(const GeneralMarginalModel& m, std::span<const double> w,
                          Direction dir, const lp::SolverConfig& cfg) {
  check_size(m.size());
  m.validate();
  if (static_cast<int>(w.size()) != m.size() + 1) {
    throw Error(ErrorKind::invariant_breach, "weight vector needs n + 1 entries");
  }
  for (double v : w) {
    if (!std::isfinite(v) || v < 0.0) {
      throw Error(ErrorKind::negative_weight, "weights must be finite and nonnegative");
    }
  }
  return solve_primal(m, w, dir, cfg);
}

double qkp_enumerate(const KnapsackInstance& inst) {
  const auto& topo = *inst.topology;
  const int n = topo.size();
  check_size(n);
  if (inst.k > n) throw Error(ErrorKind::infeasible_cardinality, "threshold exceeds node count");
  double best = std::numeric_limits<double>::infinity();
  for (std::uint32_t c = 0; c < (1u << n); ++c) {
    if (std::popcount(c) < inst.k) continue;
    double v = 0.0;
    for (int i = 0; i < n; ++i) {
      if (c >> i & 1u) v += inst.alpha[i];
    }
    for (int e = 0; e < topo.edge_count(); ++e) {
      const auto& ed = topo.edge(e);
      if ((c >> ed.parent & 1u) && (c >> ed.child & 1u)) v += inst.beta[e];
    }
    best = std::min(best, v);
  }
  return best;
}

double ci_enumerate(const TreeModel& t, int k) {
  const auto& topo = t.topology();
  const int n = topo.size();
  check_size(n);
  // Conditional tables P(c_child = b | c_parent = a) per edge.
  std::vector<std::array<std::array<double, 2>, 2>> cond(topo.edge_count());
  for (int e = 0; e < topo.edge_count(); ++e) {
    const auto& cells = t.edge_table(e);
    const int parent = topo.edge(e).parent;
    const double joint[2][2] = {{cells.p00, cells.p01}, {cells.p10, cells.p11}};
    for (int a = 0; a <= 1; ++a) {
      const double pa = a == 1 ? t.p(parent) : t.q(parent);
      for (int b = 0; b <= 1; ++b) {
        if (pa == 0.0) {
          if (joint[a][b] > 0.0) {
            throw Error(ErrorKind::degenerate_conditioning,
                        "edge conditions on a zero-probability state with positive mass");
          }
          cond[e][a][b] = 0.0;
        } else {
          cond[e][a][b] = joint[a][b] / pa;
        }
      }
    }
  }
  const int root = topo.root();
  CompensatedSum total;
  for (std::uint32_t c = 0; c < (1u << n); ++c) {
    if (std::popcount(c) < k) continue;
    double prob = (c >> root & 1u) ? t.p(root) : t.q(root);
    for (int e = 0; e < topo.edge_count() && prob != 0.0; ++e) {
      const auto& ed = topo.edge(e);
      prob *= cond[e][c >> ed.parent & 1u][c >> ed.child & 1u];
    }
    total.add(prob);
  }
  return total.value();
}

}  // namespace treebounds
