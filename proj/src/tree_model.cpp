#include "treebounds/tree_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "treebounds/errors.hpp"

namespace treebounds {
namespace {

using Json = nlohmann::json;

std::string edge_name(ExternalId parent, ExternalId child) {
  return "(" + std::to_string(parent) + "," + std::to_string(child) + ")";
}

[[noreturn]] void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

void check_probability(double value, const std::string& what) {
  if (!std::isfinite(value) || value < -kFrechetTolerance ||
      value > 1.0 + kFrechetTolerance) {
    std::ostringstream os;
    os.precision(17);
    os << what << " = " << value << " is outside [0, 1]";
    fail(ErrorKind::probability_out_of_range, os.str());
  }
}

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

EdgeSlack slack_of(ExternalId parent, ExternalId child, double pi, double pj,
                   double pij) {
  EdgeSlack s;
  s.parent = parent;
  s.child = child;
  s.lower_slack = pij - std::max(0.0, pi + pj - 1.0);
  s.upper_slack = std::min(pi, pj) - pij;
  return s;
}

[[noreturn]] void throw_frechet(const EdgeSlack& s, double pi, double pj, double pij) {
  std::ostringstream os;
  os.precision(17);
  os << "edge " << edge_name(s.parent, s.child) << ": ";
  if (s.upper_slack < -kFrechetTolerance) {
    os << "p11 = " << pij << " exceeds min(p_i, p_j) = " << std::min(pi, pj);
  } else {
    os << "p11 = " << pij << " is below max(0, p_i + p_j - 1) = "
       << std::max(0.0, pi + pj - 1.0);
  }
  fail(ErrorKind::frechet_violation, os.str());
}

}  // namespace

// ---------------------------------------------------------------------------
// TreeTopology

std::shared_ptr<const TreeTopology> TreeTopology::build(
    ExternalId root, std::span<const ExternalId> node_ids,
    std::span<const std::pair<ExternalId, ExternalId>> edges,
    const std::map<ExternalId, std::vector<ExternalId>>& ordering) {
  std::shared_ptr<TreeTopology> t(new TreeTopology());
  const int n = static_cast<int>(node_ids.size());
  if (n == 0) fail(ErrorKind::disconnected, "tree has no nodes");

  // Internal indices follow ascending external id so that reports and LP
  // variable layouts do not depend on input order.
  t->ids_.assign(node_ids.begin(), node_ids.end());
  std::sort(t->ids_.begin(), t->ids_.end());
  for (int i = 0; i < n; ++i) {
    if (i > 0 && t->ids_[i] == t->ids_[i - 1]) {
      fail(ErrorKind::duplicate_node, "duplicate node id " + std::to_string(t->ids_[i]));
    }
    t->index_[t->ids_[i]] = i;
  }
  t->root_ = t->index_of(root);

  t->parent_.assign(n, -1);
  t->edge_into_.assign(n, -1);
  t->children_.assign(n, {});
  std::set<std::pair<int, int>> seen;
  for (const auto& [pid, cid] : edges) {
    const auto lookup = [&](ExternalId id) {
      auto it = t->index_.find(id);
      if (it == t->index_.end()) {
        fail(ErrorKind::unknown_node,
             "edge " + edge_name(pid, cid) + " references unknown node " + std::to_string(id));
      }
      return it->second;
    };
    const int p = lookup(pid);
    const int c = lookup(cid);
    if (p == c) fail(ErrorKind::cycle_detected, "self-loop on node " + std::to_string(pid));
    if (!seen.insert({std::min(p, c), std::max(p, c)}).second) {
      fail(ErrorKind::duplicate_edge, "duplicate edge " + edge_name(pid, cid));
    }
    if (c == t->root_) {
      fail(ErrorKind::cycle_detected,
           "edge " + edge_name(pid, cid) + " points into the root");
    }
    if (t->parent_[c] != -1) {
      fail(ErrorKind::multiple_parents,
           "node " + std::to_string(cid) + " has a second parent via edge " +
               edge_name(pid, cid));
    }
    t->parent_[c] = p;
    t->edge_into_[c] = static_cast<int>(t->edges_.size());
    t->edges_.push_back({p, c});
    t->children_[p].push_back(c);
  }

  for (auto& ch : t->children_) std::sort(ch.begin(), ch.end());
  for (const auto& [pid, order] : ordering) {
    const int p = t->index_of(pid);
    std::vector<int> explicit_order;
    explicit_order.reserve(order.size());
    for (ExternalId cid : order) explicit_order.push_back(t->index_of(cid));
    std::vector<int> sorted = explicit_order;
    std::sort(sorted.begin(), sorted.end());
    if (sorted != t->children_[p]) {
      fail(ErrorKind::invalid_ordering,
           "ordering for node " + std::to_string(pid) +
               " is not a permutation of its children");
    }
    t->children_[p] = std::move(explicit_order);
  }

  // Iterative DFS from the root; with unique parents no node is revisited.
  std::vector<int> stack{t->root_};
  std::vector<char> reached(n, 0);
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    reached[v] = 1;
    t->preorder_.push_back(v);
    const auto& ch = t->children_[v];
    for (auto it = ch.rbegin(); it != ch.rend(); ++it) stack.push_back(*it);
  }
  if (static_cast<int>(t->preorder_.size()) != n) {
    // An unreached node without a parent is a separate component; otherwise
    // following parents among unreached nodes must loop.
    for (int v = 0; v < n; ++v) {
      if (!reached[v] && t->parent_[v] == -1) {
        fail(ErrorKind::disconnected,
             "node " + std::to_string(t->ids_[v]) + " is not reachable from the root");
      }
    }
    for (int v = 0; v < n; ++v) {
      if (!reached[v]) {
        fail(ErrorKind::cycle_detected,
             "node " + std::to_string(t->ids_[v]) + " lies on a cycle");
      }
    }
  }
  t->postorder_.assign(t->preorder_.rbegin(), t->preorder_.rend());

  t->subtree_size_.assign(n, {});
  for (int v : t->postorder_) {
    auto& sizes = t->subtree_size_[v];
    sizes.push_back(1);
    for (int c : t->children_[v]) sizes.push_back(sizes.back() + t->subtree_size(c));
  }
  return t;
}

std::optional<int> TreeTopology::find_edge(int i, int j) const {
  if (i < 0 || j < 0 || i >= size() || j >= size()) return std::nullopt;
  if (parent_[j] == i) return edge_into_[j];
  if (parent_[i] == j) return edge_into_[i];
  return std::nullopt;
}

std::vector<int> TreeTopology::subtree_vertices(int node, int s) const {
  std::vector<int> out{node};
  std::vector<int> stack;
  for (int c = s; c >= 1; --c) stack.push_back(child(node, c));
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    out.push_back(v);
    const auto& ch = children_[v];
    for (auto it = ch.rbegin(); it != ch.rend(); ++it) stack.push_back(*it);
  }
  return out;
}

int TreeTopology::index_of(ExternalId id) const {
  auto it = index_.find(id);
  if (it == index_.end()) fail(ErrorKind::unknown_node, "unknown node id " + std::to_string(id));
  return it->second;
}

std::shared_ptr<const TreeTopology> topology_of(const TreeSpec& spec) {
  std::vector<ExternalId> ids;
  ids.reserve(spec.nodes.size());
  for (const auto& n : spec.nodes) ids.push_back(n.id);
  std::vector<std::pair<ExternalId, ExternalId>> edges;
  edges.reserve(spec.edges.size());
  for (const auto& e : spec.edges) edges.emplace_back(e.parent, e.child);
  return TreeTopology::build(spec.root, ids, edges, spec.ordering);
}

// ---------------------------------------------------------------------------
// TreeModel

TreeModel::TreeModel(std::shared_ptr<const TreeTopology> topology, std::vector<double> p,
                     std::vector<double> p11)
    : topology_(std::move(topology)) {
  const TreeTopology& top = *topology_;
  if (static_cast<int>(p.size()) != top.size() ||
      static_cast<int>(p11.size()) != top.edge_count()) {
    fail(ErrorKind::invariant_breach, "probability vectors do not match the topology");
  }
  p1_.resize(p.size());
  p0_.resize(p.size());
  for (int i = 0; i < top.size(); ++i) {
    check_probability(p[i], "p of node " + std::to_string(top.external_id(i)));
    p1_[i] = clamp01(p[i]);
    p0_[i] = 1.0 - p1_[i];
  }
  cells_.resize(p11.size());
  for (int e = 0; e < top.edge_count(); ++e) {
    const auto [a, b] = top.edge(e);
    const ExternalId ea = top.external_id(a);
    const ExternalId eb = top.external_id(b);
    check_probability(p11[e], "p11 of edge " + edge_name(ea, eb));
    const double pij = clamp01(p11[e]);
    const EdgeSlack s = slack_of(ea, eb, p1_[a], p1_[b], pij);
    if (!s.ok()) throw_frechet(s, p1_[a], p1_[b], pij);
    EdgeBivariate& c = cells_[e];
    c.p11 = pij;
    c.p10 = std::max(0.0, p1_[a] - pij);
    c.p01 = std::max(0.0, p1_[b] - pij);
    c.p00 = std::max(0.0, 1.0 - p1_[a] - p1_[b] + pij);
  }
}

TreeModel TreeModel::build(const TreeSpec& spec) {
  auto top = topology_of(spec);
  std::vector<double> p(top->size());
  for (const auto& n : spec.nodes) p[top->index_of(n.id)] = n.p;
  std::vector<double> p11(top->edge_count());
  for (std::size_t e = 0; e < spec.edges.size(); ++e) p11[e] = spec.edges[e].p11;
  return TreeModel(std::move(top), std::move(p), std::move(p11));
}

double TreeModel::joint(int i, int j) const {
  auto e = topology_->find_edge(i, j);
  if (!e) fail(ErrorKind::unknown_node, "nodes are not adjacent in the tree");
  return cells_[*e].p11;
}

TreeSpec TreeModel::to_spec() const {
  const TreeTopology& top = *topology_;
  TreeSpec spec;
  spec.root = top.external_id(top.root());
  for (int i = 0; i < size(); ++i) spec.nodes.push_back({top.external_id(i), p1_[i]});
  for (int e = 0; e < top.edge_count(); ++e) {
    const auto [a, b] = top.edge(e);
    spec.edges.push_back({top.external_id(a), top.external_id(b), cells_[e].p11});
  }
  for (int i = 0; i < size(); ++i) {
    if (top.out_degree(i) < 2) continue;
    std::vector<ExternalId> order;
    for (int c : top.children(i)) order.push_back(top.external_id(c));
    if (!std::is_sorted(order.begin(), order.end())) spec.ordering[top.external_id(i)] = order;
  }
  return spec;
}

TreeModel complement(const TreeModel& t) {
  TreeModel out;
  out.topology_ = t.topology_;
  out.p1_ = t.p0_;
  out.p0_ = t.p1_;
  out.cells_.reserve(t.cells_.size());
  for (const auto& c : t.cells_) out.cells_.push_back({c.p00, c.p01, c.p10, c.p11});
  return out;
}

bool operator==(const TreeModel& a, const TreeModel& b) {
  if (a.topology_ != b.topology_) {
    const TreeTopology& x = *a.topology_;
    const TreeTopology& y = *b.topology_;
    if (x.size() != y.size() || x.root() != y.root()) return false;
    for (int i = 0; i < x.size(); ++i) {
      if (x.external_id(i) != y.external_id(i)) return false;
      if (!std::ranges::equal(x.children(i), y.children(i))) return false;
    }
  }
  const auto cell_eq = [](const EdgeBivariate& l, const EdgeBivariate& r) {
    return l.p11 == r.p11 && l.p10 == r.p10 && l.p01 == r.p01 && l.p00 == r.p00;
  };
  return a.p1_ == b.p1_ && a.p0_ == b.p0_ &&
         std::equal(a.cells_.begin(), a.cells_.end(), b.cells_.begin(), b.cells_.end(),
                    cell_eq);
}

// ---------------------------------------------------------------------------
// Consistency reports

std::string ConsistencyReport::describe() const {
  std::ostringstream os;
  os.precision(12);
  os << (ok ? "consistent" : "INCONSISTENT") << ": " << edges.size() << " edge(s)\n";
  for (const auto& e : edges) {
    os << "  edge " << edge_name(e.parent, e.child) << " lower_slack=" << e.lower_slack
       << " upper_slack=" << e.upper_slack;
    if (e.upper_slack < -kFrechetTolerance) os << "  VIOLATION: p11 > min(p_i, p_j)";
    if (e.lower_slack < -kFrechetTolerance) os << "  VIOLATION: p11 < max(0, p_i + p_j - 1)";
    os << '\n';
  }
  return os.str();
}

ConsistencyReport validate_marginals(const TreeSpec& spec) {
  auto top = topology_of(spec);
  std::vector<double> p(top->size());
  for (const auto& n : spec.nodes) {
    check_probability(n.p, "p of node " + std::to_string(n.id));
    p[top->index_of(n.id)] = n.p;
  }
  ConsistencyReport report;
  for (const auto& e : spec.edges) {
    check_probability(e.p11, "p11 of edge " + edge_name(e.parent, e.child));
    EdgeSlack s = slack_of(e.parent, e.child, p[top->index_of(e.parent)],
                           p[top->index_of(e.child)], e.p11);
    report.ok = report.ok && s.ok();
    report.edges.push_back(s);
  }
  return report;
}

ConsistencyReport validate_marginals(const TreeModel& t) {
  const TreeTopology& top = t.topology();
  ConsistencyReport report;
  for (int e = 0; e < top.edge_count(); ++e) {
    const auto [a, b] = top.edge(e);
    EdgeSlack s = slack_of(top.external_id(a), top.external_id(b), t.p(a), t.p(b), t.p11(e));
    report.ok = report.ok && s.ok();
    report.edges.push_back(s);
  }
  return report;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

void reject_unknown(const Json& obj, std::initializer_list<std::string_view> allowed,
                    std::string_view where) {
  for (const auto& [key, value] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      fail(ErrorKind::parse_error,
           "unknown field \"" + key + "\" in " + std::string(where));
    }
  }
}

ExternalId get_id(const Json& obj, const char* key, std::string_view where) {
  if (!obj.contains(key) || !obj[key].is_number_integer()) {
    fail(ErrorKind::parse_error,
         std::string(where) + ": field \"" + key + "\" must be an integer");
  }
  return obj[key].get<ExternalId>();
}

double get_probability(const Json& obj, const char* key, std::string_view where,
                       bool required) {
  if (!obj.contains(key)) {
    if (required) {
      fail(ErrorKind::parse_error, std::string(where) + ": missing field \"" + key + "\"");
    }
    return 0.0;
  }
  if (!obj[key].is_number()) {
    fail(ErrorKind::parse_error, std::string(where) + ": field \"" + key + "\" must be a number");
  }
  const double v = obj[key].get<double>();
  if (!std::isfinite(v)) {
    fail(ErrorKind::parse_error, std::string(where) + ": field \"" + key + "\" is not finite");
  }
  return v;
}

ExternalId parse_id_key(const std::string& key) {
  std::size_t pos = 0;
  long long v = 0;
  try {
    v = std::stoll(key, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != key.size()) {
    fail(ErrorKind::parse_error, "ordering key \"" + key + "\" is not an integer id");
  }
  return static_cast<ExternalId>(v);
}

}  // namespace

TreeSpec parse_tree_json(std::string_view text, bool require_probabilities) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    fail(ErrorKind::parse_error, std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) fail(ErrorKind::parse_error, "tree document must be a JSON object");
  reject_unknown(doc, {"root", "nodes", "edges", "ordering"}, "tree");

  TreeSpec spec;
  spec.root = get_id(doc, "root", "tree");
  if (!doc.contains("nodes") || !doc["nodes"].is_array()) {
    fail(ErrorKind::parse_error, "tree: \"nodes\" must be an array");
  }
  for (const auto& node : doc["nodes"]) {
    if (!node.is_object()) fail(ErrorKind::parse_error, "nodes: entries must be objects");
    reject_unknown(node, {"id", "p"}, "node");
    NodeSpec n;
    n.id = get_id(node, "id", "node");
    n.p = get_probability(node, "p", "node " + std::to_string(n.id), require_probabilities);
    spec.nodes.push_back(n);
  }
  if (doc.contains("edges")) {
    if (!doc["edges"].is_array()) fail(ErrorKind::parse_error, "tree: \"edges\" must be an array");
    for (const auto& edge : doc["edges"]) {
      if (!edge.is_object()) fail(ErrorKind::parse_error, "edges: entries must be objects");
      reject_unknown(edge, {"parent", "child", "p11"}, "edge");
      EdgeSpec e;
      e.parent = get_id(edge, "parent", "edge");
      e.child = get_id(edge, "child", "edge");
      e.p11 = get_probability(edge, "p11", "edge " + edge_name(e.parent, e.child),
                              require_probabilities);
      spec.edges.push_back(e);
    }
  }
  if (doc.contains("ordering")) {
    if (!doc["ordering"].is_object()) {
      fail(ErrorKind::parse_error, "tree: \"ordering\" must be an object");
    }
    for (const auto& [key, list] : doc["ordering"].items()) {
      if (!list.is_array()) fail(ErrorKind::parse_error, "ordering entries must be arrays");
      std::vector<ExternalId> order;
      for (const auto& v : list) {
        if (!v.is_number_integer()) fail(ErrorKind::parse_error, "ordering ids must be integers");
        order.push_back(v.get<ExternalId>());
      }
      spec.ordering[parse_id_key(key)] = std::move(order);
    }
  }
  return spec;
}

TreeSpec read_tree_file(const std::filesystem::path& path, bool require_probabilities) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_tree_json(buf.str(), require_probabilities);
}

std::string to_json(const TreeSpec& spec) {
  Json doc;
  doc["root"] = spec.root;
  doc["nodes"] = Json::array();
  for (const auto& n : spec.nodes) doc["nodes"].push_back({{"id", n.id}, {"p", n.p}});
  doc["edges"] = Json::array();
  for (const auto& e : spec.edges) {
    doc["edges"].push_back({{"parent", e.parent}, {"child", e.child}, {"p11", e.p11}});
  }
  if (!spec.ordering.empty()) {
    Json ord = Json::object();
    for (const auto& [id, list] : spec.ordering) ord[std::to_string(id)] = list;
    doc["ordering"] = ord;
  }
  return doc.dump(2);
}

}  // namespace treebounds
