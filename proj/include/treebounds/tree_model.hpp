#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace treebounds {

using ExternalId = std::int64_t;

/// Absolute tolerance used when checking Fréchet bounds and probability ranges.
inline constexpr double kFrechetTolerance = 1e-12;

struct NodeSpec {
  ExternalId id = 0;
  double p = 0.0;
};

struct EdgeSpec {
  ExternalId parent = 0;
  ExternalId child = 0;
  double p11 = 0.0;
};

/// Unvalidated tree description, as read from JSON or assembled by callers.
/// `ordering` optionally fixes the child order of selected parents; parents
/// without an entry order their children by ascending id.
struct TreeSpec {
  ExternalId root = 0;
  std::vector<NodeSpec> nodes;
  std::vector<EdgeSpec> edges;
  std::map<ExternalId, std::vector<ExternalId>> ordering;
};

/// Rooted ordered tree without probabilities. Nodes are densely indexed
/// 0..n-1 internally; edges are indexed 0..n-2 in input order and are always
/// stored parent -> child.
///
/// Besides adjacency, the topology holds the subtree index N(i,s): the node
/// count of the tree rooted at i restricted to its first s child subtrees.
class TreeTopology {
 public:
  struct Edge {
    int parent = -1;
    int child = -1;
  };

  /// Validates structure (unique ids, single parent, connected, acyclic) and
  /// computes the subtree index. Throws Error on any structural defect.
  static std::shared_ptr<const TreeTopology> build(
      ExternalId root, std::span<const ExternalId> node_ids,
      std::span<const std::pair<ExternalId, ExternalId>> edges,
      const std::map<ExternalId, std::vector<ExternalId>>& ordering = {});

  int size() const noexcept { return static_cast<int>(ids_.size()); }
  int edge_count() const noexcept { return static_cast<int>(edges_.size()); }
  int root() const noexcept { return root_; }

  /// -1 for the root.
  int parent(int node) const { return parent_.at(node); }
  std::span<const int> children(int node) const { return children_.at(node); }
  int out_degree(int node) const { return static_cast<int>(children_.at(node).size()); }
  /// The s-th child of `node` in the fixed ordering, s in [1, d_i].
  int child(int node, int s) const { return children_.at(node).at(s - 1); }

  const Edge& edge(int e) const { return edges_.at(e); }
  std::span<const Edge> edges() const { return edges_; }
  /// Index of the edge entering `node`; -1 for the root.
  int edge_into(int node) const { return edge_into_.at(node); }
  /// Edge index joining i and j in either orientation, or nullopt.
  std::optional<int> find_edge(int i, int j) const;

  /// N(i,s) for s in [0, d_i].
  int subtree_size(int node, int s) const { return subtree_size_.at(node).at(s); }
  /// N(i, d_i): size of the full subtree rooted at `node`.
  int subtree_size(int node) const { return subtree_size_.at(node).back(); }
  /// V(i,s), in preorder.
  std::vector<int> subtree_vertices(int node, int s) const;

  /// Children appear after their parent.
  std::span<const int> preorder() const { return preorder_; }
  /// Children appear before their parent.
  std::span<const int> postorder() const { return postorder_; }

  ExternalId external_id(int node) const { return ids_.at(node); }
  std::span<const ExternalId> external_ids() const { return ids_; }
  /// Throws Error(unknown_node) for ids that are not in the tree.
  int index_of(ExternalId id) const;

 private:
  TreeTopology() = default;

  int root_ = 0;
  std::vector<ExternalId> ids_;
  std::map<ExternalId, int> index_;
  std::vector<int> parent_;
  std::vector<std::vector<int>> children_;
  std::vector<Edge> edges_;
  std::vector<int> edge_into_;
  std::vector<std::vector<int>> subtree_size_;
  std::vector<int> preorder_;
  std::vector<int> postorder_;
};

/// The four cells of one edge's bivariate table, oriented parent-first:
/// p10 = P(c_parent = 1, c_child = 0).
struct EdgeBivariate {
  double p11 = 0.0;
  double p10 = 0.0;
  double p01 = 0.0;
  double p00 = 0.0;
};

/// Tree with node marginals p_i = P(c_i = 1) and edge joints
/// p_ij = P(c_i = 1, c_j = 1). Immutable; every instance satisfies the
/// Fréchet bounds on each edge.
class TreeModel {
 public:
  /// Full validation: structure, probability ranges and Fréchet bounds.
  static TreeModel build(const TreeSpec& spec);

  /// `p` is indexed by internal node, `p11` by edge index.
  TreeModel(std::shared_ptr<const TreeTopology> topology, std::vector<double> p,
            std::vector<double> p11);

  const TreeTopology& topology() const noexcept { return *topology_; }
  const std::shared_ptr<const TreeTopology>& shared_topology() const noexcept {
    return topology_;
  }
  int size() const noexcept { return topology_->size(); }

  /// P(c_i = 1).
  double p(int node) const { return p1_.at(node); }
  /// P(c_i = 0), stored separately so that complementation is exact.
  double q(int node) const { return p0_.at(node); }
  std::span<const double> marginals() const noexcept { return p1_; }

  const EdgeBivariate& edge_table(int e) const { return cells_.at(e); }
  double p11(int e) const { return cells_.at(e).p11; }
  /// P(c_i = 1, c_j = 1) for an edge in either orientation.
  double joint(int i, int j) const;

  /// Round-trips through external ids.
  TreeSpec to_spec() const;

  friend TreeModel complement(const TreeModel& t);
  friend bool operator==(const TreeModel& a, const TreeModel& b);

 private:
  TreeModel() = default;

  std::shared_ptr<const TreeTopology> topology_;
  std::vector<double> p1_;
  std::vector<double> p0_;
  std::vector<EdgeBivariate> cells_;
};

/// Model of d_i = 1 - c_i on the same topology: q_i = 1 - p_i and
/// q_ij = P(c_i = 0, c_j = 0). Exact involution.
TreeModel complement(const TreeModel& t);

/// Field-exact equality (same topology object or equal structure, bitwise
/// equal probabilities).
bool operator==(const TreeModel& a, const TreeModel& b);

struct EdgeSlack {
  ExternalId parent = 0;
  ExternalId child = 0;
  /// p_ij - max(0, p_i + p_j - 1)
  double lower_slack = 0.0;
  /// min(p_i, p_j) - p_ij
  double upper_slack = 0.0;
  bool ok() const noexcept {
    return lower_slack >= -kFrechetTolerance && upper_slack >= -kFrechetTolerance;
  }
};

struct ConsistencyReport {
  bool ok = true;
  std::vector<EdgeSlack> edges;

  /// One line per edge; violations name the edge and the broken inequality.
  std::string describe() const;
};

/// The spec overload needs only a structurally valid tree; Fréchet problems
/// are reported, not thrown.
ConsistencyReport validate_marginals(const TreeSpec& spec);
ConsistencyReport validate_marginals(const TreeModel& t);

/// Canonical JSON tree format:
///   {"root": 1, "nodes": [{"id": 1, "p": 0.55}, ...],
///    "edges": [{"parent": 1, "child": 2, "p11": 0.4}, ...],
///    "ordering": {"1": [2, 3, 4]}}
/// Unknown fields are rejected. With `require_probabilities` false the "p"
/// and "p11" fields may be omitted (topology-only files).
TreeSpec parse_tree_json(std::string_view text, bool require_probabilities = true);
TreeSpec read_tree_file(const std::filesystem::path& path,
                        bool require_probabilities = true);
std::string to_json(const TreeSpec& spec);

std::shared_ptr<const TreeTopology> topology_of(const TreeSpec& spec);

}  // namespace treebounds
