#include "treebounds/generators.hpp"

#include <algorithm>
#include <vector>

#include "treebounds/errors.hpp"

namespace treebounds {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t state = seed;
  const std::uint64_t base = splitmix64(state);
  std::uint64_t mixed = base ^ (stream * 0xd1b54a32d192ed03ULL);
  return splitmix64(mixed);
}

std::int64_t Rng::uniform_int(std::int64_t lo, std::int64_t hi) {
  if (lo > hi) throw Error(ErrorKind::invariant_breach, "empty integer range");
  const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
  if (span == 0) return static_cast<std::int64_t>(next());
  // Rejection keeps the draw unbiased.
  const std::uint64_t limit = (~std::uint64_t{0} / span) * span;
  std::uint64_t v = next();
  while (v >= limit) v = next();
  return lo + static_cast<std::int64_t>(v % span);
}

std::shared_ptr<const TreeTopology> random_recursive_tree(int n, Rng& rng) {
  if (n < 1) throw Error(ErrorKind::invariant_breach, "tree needs at least one node");
  std::vector<ExternalId> ids;
  std::vector<std::pair<ExternalId, ExternalId>> edges;
  for (int i = 1; i <= n; ++i) {
    ids.push_back(i);
    if (i >= 2) edges.push_back({rng.uniform_int(1, i - 1), i});
  }
  return TreeTopology::build(1, ids, edges);
}

TreeModel random_consistent_model(const std::shared_ptr<const TreeTopology>& topo, Rng& rng) {
  std::vector<double> p(topo->size());
  for (double& v : p) v = rng.uniform();
  std::vector<double> p11(topo->edge_count());
  for (int e = 0; e < topo->edge_count(); ++e) {
    const double pi = p[topo->edge(e).parent];
    const double pj = p[topo->edge(e).child];
    const double lo = std::max(0.0, pi + pj - 1.0);
    const double hi = std::min(pi, pj);
    p11[e] = std::clamp(lo + (hi - lo) * rng.uniform(), lo, hi);
  }
  return TreeModel(topo, std::move(p), std::move(p11));
}

TreeModel copula_model(const std::shared_ptr<const TreeTopology>& topo,
                       std::span<const double> p, Copula copula) {
  std::vector<double> p11(topo->edge_count());
  for (int e = 0; e < topo->edge_count(); ++e) {
    p11[e] = copula_bivariate(copula, p[topo->edge(e).parent], p[topo->edge(e).child]);
  }
  return TreeModel(topo, std::vector<double>(p.begin(), p.end()), std::move(p11));
}

TreeModel experiment_model(int n, Copula copula, Rng& rng) {
  auto topo = random_recursive_tree(n, rng);
  std::vector<double> p(n);
  for (double& v : p) v = 0.1 * (1.0 - rng.uniform());  // (0, 0.1]
  return copula_model(topo, p, copula);
}

}  // namespace treebounds
