#include "treebounds/cond_ind.hpp"

#include <algorithm>
#include <string>

#include "treebounds/errors.hpp"

namespace treebounds {

namespace {

double cell(const EdgeBivariate& b, int y_parent, int y_child) {
  if (y_parent == 1) return y_child == 1 ? b.p11 : b.p10;
  return y_child == 1 ? b.p01 : b.p00;
}

double marginal(const TreeModel& t, int node, int y) { return y == 1 ? t.p(node) : t.q(node); }

}  // namespace

CiTable ci_table(const TreeModel& t) {
  const auto& topo = t.topology();
  CiTable w(topo, 0.0);
  for (int i : topo.postorder()) {
    w.at(i, 0, 0, 0) = t.q(i);
    w.at(i, 0, 1, 1) = t.p(i);
    for (int s = 1; s <= topo.out_degree(i); ++s) {
      const int c = topo.child(i, s);
      const int dc = topo.out_degree(c);
      const int n1 = topo.subtree_size(i, s - 1);
      const int n2 = topo.subtree_size(c);
      const EdgeBivariate& table = t.edge_table(topo.edge_into(c));
      for (int y = 0; y <= 1; ++y) {
        for (int yc = 0; yc <= 1; ++yc) {
          // P(c_child = yc | c_i = y) / P(c_child = yc): the child's table
          // entries already include its own marginal.
          const double joint = cell(table, y, yc);
          const double denom = marginal(t, i, y) * marginal(t, c, yc);
          if (denom == 0.0) {
            if (joint > 0.0) {
              throw Error(ErrorKind::degenerate_conditioning,
                          "edge (" + std::to_string(topo.external_id(i)) + "," +
                              std::to_string(topo.external_id(c)) +
                              ") puts mass on a zero-probability state");
            }
            continue;
          }
          const double factor = joint / denom;
          for (int t1 = y; t1 <= n1 - 1 + y; ++t1) {
            const double left = w.at(i, s - 1, y, t1) * factor;
            if (left == 0.0) continue;
            for (int a = yc; a <= n2 - 1 + yc; ++a) {
              w.at(i, s, y, t1 + a) += left * w.at(c, dc, yc, a);
            }
          }
        }
      }
    }
  }
  return w;
}

std::vector<double> ci_pmf(const TreeModel& t) {
  const auto& topo = t.topology();
  const CiTable w = ci_table(t);
  const int n = topo.size();
  const int r = topo.root();
  const int d = topo.out_degree(r);
  std::vector<double> pmf(n + 1, 0.0);
  for (int s = 0; s <= n; ++s) {
    if (s <= n - 1) pmf[s] += w.at(r, d, 0, s);
    if (s >= 1) pmf[s] += w.at(r, d, 1, s);
  }
  return pmf;
}

double ci_tail(const TreeModel& t, int k) {
  const int n = t.size();
  if (k <= 0) return 1.0;
  if (k > n) return 0.0;
  const auto pmf = ci_pmf(t);
  double tail = 0.0;
  for (int s = n; s >= k; --s) tail += pmf[s];
  return std::clamp(tail, 0.0, 1.0);
}

}  // namespace treebounds
