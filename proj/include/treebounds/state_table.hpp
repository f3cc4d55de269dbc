#pragma once

#include <cassert>
#include <vector>

#include "treebounds/tree_model.hpp"

namespace treebounds {

/// Dense storage for per-subtree states (i, s, y, t) with s in [0, d_i],
/// y in {0, 1} and t in [y, N(i,s) - 1 + y], i.e. the number of selected
/// nodes in T(i,s) given c_i = y.
template <class T>
class StateTable {
 public:
  StateTable() = default;
  StateTable(const TreeTopology& topo, T fill) {
    offset_.resize(topo.size());
    std::size_t next = 0;
    for (int i = 0; i < topo.size(); ++i) {
      offset_[i].resize(topo.out_degree(i) + 1);
      for (int s = 0; s <= topo.out_degree(i); ++s) {
        offset_[i][s] = {next, topo.subtree_size(i, s)};
        next += 2 * static_cast<std::size_t>(topo.subtree_size(i, s));
      }
    }
    data_.assign(next, fill);
  }

  static bool admissible(const TreeTopology& topo, int i, int s, int y, int t) {
    return t >= y && t <= topo.subtree_size(i, s) - 1 + y;
  }

  bool contains(int i, int s, int y, int t) const {
    const auto& [base, count] = offset_[i][s];
    return t >= y && t <= count - 1 + y;
  }

  T& at(int i, int s, int y, int t) { return data_[index(i, s, y, t)]; }
  const T& at(int i, int s, int y, int t) const { return data_[index(i, s, y, t)]; }

  std::size_t size() const noexcept { return data_.size(); }

 private:
  struct Slot {
    std::size_t base = 0;
    int count = 0;  // N(i,s)
  };

  std::size_t index(int i, int s, int y, int t) const {
    const Slot& slot = offset_[i][s];
    assert(t >= y && t <= slot.count - 1 + y);
    return slot.base + static_cast<std::size_t>(y) * slot.count + (t - y);
  }

  std::vector<std::vector<Slot>> offset_;
  std::vector<T> data_;
};

}  // namespace treebounds
