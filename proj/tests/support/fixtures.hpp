#pragma once

#include "treebounds/tree_model.hpp"

namespace fixtures {

// Three trees over the same four variables, p = (0.55, 0.55, 0.55, 0.5).
inline treebounds::TreeSpec chow_liu(int which) {
  treebounds::TreeSpec s;
  s.root = 1;
  s.nodes = {{1, 0.55}, {2, 0.55}, {3, 0.55}, {4, 0.5}};
  switch (which) {
    case 1: s.edges = {{1, 4, 0.3}, {1, 2, 0.4}, {2, 3, 0.45}}; break;
    case 2: s.edges = {{1, 2, 0.4}, {2, 3, 0.45}, {2, 4, 0.25}}; break;
    default: s.edges = {{1, 2, 0.4}, {2, 3, 0.45}, {3, 4, 0.25}}; break;
  }
  return s;
}

inline treebounds::TreeModel chow_liu_model(int which) {
  return treebounds::TreeModel::build(chow_liu(which));
}

inline treebounds::TreeModel two_node(double p1, double p2, double p12) {
  treebounds::TreeSpec s;
  s.root = 1;
  s.nodes = {{1, p1}, {2, p2}};
  s.edges = {{1, 2, p12}};
  return treebounds::TreeModel::build(s);
}

inline treebounds::TreeModel single(double p) {
  treebounds::TreeSpec s;
  s.root = 1;
  s.nodes = {{1, p}};
  return treebounds::TreeModel::build(s);
}

}  // namespace fixtures
