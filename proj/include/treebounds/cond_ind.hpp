#pragma once

#include <vector>

#include "treebounds/state_table.hpp"
#include "treebounds/tree_model.hpp"

namespace treebounds {

/// w_{i,s,y,t} = P(sum over T(i,s) of c = t, c_i = y) under the
/// conditionally independent distribution on the tree.
using CiTable = StateTable<double>;

/// Fills the full table bottom-up. A transition whose conditioning event has
/// probability zero contributes nothing; Error(degenerate_conditioning) is
/// raised if such an event nevertheless carries joint mass.
CiTable ci_table(const TreeModel& t);

/// Distribution of sum c_i, n + 1 entries.
std::vector<double> ci_pmf(const TreeModel& t);

/// P(sum c_i >= k); k <= 0 gives 1 and k > n gives 0.
double ci_tail(const TreeModel& t, int k);

}  // namespace treebounds
