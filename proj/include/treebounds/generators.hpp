#pragma once

#include <cstdint>
#include <memory>
#include <random>

#include "treebounds/order_stats.hpp"
#include "treebounds/tree_model.hpp"

namespace treebounds {

/// Seed for stream `stream` of a master seed, so that each run of an
/// experiment can be regenerated on its own.
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream);

/// mt19937_64 with platform-independent derived draws (the standard
/// distributions are not specified bit-exactly across library vendors).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  /// Uniform integer in [lo, hi].
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

 private:
  std::mt19937_64 engine_;
};

/// Node i (1-based, i >= 2) attaches to a uniformly chosen parent in
/// [1, i-1]. External ids are 1..n, rooted at 1.
std::shared_ptr<const TreeTopology> random_recursive_tree(int n, Rng& rng);

/// p_i ~ U(0,1) and each p_ij uniform on its Fréchet interval.
TreeModel random_consistent_model(const std::shared_ptr<const TreeTopology>& topo, Rng& rng);

/// Marginals `p` (by internal node) with edge joints from a copula.
TreeModel copula_model(const std::shared_ptr<const TreeTopology>& topo,
                       std::span<const double> p, Copula copula);

/// Random recursive tree with p_i ~ U(0, 0.1] and copula-coupled edges.
TreeModel experiment_model(int n, Copula copula, Rng& rng);

}  // namespace treebounds
