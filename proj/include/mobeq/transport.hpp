#pragma once

#include <cstddef>
#include <vector>

#include "mobeq/model.hpp"

namespace mobeq {

/// Bipartite transportation problem: every source ships its full supply to
/// sinks at per-unit cost, subject to sink capacities. Sink 0 must be
/// unbounded, which makes every instance feasible.
struct TransportProblem {
  std::vector<double> supply;        // per source, >= 0
  std::vector<Capacity> sink_capacity;
  std::vector<double> unit_cost;     // row-major [source][sink], >= 0

  std::size_t n_sources() const { return supply.size(); }
  std::size_t n_sinks() const { return sink_capacity.size(); }
  double cost(std::size_t s, std::size_t m) const { return unit_cost[s * n_sinks() + m]; }
};

struct TransportSolution {
  std::vector<double> flow;  // row-major [source][sink]
  double objective = 0.0;
  std::size_t augmentations = 0;
};

/// Exact minimum-cost solve by successive shortest augmenting paths.
///
/// Sources are served in index order. Each augmentation follows a cheapest
/// residual path (Bellman-Ford; reverse arcs carry negative cost) to the
/// cheapest sink with spare capacity. A rerouting path must beat the direct
/// one strictly, so on ties earlier sources keep their assignment and the
/// lowest sink index wins.
TransportSolution solve_transport(const TransportProblem& problem);

}  // namespace mobeq
