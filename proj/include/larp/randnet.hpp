#pragma once

#include <cstdint>

#include "larp/model.hpp"

namespace larp {

struct RandomNetSpec {
  int vars = 10;
  int max_parents = 3;
  int min_states = 2;
  int max_states = 3;
  double edge_prob = 0.35;
  std::uint64_t seed = 1;
};

// Ranked random DAG over X0..Xn-1 (arcs only from lower to higher rank) with
// Dirichlet(1,..,1) cpd rows. The same spec always yields the same network.
Network random_network(const RandomNetSpec& spec);

// Findings on `count` distinct variables, states uniform.
Evidence random_evidence(const Network& net, int count, std::uint64_t seed);

}  // namespace larp
