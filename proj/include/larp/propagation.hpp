#pragma once

#include "larp/jointree.hpp"
#include "larp/model.hpp"

namespace larp {

// Whether the factor can affect the posterior of the target clique's
// unobserved variables. Evidence indicators always count as relevant; for
// anything else the test is d-connection in the original network between the
// factor's unobserved domain and the clique's unobserved variables, given the
// observed ones.
bool is_relevant(const Network& net, const Factor& phi, const VarSet& clique_vars,
                 const Evidence& ev);

// d-connection between two variable sets given evidence, by ball passing on
// the network's arcs.
bool d_connected(const Network& net, const VarSet& from, const VarSet& to,
                 const VarSet& observed);

}  // namespace larp
