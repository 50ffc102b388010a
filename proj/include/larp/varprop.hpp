#pragma once

#include "larp/jointree.hpp"
#include "larp/model.hpp"

namespace larp {

struct CollectResult {
  ScratchMessages scratch;
  // Fresh indicators for observed collected variables outside the target
  // clique, to be appended to the pool alongside the scratch messages.
  std::vector<FactorPtr> indicators;
  VarSet collected;
  int target = -1;
};

// Recomputes the messages along the paths from each variable's nearest clique
// to the target so that the variables' dimensions survive into the target's
// pool: collected variables are never eliminated, and findings on them are
// postponed instead of applied. The tree's mailboxes stay untouched.
CollectResult collect_variables(const JunctionTree& t, const VarSet& xs,
                                int target_clique);

// Single-variable collect. Unlike the batch form, asks for a variable the
// target clique is actually missing and fails when it already has it.
CollectResult collect_variable(const JunctionTree& t, VarId x,
                               int target_clique);

// The factors the collect made available at its target clique: the pool with
// recomputed messages plus the postponed indicators.
std::vector<FactorPtr> collected_pool(const JunctionTree& t,
                                      const CollectResult& cr);

// P(w, ev) as a table over w, axes ascending by id. Entries where an observed
// member sits off its finding are zero. Answered from a single clique when
// one covers w, otherwise by collecting the missing variables into the clique
// where the contraction is cheapest.
FactorPtr joint_over(const JunctionTree& t, const VarSet& w);

}  // namespace larp
