#pragma once

#include <vector>

#include "larp/derivatives.hpp"
#include "larp/jointree.hpp"
#include "larp/model.hpp"

namespace larp {

// A set of findings that stands or falls together under message swapping at
// one clique. Clique-local groups (sep < 0) retract by dropping the indicator
// slot; the rest swap a block of cautious message factors for the matching
// evidence-free ones.
struct RetractionGroup {
  int clique = -1;
  VarSet findings;
  bool retractable = false;
  int sep = -1;
  std::vector<FactorPtr> out_factors;  // cautious factors the swap removes
  std::vector<FactorPtr> in_factors;   // evidence-free factors it adds
};

// Partitions the observed variables into retraction groups as seen from one
// clique: findings on the clique's own variables are singleton groups, and
// findings folded into an incoming message are blocked together by shared
// absorption and shared cpd lineage. A block is retractable when the
// evidence-free replacements cover no cpd outside the block's own region.
// Requires a cautiously propagated tree.
std::vector<RetractionGroup> retractable_sets(const JunctionTree& t,
                                              int clique);

inline std::vector<RetractionGroup> retractable_sets(const JunctionTree& t) {
  return retractable_sets(t, t.root());
}

// The clique's posterior factors with every finding in retract withdrawn, by
// slot removal and message swapping. retract must be the union of finding
// sets of retractable groups of this clique; any combination of groups is
// allowed, including none.
std::vector<FactorPtr> retracted_pool(const JunctionTree& t, int clique,
                                      const VarSet& retract);

// P(ev \ retract) computed from the swapped pool, with no message
// recomputation.
double retracted_prob(const JunctionTree& t, int clique, const VarSet& retract);

inline double retracted_prob(const JunctionTree& t, const RetractionGroup& g) {
  return retracted_prob(t, g.clique, g.findings);
}

// Mixed partial of P(ev \ retract), evaluated on the swapped pool the way
// d_multi_at evaluates on the plain one. Targets must be evaluable there;
// cpds hosted at the clique always are.
FactorPtr retracted_derivative(const JunctionTree& t, int clique,
                               const VarSet& retract,
                               const std::vector<MultiTarget>& targets);

}  // namespace larp
