#pragma once

#include <vector>

#include "larp/jointree.hpp"
#include "larp/model.hpp"

namespace larp {

// Derivative of P(ev) in the entries of the removed pool members: contracts
// the remaining factors, sums the product down to w, and embeds the result
// into a table over w. An observed variable absent from the product's
// dimensions had its finding folded in, so its off-evidence entries are zero;
// variables named in `unfolded` had their findings removed or postponed
// instead and broadcast like unobserved ones.
FactorPtr evaluate_removed(const Network& net, const Evidence& ev,
                           const std::vector<FactorPtr>& pool,
                           const std::vector<const Factor*>& removed,
                           const VarSet& w, const VarSet& unfolded,
                           SizeLedger* ledger = nullptr);

// dP(ev)/d theta, one entry per cell of the variable's cpd, in the same
// layout as the cpd table. Evaluated at the hosting clique, where the cpd
// factor sits untouched in the pool.
std::vector<double> d_theta(const JunctionTree& t, VarId x);

// dP(ev)/d f(x), one entry per state. For unobserved x this is P(x, ev); for
// observed x the entries extend the evidence function off the finding, which
// may force recomputing messages that folded the finding in.
std::vector<double> d_f(const JunctionTree& t, VarId x);

// P(ev \ {x}) for observed x: the sum of dP(ev)/d f(x).
double retracted_evidence_prob(const JunctionTree& t, VarId x);

// dP(ev)/d c(m)(s) over the separator's variables, treating the contraction
// of the message into `into_clique` as one free table.
FactorPtr d_separator(const JunctionTree& t, int sep_id, int into_clique);

// dP(ev)/d phi over the current domain of one deposited message factor.
FactorPtr d_message_factor(const JunctionTree& t, int sep_id, int into_clique,
                           std::size_t index);

struct MultiTarget {
  bool theta = true;  // false: evidence-function target
  VarId var = -1;
};

// Mixed partial of P(ev) in whole-cpd and evidence-function arguments, as a
// table over the union of the target domains. Searches for a clique whose
// pool holds every targeted cpd untouched, collecting families together
// first when no clique qualifies.
FactorPtr d_multi(const JunctionTree& t, const std::vector<MultiTarget>& targets);

// Same, evaluated at a fixed clique with optional recomputed messages and
// extra pool factors (the indicators a collect produced). Message overrides
// and repairs never touch the tree's mailboxes.
FactorPtr d_multi_at(const JunctionTree& t,
                     const std::vector<MultiTarget>& targets, int clique,
                     const ScratchMessages* scratch,
                     const std::vector<FactorPtr>& extra);

// P(x, pa(x) | ev) cell by cell in the cpd's layout: the theta derivative
// scaled by the parameter values and normalized by P(ev).
std::vector<double> parameter_posterior(const JunctionTree& t, VarId x);

}  // namespace larp
