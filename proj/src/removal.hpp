#pragma once

#include <vector>

#include "larp/derivatives.hpp"
#include "larp/factor.hpp"
#include "larp/jointree.hpp"
#include "larp/model.hpp"

// Internals shared between the derivative evaluators and the retraction
// queries, which build the same removal plans on swapped pools.
namespace larp::detail {

struct RemovalPlan {
  std::vector<const Factor*> removed;
  VarSet w;
  VarSet unfolded;
};

// Decides whether every target is evaluable against this pool: each theta
// target's cpd must be the pool's only factor of that lineage and still
// untouched, and each evidence-function target needs its indicator plus a
// finding-free, dimension-carrying remainder.
bool plan_targets(const Network& net, const Evidence& ev,
                  const std::vector<FactorPtr>& pool,
                  const std::vector<MultiTarget>& targets, RemovalPlan& plan);

void validate_targets(const JunctionTree& t,
                      const std::vector<MultiTarget>& targets);

bool dirty_message(const Message& m, const VarSet& postpone);

// Reads a family table produced by evaluate_removed back out in the cpd's
// own layout: parent configurations row-major in listed order, child last.
std::vector<double> in_cpd_layout(const Network& net, VarId x, const Factor& r);

}  // namespace larp::detail
