#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "larp/model.hpp"

// Brute-force reference results computed by enumerating configurations of the
// full joint. Shares nothing with the propagation engine beyond the model
// types, so agreement between the two is meaningful.
namespace larp::oracle {

// P(config, ev-consistent) for every configuration, row-major over variable
// ids with id 0 slowest. Refuses joints larger than 2^24 cells.
std::vector<double> enum_joint(const Network& net, const Evidence& ev);

double prob_evidence(const Network& net, const Evidence& ev);

// Sum of the joint onto the sorted variable set w (row-major over w).
std::vector<double> joint_over(const Network& net, const Evidence& ev,
                               const VarSet& w);

// One free parameter of the multilinear evidence probability: either a cpd
// entry (index into the external table of var's cpd) or the evidence-function
// value of var at a state. Unobserved variables carry the constant-1 evidence
// function.
struct EntryRef {
  enum Kind { Theta, EvidenceFn } kind = Theta;
  VarId var = -1;
  std::size_t index = 0;

  bool operator==(const EntryRef& o) const {
    return kind == o.kind && var == o.var && index == o.index;
  }
};

// Index into the external cpd table of child for a child state and parent
// states listed in the cpd's parent order.
std::size_t cpd_index(const Network& net, VarId child, int child_state,
                      const std::vector<int>& parent_states);

// P(ev) with selected entries replaced by fixed values.
double eval_with(const Network& net, const Evidence& ev,
                 const std::vector<std::pair<EntryRef, double>>& overrides);

// Mixed partial derivative of P(ev) with respect to the listed entries,
// computed exactly from multilinearity by 0/1 substitution. Entries must be
// pairwise distinct.
double exact_partial(const Network& net, const Evidence& ev,
                     const std::vector<EntryRef>& entries);

// Central difference with step h around the entry's current value.
double finite_diff(const Network& net, const Evidence& ev,
                   const EntryRef& entry, double h);

}  // namespace larp::oracle
