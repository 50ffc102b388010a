#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <vector>

#include "larp/errors.hpp"
#include "larp/varset.hpp"

namespace larp {

// Records the size of every table materialized by factor operations.
// Propagation threads one of these through all the work it causes.
struct SizeLedger {
  std::uint64_t largest = 0;
  std::uint64_t total = 0;

  void note(std::size_t cells) {
    if (cells > largest) largest = cells;
    total += cells;
  }
};

enum class FactorOrigin { Cpd, Evidence, Computed };

class Factor;
using FactorPtr = std::shared_ptr<const Factor>;

// A head/tail-structured table phi(H|T). Axes are the sorted head variables
// followed by the sorted tail variables; values are row-major with the first
// axis slowest. Factors are immutable once built, and set membership in
// decomposed potentials is by object identity, never by value.
class Factor {
 public:
  Factor(VarSet head, VarSet tail, std::vector<int> axis_cards,
         std::vector<double> values);

  const VarSet& head() const { return head_; }
  const VarSet& tail() const { return tail_; }
  const VarSet& dom() const { return dom_; }
  // Axis order: head vars ascending, then tail vars ascending.
  const std::vector<VarId>& axes() const { return axes_; }
  const std::vector<int>& cards() const { return cards_; }
  const std::vector<double>& values() const { return values_; }

  std::size_t size() const { return values_.size(); }
  bool in_dom(VarId v) const { return vs_contains(dom_, v); }
  bool in_head(VarId v) const { return vs_contains(head_, v); }
  int axis_of(VarId v) const;  // -1 when absent
  int card_of(VarId v) const;
  std::size_t stride_of_axis(int axis) const;

  FactorOrigin origin = FactorOrigin::Computed;
  VarId origin_var = -1;  // cpd child or evidence variable

  // Findings whose indicators have been folded into this table, transitively.
  VarSet absorbed;
  // Children whose CPDs fed this table, transitively. Drives the cautious
  // scheme's independence analysis.
  VarSet cpd_sources;

 private:
  VarSet head_, tail_, dom_;
  std::vector<VarId> axes_;
  std::vector<int> cards_;
  std::vector<double> values_;
};

FactorPtr make_factor(VarSet head, VarSet tail, std::vector<int> axis_cards,
                      std::vector<double> values);

// Constant table with empty domain.
FactorPtr make_unit(double value = 1.0);

// Pointwise product over the union domain. head = H1 u H2,
// tail = (T1 u T2) \ head. Cardinalities must agree on shared variables.
FactorPtr multiply(const FactorPtr& a, const FactorPtr& b,
                   SizeLedger* ledger = nullptr);

// Marginalizes x out of f. x may sit in the head or the tail.
FactorPtr sum_out(const FactorPtr& f, VarId x, SizeLedger* ledger = nullptr);

// Instantiates x = state, dropping the axis. Marks x absorbed.
FactorPtr apply_finding(const FactorPtr& f, VarId x, int state,
                        SizeLedger* ledger = nullptr);

struct ArcReversal {
  FactorPtr fy;  // sum_x fx*fy : head(fy) unchanged, tail widened
  FactorPtr fx;  // (fx*fy)/fy' : head {x}, tail head(fy) u T
};

// Shachter arc reversal of x between fx (head exactly {x}) and fy
// (|head| <= 1, x in tail(fy)). 0/0 is taken as 0; a positive numerator over
// a zero denominator is a NumericalError. Wherever fy' > 0 the results
// satisfy fy' * fx' = fx * fy and sum_x fx' = 1.
ArcReversal reverse_arc(const FactorPtr& fx, const FactorPtr& fy,
                        SizeLedger* ledger = nullptr);

// A decomposed potential: a set of factor references combined by union and
// divided by set difference, with membership decided by object identity.
struct Potential {
  std::vector<FactorPtr> factors;  // insertion-ordered, duplicate-free

  bool contains(const FactorPtr& f) const;
  void insert(const FactorPtr& f);
};

Potential combine(const Potential& a, const Potential& b);

// Set difference a \ b. Every member of b must be a member of a.
Potential divide(const Potential& a, const Potential& b);

// Pointwise product of all members; the empty potential contracts to the
// constant 1. head = union of member heads, tail = rest of the union domain.
FactorPtr contract(const std::vector<FactorPtr>& factors,
                   SizeLedger* ledger = nullptr);
inline FactorPtr contract(const Potential& p, SizeLedger* ledger = nullptr) {
  return contract(p.factors, ledger);
}

// Repeatedly drops factors whose single head variable X is unobserved,
// outside keep, and absent from every other factor's domain.
std::vector<FactorPtr> remove_barren(std::vector<FactorPtr> phis,
                                     const VarSet& keep,
                                     const VarSet& observed);

// Removes x from the factor set: arc reversals against every factor holding
// x in its tail when x heads a factor (cheapest resulting domain first, ties
// on the partner's head id), after which x's factor is barren and dropped;
// otherwise the x-factors are multiplied and x is summed out.
std::vector<FactorPtr> eliminate_variable(std::vector<FactorPtr> phis, VarId x,
                                          SizeLedger* ledger = nullptr);

}  // namespace larp
