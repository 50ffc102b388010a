#include "larp/factor.hpp"

#include <algorithm>
#include <climits>
#include <cstdint>
#include <limits>
#include <numeric>

namespace larp {

namespace {

std::size_t cells_of(const std::vector<int>& cards) {
  std::size_t n = 1;
  for (int c : cards) n *= static_cast<std::size_t>(c);
  return n;
}

// Per result axis, the stride of that variable inside src (0 when absent).
std::vector<std::size_t> strides_into(const Factor& src,
                                      const std::vector<VarId>& axes) {
  std::vector<std::size_t> s(axes.size(), 0);
  for (std::size_t k = 0; k < axes.size(); ++k) {
    int ax = src.axis_of(axes[k]);
    if (ax >= 0) s[k] = src.stride_of_axis(ax);
  }
  return s;
}

VarSet merged_absorbed(const Factor& a, const Factor& b) {
  return vs_union(a.absorbed, b.absorbed);
}

VarSet merged_sources(const Factor& a, const Factor& b) {
  return vs_union(a.cpd_sources, b.cpd_sources);
}

}  // namespace

Factor::Factor(VarSet head, VarSet tail, std::vector<int> axis_cards,
               std::vector<double> values)
    : head_(std::move(head)),
      tail_(std::move(tail)),
      cards_(std::move(axis_cards)),
      values_(std::move(values)) {
  if (!vs_disjoint(head_, tail_))
    throw ValidationError("factor: head and tail intersect");
  dom_ = vs_union(head_, tail_);
  axes_ = head_;
  axes_.insert(axes_.end(), tail_.begin(), tail_.end());
  if (axes_.size() != cards_.size())
    throw ValidationError("factor: axis/cardinality mismatch");
  for (int c : cards_)
    if (c < 1) throw ValidationError("factor: cardinality < 1");
  if (values_.size() != cells_of(cards_))
    throw ValidationError("factor: table size does not match axes");
}

int Factor::axis_of(VarId v) const {
  for (std::size_t k = 0; k < axes_.size(); ++k)
    if (axes_[k] == v) return static_cast<int>(k);
  return -1;
}

int Factor::card_of(VarId v) const {
  int ax = axis_of(v);
  if (ax < 0) throw QueryError("factor: variable not in domain");
  return cards_[ax];
}

std::size_t Factor::stride_of_axis(int axis) const {
  std::size_t s = 1;
  for (std::size_t k = axis + 1; k < cards_.size(); ++k)
    s *= static_cast<std::size_t>(cards_[k]);
  return s;
}

FactorPtr make_factor(VarSet head, VarSet tail, std::vector<int> axis_cards,
                      std::vector<double> values) {
  return std::make_shared<Factor>(std::move(head), std::move(tail),
                                  std::move(axis_cards), std::move(values));
}

FactorPtr make_unit(double value) {
  return make_factor({}, {}, {}, {value});
}

FactorPtr multiply(const FactorPtr& a, const FactorPtr& b, SizeLedger* ledger) {
  VarSet head = vs_union(a->head(), b->head());
  VarSet tail = vs_minus(vs_union(a->tail(), b->tail()), head);
  std::vector<VarId> axes = head;
  axes.insert(axes.end(), tail.begin(), tail.end());

  std::vector<int> cards(axes.size());
  for (std::size_t k = 0; k < axes.size(); ++k) {
    int ca = a->axis_of(axes[k]) >= 0 ? a->card_of(axes[k]) : -1;
    int cb = b->axis_of(axes[k]) >= 0 ? b->card_of(axes[k]) : -1;
    if (ca >= 0 && cb >= 0 && ca != cb)
      throw ValidationError("multiply: cardinality mismatch on shared variable");
    cards[k] = ca >= 0 ? ca : cb;
  }

  std::size_t n = cells_of(cards);
  std::vector<double> vals(n);
  std::vector<std::size_t> sa = strides_into(*a, axes);
  std::vector<std::size_t> sb = strides_into(*b, axes);
  std::vector<int> digit(axes.size(), 0);
  std::size_t ia = 0, ib = 0;
  const auto& va = a->values();
  const auto& vb = b->values();
  for (std::size_t i = 0; i < n; ++i) {
    vals[i] = va[ia] * vb[ib];
    for (int k = static_cast<int>(axes.size()) - 1; k >= 0; --k) {
      ++digit[k];
      ia += sa[k];
      ib += sb[k];
      if (digit[k] < cards[k]) break;
      ia -= sa[k] * static_cast<std::size_t>(cards[k]);
      ib -= sb[k] * static_cast<std::size_t>(cards[k]);
      digit[k] = 0;
    }
  }

  auto r = std::make_shared<Factor>(std::move(head), std::move(tail),
                                    std::move(cards), std::move(vals));
  auto* m = r.get();
  m->absorbed = merged_absorbed(*a, *b);
  m->cpd_sources = merged_sources(*a, *b);
  if (ledger) ledger->note(n);
  return r;
}

FactorPtr sum_out(const FactorPtr& f, VarId x, SizeLedger* ledger) {
  int ax = f->axis_of(x);
  if (ax < 0) throw QueryError("sum_out: variable not in domain");

  VarSet head = f->head();
  VarSet tail = f->tail();
  vs_erase(head, x);
  vs_erase(tail, x);
  std::vector<VarId> axes = head;
  axes.insert(axes.end(), tail.begin(), tail.end());
  std::vector<int> cards(axes.size());
  for (std::size_t k = 0; k < axes.size(); ++k) cards[k] = f->card_of(axes[k]);

  std::size_t n = cells_of(cards);
  std::vector<double> vals(n, 0.0);
  // Iterate the source, accumulating into the target index.
  std::vector<std::size_t> rstride(axes.size());
  {
    std::size_t s = 1;
    for (int k = static_cast<int>(axes.size()) - 1; k >= 0; --k) {
      rstride[k] = s;
      s *= static_cast<std::size_t>(cards[k]);
    }
  }
  std::vector<std::size_t> ts(f->axes().size(), 0);
  for (std::size_t k = 0; k < f->axes().size(); ++k)
    for (std::size_t r = 0; r < axes.size(); ++r)
      if (axes[r] == f->axes()[k]) {
        ts[k] = rstride[r];
        break;
      }
  const auto& src = f->values();
  std::vector<int> digit(f->axes().size(), 0);
  std::size_t it = 0;
  for (std::size_t i = 0; i < src.size(); ++i) {
    vals[it] += src[i];
    for (int k = static_cast<int>(f->axes().size()) - 1; k >= 0; --k) {
      ++digit[k];
      it += ts[k];
      if (digit[k] < f->cards()[k]) break;
      it -= ts[k] * static_cast<std::size_t>(f->cards()[k]);
      digit[k] = 0;
    }
  }

  auto r = std::make_shared<Factor>(std::move(head), std::move(tail),
                                    std::move(cards), std::move(vals));
  auto* m = r.get();
  m->absorbed = f->absorbed;
  m->cpd_sources = f->cpd_sources;
  if (ledger) ledger->note(n);
  return r;
}

FactorPtr apply_finding(const FactorPtr& f, VarId x, int state,
                        SizeLedger* ledger) {
  int ax = f->axis_of(x);
  if (ax < 0) throw QueryError("apply_finding: variable not in domain");
  if (state < 0 || state >= f->cards()[ax])
    throw QueryError("apply_finding: state out of range");

  VarSet head = f->head();
  VarSet tail = f->tail();
  vs_erase(head, x);
  vs_erase(tail, x);
  std::vector<VarId> axes = head;
  axes.insert(axes.end(), tail.begin(), tail.end());
  std::vector<int> cards(axes.size());
  for (std::size_t k = 0; k < axes.size(); ++k) cards[k] = f->card_of(axes[k]);

  std::size_t n = cells_of(cards);
  std::vector<double> vals(n);
  std::vector<std::size_t> fs(axes.size(), 0);
  for (std::size_t k = 0; k < axes.size(); ++k)
    fs[k] = f->stride_of_axis(f->axis_of(axes[k]));
  std::size_t base =
      static_cast<std::size_t>(state) * f->stride_of_axis(ax);
  const auto& src = f->values();
  std::vector<int> digit(axes.size(), 0);
  std::size_t isrc = base;
  for (std::size_t i = 0; i < n; ++i) {
    vals[i] = src[isrc];
    for (int k = static_cast<int>(axes.size()) - 1; k >= 0; --k) {
      ++digit[k];
      isrc += fs[k];
      if (digit[k] < cards[k]) break;
      isrc -= fs[k] * static_cast<std::size_t>(cards[k]);
      digit[k] = 0;
    }
  }

  auto r = std::make_shared<Factor>(std::move(head), std::move(tail),
                                    std::move(cards), std::move(vals));
  auto* m = r.get();
  m->absorbed = f->absorbed;
  vs_insert(m->absorbed, x);
  m->cpd_sources = f->cpd_sources;
  if (ledger) ledger->note(n);
  return r;
}

ArcReversal reverse_arc(const FactorPtr& fx, const FactorPtr& fy,
                        SizeLedger* ledger) {
  if (fx->head().size() != 1)
    throw QueryError("reverse_arc: fx must head exactly one variable");
  VarId x = fx->head()[0];
  if (fy->head().size() > 1)
    throw QueryError("reverse_arc: fy heads more than one variable");
  if (fy->in_head(x) || !fy->in_dom(x))
    throw QueryError("reverse_arc: x not in tail(fy)");

  FactorPtr psi = multiply(fx, fy, ledger);
  FactorPtr fy2 = sum_out(psi, x, ledger);

  // fx' = psi / fy2 with head {x} and tail = dom(psi) \ {x}.
  VarSet head{x};
  VarSet tail = vs_minus(psi->dom(), head);
  std::vector<VarId> axes = head;
  axes.insert(axes.end(), tail.begin(), tail.end());
  std::vector<int> cards(axes.size());
  for (std::size_t k = 0; k < axes.size(); ++k)
    cards[k] = psi->card_of(axes[k]);
  std::size_t n = cells_of(cards);
  std::vector<double> vals(n);
  std::vector<std::size_t> sp(axes.size(), 0), sd(axes.size(), 0);
  for (std::size_t k = 0; k < axes.size(); ++k) {
    sp[k] = psi->stride_of_axis(psi->axis_of(axes[k]));
    int dax = fy2->axis_of(axes[k]);
    if (dax >= 0) sd[k] = fy2->stride_of_axis(dax);
  }
  const auto& num = psi->values();
  const auto& den = fy2->values();
  std::vector<int> digit(axes.size(), 0);
  std::size_t ip = 0, id = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double d = den[id];
    double p = num[ip];
    if (d == 0.0) {
      if (p != 0.0)
        throw NumericalError("reverse_arc: positive mass over zero margin");
      vals[i] = 0.0;
    } else {
      vals[i] = p / d;
    }
    for (int k = static_cast<int>(axes.size()) - 1; k >= 0; --k) {
      ++digit[k];
      ip += sp[k];
      id += sd[k];
      if (digit[k] < cards[k]) break;
      ip -= sp[k] * static_cast<std::size_t>(cards[k]);
      id -= sd[k] * static_cast<std::size_t>(cards[k]);
      digit[k] = 0;
    }
  }

  auto fx2 = std::make_shared<Factor>(std::move(head), std::move(tail),
                                      std::move(cards), std::move(vals));
  auto* m = fx2.get();
  m->absorbed = psi->absorbed;
  m->cpd_sources = psi->cpd_sources;
  if (ledger) ledger->note(n);
  return ArcReversal{fy2, fx2};
}

bool Potential::contains(const FactorPtr& f) const {
  for (const auto& g : factors)
    if (g == f) return true;
  return false;
}

void Potential::insert(const FactorPtr& f) {
  if (!contains(f)) factors.push_back(f);
}

Potential combine(const Potential& a, const Potential& b) {
  Potential r = a;
  for (const auto& f : b.factors) r.insert(f);
  return r;
}

Potential divide(const Potential& a, const Potential& b) {
  for (const auto& f : b.factors)
    if (!a.contains(f))
      throw QueryError("divide: removing a factor that is not a member");
  Potential r;
  for (const auto& f : a.factors)
    if (!b.contains(f)) r.factors.push_back(f);
  return r;
}

FactorPtr contract(const std::vector<FactorPtr>& factors, SizeLedger* ledger) {
  if (factors.empty()) {
    if (ledger) ledger->note(1);
    return make_unit(1.0);
  }
  FactorPtr r = factors[0];
  for (std::size_t i = 1; i < factors.size(); ++i)
    r = multiply(r, factors[i], ledger);
  return r;
}

std::vector<FactorPtr> remove_barren(std::vector<FactorPtr> phis,
                                     const VarSet& keep,
                                     const VarSet& observed) {
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i < phis.size(); ++i) {
      const auto& f = phis[i];
      if (f->head().size() != 1) continue;
      VarId x = f->head()[0];
      if (vs_contains(keep, x) || vs_contains(observed, x)) continue;
      bool elsewhere = false;
      for (std::size_t j = 0; j < phis.size() && !elsewhere; ++j)
        if (j != i && phis[j]->in_dom(x)) elsewhere = true;
      if (!elsewhere) {
        phis.erase(phis.begin() + i);
        changed = true;
        break;
      }
    }
  }
  return phis;
}

std::vector<FactorPtr> eliminate_variable(std::vector<FactorPtr> phis, VarId x,
                                          SizeLedger* ledger) {
  std::vector<FactorPtr> with_x, rest;
  for (auto& f : phis)
    (f->in_dom(x) ? with_x : rest).push_back(f);
  if (with_x.empty())
    throw QueryError("eliminate_variable: variable in no factor");

  FactorPtr fx = nullptr;
  int heads = 0;
  bool multi_head = false;
  for (const auto& f : with_x)
    if (f->in_head(x)) {
      ++heads;
      fx = f;
      if (f->head().size() > 1) multi_head = true;
    }
  if (heads > 1)
    throw QueryError("eliminate_variable: several factors head the variable");

  if (fx && !multi_head) {
    std::vector<FactorPtr> others;
    for (const auto& f : with_x)
      if (f != fx) others.push_back(f);
    while (!others.empty()) {
      std::size_t best = 0;
      std::size_t best_size = std::numeric_limits<std::size_t>::max();
      int best_head = INT_MAX;
      for (std::size_t i = 0; i < others.size(); ++i) {
        VarSet u = vs_union(fx->dom(), others[i]->dom());
        std::size_t s = 1;
        for (VarId v : u) {
          int c = fx->in_dom(v) ? fx->card_of(v) : others[i]->card_of(v);
          s *= static_cast<std::size_t>(c);
        }
        int hid = others[i]->head().empty() ? -1 : others[i]->head()[0];
        if (s < best_size || (s == best_size && hid < best_head)) {
          best = i;
          best_size = s;
          best_head = hid;
        }
      }
      FactorPtr g = others[best];
      others.erase(others.begin() + best);
      ArcReversal rev = reverse_arc(fx, g, ledger);
      rest.push_back(rev.fy);
      fx = rev.fx;
    }
    // fx is now barren for x: it heads x and no other factor mentions x.
  } else {
    FactorPtr prod = with_x[0];
    for (std::size_t i = 1; i < with_x.size(); ++i)
      prod = multiply(prod, with_x[i], ledger);
    rest.push_back(sum_out(prod, x, ledger));
  }
  return rest;
}

}  // namespace larp
