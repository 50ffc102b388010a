#include "larp/derivatives.hpp"

#include <algorithm>
#include <set>

#include "larp/errors.hpp"
#include "larp/varprop.hpp"
#include "removal.hpp"

namespace larp {

FactorPtr evaluate_removed(const Network& net, const Evidence& ev,
                           const std::vector<FactorPtr>& pool,
                           const std::vector<const Factor*>& removed,
                           const VarSet& w, const VarSet& unfolded,
                           SizeLedger* ledger) {
  std::vector<const Factor*> pending = removed;
  std::vector<FactorPtr> rest;
  rest.reserve(pool.size());
  for (const FactorPtr& f : pool) {
    auto it = std::find(pending.begin(), pending.end(), f.get());
    if (it != pending.end()) {
      pending.erase(it);
      continue;
    }
    rest.push_back(f);
  }
  if (!pending.empty())
    throw QueryError("evaluate_removed: factor is not in the pool");

  FactorPtr t = contract(rest, ledger);
  for (VarId v : vs_minus(t->dom(), w)) t = sum_out(t, v, ledger);

  std::vector<int> cards(w.size());
  for (std::size_t k = 0; k < w.size(); ++k) cards[k] = net.card(w[k]);
  std::size_t n = 1;
  for (int c : cards) n *= static_cast<std::size_t>(c);

  // Per result axis: the stride into t (0 when absent) and, for an absent
  // observed variable whose finding is folded into t, the only live state.
  std::vector<std::size_t> tstride(w.size(), 0);
  std::vector<int> pinned(w.size(), -1);
  for (std::size_t k = 0; k < w.size(); ++k) {
    const VarId v = w[k];
    const int ax = t->axis_of(v);
    if (ax >= 0) {
      tstride[k] = t->stride_of_axis(ax);
    } else if (ev.observed(v) && !vs_contains(unfolded, v)) {
      pinned[k] = ev.state_of(v);
    }
  }

  const auto& tv = t->values();
  std::vector<double> vals(n, 0.0);
  std::vector<int> digit(w.size(), 0);
  std::size_t ti = 0;
  for (std::size_t i = 0; i < n; ++i) {
    bool live = true;
    for (std::size_t k = 0; k < w.size(); ++k)
      if (pinned[k] >= 0 && digit[k] != pinned[k]) {
        live = false;
        break;
      }
    if (live) vals[i] = tv[ti];
    for (int k = static_cast<int>(w.size()) - 1; k >= 0; --k) {
      ++digit[k];
      ti += tstride[k];
      if (digit[k] < cards[k]) break;
      ti -= tstride[k] * static_cast<std::size_t>(cards[k]);
      digit[k] = 0;
    }
  }
  if (ledger) ledger->note(n);
  return make_factor({}, w, std::move(cards), std::move(vals));
}

namespace {

void require_propagated(const JunctionTree& t) {
  if (!t.propagated()) throw QueryError("tree not propagated");
}

void require_var(const JunctionTree& t, VarId x) {
  if (x < 0 || x >= static_cast<VarId>(t.net().size()))
    throw QueryError("unknown variable id");
}

}  // namespace

namespace detail {

bool dirty_message(const Message& m, const VarSet& postpone) {
  if (postpone.empty()) return false;
  for (const FactorPtr& f : m.factors)
    if (!vs_disjoint(f->absorbed, postpone)) return true;
  return false;
}

std::vector<double> in_cpd_layout(const Network& net, VarId x, const Factor& r) {
  const Cpd& cpd = net.cpd(x);
  std::vector<double> out(cpd.table.size());
  std::vector<int> state(net.size(), 0);
  for (std::size_t ext = 0; ext < out.size(); ++ext) {
    std::size_t rem = ext;
    state[x] = static_cast<int>(rem % net.card(x));
    rem /= net.card(x);
    for (std::size_t p = cpd.parents.size(); p-- > 0;) {
      const VarId u = cpd.parents[p];
      state[u] = static_cast<int>(rem % net.card(u));
      rem /= net.card(u);
    }
    std::size_t ri = 0;
    for (std::size_t k = 0; k < r.axes().size(); ++k)
      ri = ri * static_cast<std::size_t>(r.cards()[k]) +
           static_cast<std::size_t>(state[r.axes()[k]]);
    out[ext] = r.values()[ri];
  }
  return out;
}

bool plan_targets(const Network& net, const Evidence& ev,
                  const std::vector<FactorPtr>& pool,
                  const std::vector<MultiTarget>& targets, RemovalPlan& plan) {
  plan = {};
  for (const MultiTarget& mt : targets) {
    if (mt.theta) {
      const Factor* pristine = nullptr;
      int lineage = 0;
      for (const FactorPtr& f : pool)
        if (vs_contains(f->cpd_sources, mt.var)) {
          ++lineage;
          if (f->origin == FactorOrigin::Cpd && f->origin_var == mt.var)
            pristine = f.get();
        }
      if (lineage != 1 || pristine == nullptr) return false;
      plan.removed.push_back(pristine);
      plan.w = vs_union(plan.w, net.family(mt.var));
    } else if (ev.observed(mt.var)) {
      const Factor* ind = nullptr;
      bool dims = false;
      for (const FactorPtr& f : pool) {
        if (f->origin == FactorOrigin::Evidence && f->origin_var == mt.var) {
          if (ind != nullptr) return false;
          ind = f.get();
          continue;
        }
        if (f->in_dom(mt.var)) dims = true;
        if (vs_contains(f->absorbed, mt.var)) return false;
      }
      if (ind == nullptr || !dims) return false;
      plan.removed.push_back(ind);
      vs_insert(plan.w, mt.var);
      vs_insert(plan.unfolded, mt.var);
    } else {
      bool dims = false;
      for (const FactorPtr& f : pool)
        if (f->in_dom(mt.var)) {
          dims = true;
          break;
        }
      if (!dims) return false;
      vs_insert(plan.w, mt.var);
    }
  }
  return true;
}

void validate_targets(const JunctionTree& t,
                      const std::vector<MultiTarget>& targets) {
  require_propagated(t);
  if (targets.empty()) throw QueryError("no derivative targets given");
  std::set<std::pair<bool, VarId>> seen;
  for (const MultiTarget& mt : targets) {
    require_var(t, mt.var);
    if (!seen.insert({mt.theta, mt.var}).second)
      throw QueryError("repeated derivative target");
  }
}

}  // namespace detail

std::vector<double> d_theta(const JunctionTree& t, VarId x) {
  require_propagated(t);
  require_var(t, x);
  const Network& net = t.net();
  SizeLedger ledger;
  FactorPtr r = evaluate_removed(net, t.evidence(), t.posterior_pool(t.host_of(x)),
                                 {net.cpd(x).factor.get()}, net.family(x), {},
                                 &ledger);
  return detail::in_cpd_layout(net, x, *r);
}

std::vector<double> d_f(const JunctionTree& t, VarId x) {
  require_propagated(t);
  require_var(t, x);
  const Network& net = t.net();
  const Evidence& ev = t.evidence();
  SizeLedger ledger;
  const VarSet w{x};
  if (!ev.observed(x)) {
    const int c = t.cliques_containing(x).front();
    return evaluate_removed(net, ev, t.posterior_pool(c), {}, w, {}, &ledger)
        ->values();
  }
  // Prefer a clique whose pool never folded this finding in.
  for (int c : t.cliques_containing(x)) {
    std::vector<FactorPtr> pool = t.posterior_pool(c);
    const Factor* ind = nullptr;
    bool dims = false, clean = true;
    for (const FactorPtr& f : pool) {
      if (f->origin == FactorOrigin::Evidence && f->origin_var == x) {
        ind = f.get();
        continue;
      }
      if (f->in_dom(x)) dims = true;
      if (vs_contains(f->absorbed, x)) {
        clean = false;
        break;
      }
    }
    if (!clean || ind == nullptr || !dims) continue;
    return evaluate_removed(net, ev, pool, {ind}, w, w, &ledger)->values();
  }
  // Every clique is contaminated: rebuild the host's incoming messages with
  // the finding postponed.
  const int host = t.host_of(x);
  ScratchMessages scratch;
  const MsgOptions opt = t.query_options(w);
  for (int sid : t.clique(host).seps) {
    if (detail::dirty_message(t.message_into(host, sid), w))
      scratch.into[{sid, host}] =
          t.recompute_into(host, sid, opt, scratch, &ledger);
  }
  std::vector<FactorPtr> pool = t.posterior_pool(host, &scratch);
  const Factor* ind = nullptr;
  for (const FactorPtr& f : pool)
    if (f->origin == FactorOrigin::Evidence && f->origin_var == x) {
      ind = f.get();
      break;
    }
  if (ind == nullptr)
    throw QueryError("internal: no indicator slot for the finding");
  return evaluate_removed(net, ev, pool, {ind}, w, w, &ledger)->values();
}

double retracted_evidence_prob(const JunctionTree& t, VarId x) {
  if (!t.evidence().observed(x))
    throw QueryError("retraction target is not observed");
  double s = 0.0;
  for (double v : d_f(t, x)) s += v;
  return s;
}

FactorPtr d_separator(const JunctionTree& t, int sep_id, int into_clique) {
  require_propagated(t);
  if (sep_id < 0 || sep_id >= t.sep_count())
    throw QueryError("unknown separator id");
  const Message& m = t.message_into(into_clique, sep_id);
  std::vector<const Factor*> removed;
  removed.reserve(m.factors.size());
  for (const FactorPtr& f : m.factors) removed.push_back(f.get());
  SizeLedger ledger;
  return evaluate_removed(t.net(), t.evidence(), t.posterior_pool(into_clique),
                          removed, t.sep(sep_id).vars, {}, &ledger);
}

FactorPtr d_message_factor(const JunctionTree& t, int sep_id, int into_clique,
                           std::size_t index) {
  require_propagated(t);
  if (sep_id < 0 || sep_id >= t.sep_count())
    throw QueryError("unknown separator id");
  const Message& m = t.message_into(into_clique, sep_id);
  if (index >= m.factors.size())
    throw QueryError("message factor index out of range");
  const Factor* phi = m.factors[index].get();
  SizeLedger ledger;
  return evaluate_removed(t.net(), t.evidence(), t.posterior_pool(into_clique),
                          {phi}, phi->dom(), {}, &ledger);
}

FactorPtr d_multi_at(const JunctionTree& t,
                     const std::vector<MultiTarget>& targets, int clique,
                     const ScratchMessages* scratch,
                     const std::vector<FactorPtr>& extra) {
  detail::validate_targets(t, targets);
  if (clique < 0 || clique >= t.clique_count())
    throw QueryError("unknown clique id");
  const Network& net = t.net();
  const Evidence& ev = t.evidence();
  VarSet postpone;
  for (const MultiTarget& mt : targets)
    if (!mt.theta && ev.observed(mt.var)) vs_insert(postpone, mt.var);

  SizeLedger ledger;
  ScratchMessages local = scratch ? *scratch : ScratchMessages{};
  const MsgOptions opt = t.query_options(postpone);
  for (int sid : t.clique(clique).seps) {
    if (local.find(sid, clique)) continue;
    if (detail::dirty_message(t.message_into(clique, sid), postpone))
      local.into[{sid, clique}] =
          t.recompute_into(clique, sid, opt, local, &ledger);
  }
  std::vector<FactorPtr> pool = t.posterior_pool(clique, &local);
  pool.insert(pool.end(), extra.begin(), extra.end());

  detail::RemovalPlan plan;
  if (!detail::plan_targets(net, ev, pool, targets, plan))
    throw QueryError("targets are not jointly evaluable at this clique");
  return evaluate_removed(net, ev, pool, plan.removed, plan.w, plan.unfolded,
                          &ledger);
}

FactorPtr d_multi(const JunctionTree& t, const std::vector<MultiTarget>& targets) {
  detail::validate_targets(t, targets);
  const Network& net = t.net();
  const Evidence& ev = t.evidence();
  VarSet postpone;
  for (const MultiTarget& mt : targets)
    if (!mt.theta && ev.observed(mt.var)) vs_insert(postpone, mt.var);

  const MsgOptions opt = t.query_options(postpone);
  for (int c = 0; c < t.clique_count(); ++c) {
    SizeLedger ledger;
    ScratchMessages scratch;
    for (int sid : t.clique(c).seps) {
      if (detail::dirty_message(t.message_into(c, sid), postpone))
        scratch.into[{sid, c}] =
            t.recompute_into(c, sid, opt, scratch, &ledger);
    }
    std::vector<FactorPtr> pool = t.posterior_pool(c, &scratch);
    detail::RemovalPlan plan;
    if (detail::plan_targets(net, ev, pool, targets, plan))
      return evaluate_removed(net, ev, pool, plan.removed, plan.w,
                              plan.unfolded, &ledger);
  }

  // No clique holds all targets untouched: pull the target families into one
  // place and evaluate there.
  VarSet wanted;
  int target = -1;
  for (const MultiTarget& mt : targets) {
    if (mt.theta) {
      wanted = vs_union(wanted, net.family(mt.var));
      if (target < 0) target = t.host_of(mt.var);
    } else {
      vs_insert(wanted, mt.var);
      if (target < 0) target = t.cliques_containing(mt.var).front();
    }
  }
  CollectResult cr = collect_variables(t, wanted, target);
  return d_multi_at(t, targets, target, &cr.scratch, cr.indicators);
}

std::vector<double> parameter_posterior(const JunctionTree& t, VarId x) {
  std::vector<double> out = d_theta(t, x);
  const double p = t.prob_evidence();
  if (p <= 0.0)
    throw NumericalError("evidence has zero probability, posteriors undefined");
  const auto& table = t.net().cpd(x).table;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = out[i] * table[i] / p;
  return out;
}

}  // namespace larp
