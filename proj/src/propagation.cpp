#include "larp/propagation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <functional>
#include <map>

#include "larp/errors.hpp"

namespace larp {

bool d_connected(const Network& net, const VarSet& from, const VarSet& to,
                 const VarSet& observed) {
  if (from.empty() || to.empty()) return false;
  const int n = static_cast<int>(net.size());
  std::vector<bool> seen_up(n, false);    // ball arrived from a child
  std::vector<bool> seen_down(n, false);  // ball arrived from a parent
  std::deque<std::pair<VarId, bool>> q;   // bool: from_parent
  for (VarId s : from) q.emplace_back(s, false);
  while (!q.empty()) {
    auto [x, from_parent] = q.front();
    q.pop_front();
    auto& seen = from_parent ? seen_down : seen_up;
    if (seen[x]) continue;
    seen[x] = true;
    const bool obs = vs_contains(observed, x);
    if (from_parent) {
      if (obs) {
        for (VarId p : net.cpd(x).parents) q.emplace_back(p, false);
      } else {
        if (vs_contains(to, x)) return true;
        for (VarId c : net.children(x)) q.emplace_back(c, true);
      }
    } else {
      if (obs) continue;
      if (vs_contains(to, x)) return true;
      for (VarId p : net.cpd(x).parents) q.emplace_back(p, false);
      for (VarId c : net.children(x)) q.emplace_back(c, true);
    }
  }
  return false;
}

bool is_relevant(const Network& net, const Factor& phi, const VarSet& clique_vars,
                 const Evidence& ev) {
  if (phi.origin == FactorOrigin::Evidence) return true;
  const VarSet obs = ev.observed_set();
  const VarSet from = vs_minus(phi.dom(), obs);
  const VarSet to = vs_minus(clique_vars, obs);
  if (!vs_disjoint(from, to)) return true;
  return d_connected(net, from, to, obs);
}

namespace {

uint64_t set_state_space(const Network& net, const VarSet& vs) {
  uint64_t s = 1;
  for (VarId v : vs) s *= static_cast<uint64_t>(net.card(v));
  return s;
}

// Partition the pool by shared domain variables and drop every connected
// component whose members are all irrelevant to the target clique and carry
// no evidence, neither as indicators nor folded in. Such a component sums to
// one over its own variables, so removing it leaves the message unchanged.
void drop_irrelevant(const Network& net, std::vector<FactorPtr>& pool,
                     const VarSet& target_vars, const Evidence& ev) {
  const size_t n = pool.size();
  if (n == 0) return;
  std::vector<int> comp(n);
  for (size_t i = 0; i < n; ++i) comp[i] = static_cast<int>(i);
  std::function<int(int)> find = [&](int x) {
    while (comp[x] != x) x = comp[x] = comp[comp[x]];
    return x;
  };
  std::map<VarId, int> owner;
  for (size_t i = 0; i < n; ++i)
    for (VarId v : pool[i]->dom()) {
      auto [it, fresh] = owner.emplace(v, static_cast<int>(i));
      if (!fresh) comp[find(static_cast<int>(i))] = find(it->second);
    }
  std::map<int, bool> keep;
  for (size_t i = 0; i < n; ++i) {
    const Factor& f = *pool[i];
    bool carries = f.origin == FactorOrigin::Evidence || !f.absorbed.empty();
    if (carries || is_relevant(net, f, target_vars, ev)) keep[find(static_cast<int>(i))] = true;
  }
  std::vector<FactorPtr> out;
  out.reserve(n);
  for (size_t i = 0; i < n; ++i)
    if (keep.count(find(static_cast<int>(i)))) out.push_back(pool[i]);
  pool.swap(out);
}

}  // namespace

std::vector<FactorPtr> JunctionTree::posterior_pool(
    int clique, const ScratchMessages* scratch) const {
  const Clique& c = cliques_.at(clique);
  std::vector<FactorPtr> pool = c.potential.factors;
  pool.insert(pool.end(), c.evidence.begin(), c.evidence.end());
  for (int sid : c.seps) {
    const Message* m = scratch ? scratch->find(sid, clique) : nullptr;
    if (!m) m = &message_into(clique, sid);
    if (!m->computed) throw QueryError("message not available");
    pool.insert(pool.end(), m->factors.begin(), m->factors.end());
  }
  return pool;
}

Message JunctionTree::compute_message(int from, int sep_id, const MsgOptions& opt,
                                      const ScratchMessages* scratch,
                                      SizeLedger* ledger) const {
  const Clique& a = cliques_.at(from);
  const Separator& s = seps_.at(sep_id);
  const Clique& b = cliques_.at(neighbor_via(from, sep_id));
  const bool with_evidence = opt.mode != MsgMode::NoEvidence;

  std::vector<FactorPtr> pool = a.potential.factors;
  if (with_evidence)
    for (const FactorPtr& ind : a.evidence) {
      const VarId x = ind->origin_var;
      if (vs_contains(opt.postpone, x)) continue;
      if (opt.mode == MsgMode::Cautious && vs_contains(s.vars, x)) continue;
      pool.push_back(ind);
    }
  for (int t : a.seps) {
    if (t == sep_id) continue;
    const Message* m = scratch ? scratch->find(t, from) : nullptr;
    if (!m) m = &message_into(from, t, opt.use_shadow);
    if (!m->computed) throw QueryError("message not available");
    pool.insert(pool.end(), m->factors.begin(), m->factors.end());
  }

  VarSet observed_eff;
  if (with_evidence) observed_eff = vs_minus(ev_.observed_set(), opt.postpone);
  const VarSet keep = vs_union(vs_union(s.vars, opt.protect), opt.postpone);

  pool = remove_barren(pool, keep, observed_eff);

  VarSet slice;
  for (VarId x : observed_eff) {
    if (!vs_contains(a.vars, x)) continue;
    if (opt.mode == MsgMode::Cautious && vs_contains(s.vars, x)) continue;
    slice.push_back(x);
  }
  for (VarId x : slice) {
    const int st = ev_.state_of(x);
    std::vector<FactorPtr> next;
    next.reserve(pool.size());
    for (const FactorPtr& f : pool) {
      if (!f->in_dom(x)) {
        next.push_back(f);
      } else if (f->origin == FactorOrigin::Evidence && f->origin_var == x) {
        // Its slice is the scalar one.
      } else {
        next.push_back(apply_finding(f, x, st, ledger));
      }
    }
    pool.swap(next);
  }

  if (opt.mode == MsgMode::Larp) drop_irrelevant(*net_, pool, b.vars, ev_);

  const VarSet blocked = vs_union(keep, observed_eff);
  for (;;) {
    VarSet present;
    for (const FactorPtr& f : pool) present = vs_union(present, f->dom());
    VarSet cand = vs_minus(present, blocked);
    if (cand.empty()) break;
    VarId pick = -1;
    uint64_t pick_cost = 0;
    for (VarId x : cand) {
      VarSet u;
      for (const FactorPtr& f : pool)
        if (f->in_dom(x)) u = vs_union(u, f->dom());
      const uint64_t cost = set_state_space(*net_, u);
      if (pick < 0 || cost < pick_cost) {
        pick = x;
        pick_cost = cost;
      }
    }
    pool = eliminate_variable(pool, pick, ledger);
    pool = remove_barren(pool, keep, observed_eff);
  }

  for (const FactorPtr& f : pool)
    if (f->head().size() > 1)
      throw QueryError("internal: message factor with a joint head");

  Message m;
  m.factors = std::move(pool);
  m.computed = true;
  return m;
}

Message JunctionTree::recompute_into(int clique, int sep_id,
                                     const MsgOptions& opt,
                                     ScratchMessages& scratch,
                                     SizeLedger* ledger) const {
  const int from = neighbor_via(clique, sep_id);
  for (int t : cliques_.at(from).seps) {
    if (t == sep_id) continue;
    if (scratch.find(t, from)) continue;
    const Message& m = message_into(from, t);
    bool dirty = false;
    for (const FactorPtr& f : m.factors)
      if (!vs_disjoint(f->absorbed, opt.postpone)) {
        dirty = true;
        break;
      }
    if (dirty)
      scratch.into[{t, from}] = recompute_into(from, t, opt, scratch, ledger);
  }
  return compute_message(from, sep_id, opt, &scratch, ledger);
}

void JunctionTree::run_flows(MsgMode mode, bool shadow, SizeLedger* ledger) {
  // Orient the tree away from the root once per flow.
  std::vector<int> order;       // clique ids, root first
  std::vector<int> parent_sep(cliques_.size(), -1);
  std::vector<bool> seen(cliques_.size(), false);
  order.push_back(root_);
  seen[root_] = true;
  for (size_t i = 0; i < order.size(); ++i) {
    const int c = order[i];
    for (int sid : cliques_[c].seps) {
      const int nb = neighbor_via(c, sid);
      if (seen[nb]) continue;
      seen[nb] = true;
      parent_sep[nb] = sid;
      order.push_back(nb);
    }
  }

  MsgOptions opt;
  opt.mode = mode;
  opt.use_shadow = shadow;

  for (size_t i = order.size(); i-- > 0;) {
    const int c = order[i];
    if (parent_sep[c] < 0) continue;
    Message m = compute_message(c, parent_sep[c], opt, nullptr, ledger);
    mailbox(parent_sep[c], neighbor_via(c, parent_sep[c]), shadow) = std::move(m);
  }
  for (int c : order)
    for (int sid : cliques_[c].seps) {
      const int nb = neighbor_via(c, sid);
      if (parent_sep[nb] != sid) continue;
      Message m = compute_message(c, sid, opt, nullptr, ledger);
      mailbox(sid, nb, shadow) = std::move(m);
    }
}

void JunctionTree::finish_propagation(Mode mode, SizeLedger* ledger) {
  posterior_.clear();
  posterior_.reserve(cliques_.size());
  for (int c = 0; c < clique_count(); ++c) {
    FactorPtr tbl = contract(posterior_pool(c), ledger);
    for (VarId x : ev_.observed_set())
      if (tbl->in_dom(x)) tbl = apply_finding(tbl, x, ev_.state_of(x), ledger);
    posterior_.push_back(*tbl);
  }
  double p0 = 0.0;
  for (int c = 0; c < clique_count(); ++c) {
    double p = 0.0;
    for (double v : posterior_[c].values()) p += v;
    if (c == 0) {
      p0 = p;
    } else if (std::abs(p - p0) > 1e-9 * std::max({1.0, std::abs(p), std::abs(p0)})) {
      throw NumericalError("cliques disagree on the evidence probability");
    }
  }
  p_ev_ = p0;
  mode_ = mode;
  propagated_ = true;
  stats_.largest_potential_size = ledger->largest;
  stats_.total_created_size = ledger->total;
}

const PropagationStats& JunctionTree::propagate(Mode mode) {
  if (mode == Mode::Clarp) return cautious_propagate();
  if (!initialized_) initialize(Evidence{});
  const auto t0 = std::chrono::steady_clock::now();
  SizeLedger ledger;
  for (Separator& s : seps_) {
    s.to_a = Message{};
    s.to_b = Message{};
  }
  run_flows(mode == Mode::Larp ? MsgMode::Larp : MsgMode::AllEvidence,
            /*shadow=*/false, &ledger);
  finish_propagation(mode, &ledger);
  stats_.elapsed_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return stats_;
}

}  // namespace larp
