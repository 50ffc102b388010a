#include "larp/varprop.hpp"

#include <algorithm>
#include <limits>
#include <map>

#include "larp/derivatives.hpp"
#include "larp/errors.hpp"

namespace larp {

CollectResult collect_variables(const JunctionTree& t, const VarSet& xs,
                                int target_clique) {
  if (!t.propagated()) throw QueryError("tree not propagated");
  if (target_clique < 0 || target_clique >= t.clique_count())
    throw QueryError("unknown clique id");
  const Network& net = t.net();
  const Evidence& ev = t.evidence();

  CollectResult cr;
  cr.target = target_clique;
  cr.collected = vs_sorted(xs);
  for (VarId x : cr.collected)
    if (x < 0 || x >= static_cast<VarId>(net.size()))
      throw QueryError("unknown variable id");

  // Orient the tree toward the target.
  const int nc = t.clique_count();
  std::vector<int> parent_clique(nc, -1), parent_sep(nc, -1), depth(nc, -1);
  std::vector<int> order;
  order.push_back(target_clique);
  depth[target_clique] = 0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const int c = order[i];
    for (int sid : t.clique(c).seps) {
      const int nb = t.neighbor_via(c, sid);
      if (depth[nb] >= 0) continue;
      depth[nb] = depth[c] + 1;
      parent_clique[nb] = c;
      parent_sep[nb] = sid;
      order.push_back(nb);
    }
  }

  VarSet postpone;
  std::map<std::pair<int, int>, int> edges;  // (sep, into) -> depth of sender
  for (VarId x : cr.collected) {
    if (ev.observed(x)) vs_insert(postpone, x);
    if (vs_contains(t.clique(target_clique).vars, x)) continue;
    int source = -1;
    for (int c : t.cliques_containing(x))
      if (source < 0 || depth[c] < depth[source] ||
          (depth[c] == depth[source] && c < source))
        source = c;
    if (source < 0) throw QueryError("internal: variable in no clique");
    for (int c = source; c != target_clique; c = parent_clique[c]) {
      auto key = std::make_pair(parent_sep[c], parent_clique[c]);
      auto [it, fresh] = edges.emplace(key, depth[c]);
      if (!fresh) it->second = std::max(it->second, depth[c]);
    }
    if (ev.observed(x))
      cr.indicators.push_back(evidence_indicator(net, x, ev.state_of(x)));
  }

  std::vector<std::pair<std::pair<int, int>, int>> work(edges.begin(),
                                                        edges.end());
  std::sort(work.begin(), work.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  const MsgOptions opt = t.query_options(postpone, cr.collected);
  SizeLedger ledger;
  for (const auto& [key, d] : work) {
    (void)d;
    cr.scratch.into[key] =
        t.recompute_into(key.second, key.first, opt, cr.scratch, &ledger);
  }
  return cr;
}

CollectResult collect_variable(const JunctionTree& t, VarId x,
                               int target_clique) {
  if (target_clique >= 0 && target_clique < t.clique_count() &&
      vs_contains(t.clique(target_clique).vars, x))
    throw QueryError("variable is already in the target clique");
  return collect_variables(t, VarSet{x}, target_clique);
}

std::vector<FactorPtr> collected_pool(const JunctionTree& t,
                                      const CollectResult& cr) {
  std::vector<FactorPtr> pool = t.posterior_pool(cr.target, &cr.scratch);
  pool.insert(pool.end(), cr.indicators.begin(), cr.indicators.end());
  return pool;
}

FactorPtr joint_over(const JunctionTree& t, const VarSet& w_in) {
  if (!t.propagated()) throw QueryError("tree not propagated");
  const Network& net = t.net();
  const Evidence& ev = t.evidence();
  const VarSet w = vs_sorted(w_in);
  for (VarId x : w)
    if (x < 0 || x >= static_cast<VarId>(net.size()))
      throw QueryError("unknown variable id");
  SizeLedger ledger;

  for (int c = 0; c < t.clique_count(); ++c) {
    if (!vs_subset(w, t.clique(c).vars)) continue;
    auto post = std::make_shared<Factor>(t.posterior_clique(c));
    return evaluate_removed(net, ev, {post}, {}, w, {}, &ledger);
  }

  int target = -1;
  double best = std::numeric_limits<double>::infinity();
  for (int c = 0; c < t.clique_count(); ++c) {
    double cost = static_cast<double>(t.state_space(c));
    for (VarId x : vs_minus(w, t.clique(c).vars)) cost *= net.card(x);
    if (cost < best) {
      best = cost;
      target = c;
    }
  }
  CollectResult cr = collect_variables(t, w, target);
  std::vector<FactorPtr> pool = t.posterior_pool(target, &cr.scratch);
  pool.insert(pool.end(), cr.indicators.begin(), cr.indicators.end());
  return evaluate_removed(net, ev, pool, {}, w, {}, &ledger);
}

}  // namespace larp
