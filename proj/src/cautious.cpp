#include "larp/cautious.hpp"

#include <algorithm>
#include <chrono>
#include <map>

#include "larp/errors.hpp"
#include "removal.hpp"

namespace larp {

const PropagationStats& JunctionTree::cautious_propagate() {
  if (!initialized_) initialize(Evidence{});
  const auto t0 = std::chrono::steady_clock::now();
  SizeLedger ledger;
  for (Separator& s : seps_) {
    s.to_a = Message{};
    s.to_b = Message{};
    s.shadow_to_a = Message{};
    s.shadow_to_b = Message{};
  }
  run_flows(MsgMode::NoEvidence, /*shadow=*/true, &ledger);
  run_flows(MsgMode::Cautious, /*shadow=*/false, &ledger);
  finish_propagation(Mode::Clarp, &ledger);
  stats_.elapsed_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return stats_;
}

namespace {

void require_cautious(const JunctionTree& t, int clique) {
  if (!t.propagated() || t.mode() != Mode::Clarp)
    throw QueryError("retraction needs a cautiously propagated tree");
  if (clique < 0 || clique >= t.clique_count())
    throw QueryError("unknown clique id");
}

struct UnionFind {
  std::vector<int> up;
  explicit UnionFind(int n) : up(n) {
    for (int i = 0; i < n; ++i) up[i] = i;
  }
  int find(int x) {
    while (up[x] != x) x = up[x] = up[up[x]];
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) up[a] = b;
  }
};

// The groups whose findings make up retract. Throws unless retract is an
// exact union of retractable groups.
std::vector<const RetractionGroup*> cover_of(
    const std::vector<RetractionGroup>& groups, const VarSet& retract) {
  std::vector<const RetractionGroup*> cover;
  VarSet seen;
  for (const RetractionGroup& g : groups) {
    if (vs_disjoint(g.findings, retract)) continue;
    if (!vs_subset(g.findings, retract))
      throw QueryError("retraction set splits a group of findings");
    if (!g.retractable)
      throw QueryError("group is not retractable by swapping");
    cover.push_back(&g);
    seen = vs_union(seen, g.findings);
  }
  if (seen != retract)
    throw QueryError("retraction set is not covered by retractable groups");
  return cover;
}

}  // namespace

std::vector<RetractionGroup> retractable_sets(const JunctionTree& t,
                                              int clique) {
  require_cautious(t, clique);
  std::vector<RetractionGroup> groups;
  const Clique& at = t.clique(clique);

  for (const FactorPtr& ind : at.evidence) {
    RetractionGroup g;
    g.clique = clique;
    g.findings = VarSet{ind->origin_var};
    g.retractable = true;
    groups.push_back(std::move(g));
  }

  for (int sid : at.seps) {
    const Message& m = t.message_into(clique, sid);
    const Message& shadow = t.message_into(clique, sid, /*shadow=*/true);
    const int nm = static_cast<int>(m.factors.size());
    const int ns = static_cast<int>(shadow.factors.size());
    UnionFind uf(nm + ns);

    // Shared lineage links factors of either mailbox; shared absorption links
    // the contaminated ones of the cautious mailbox.
    std::map<VarId, int> lineage_owner, finding_owner;
    auto link = [&](std::map<VarId, int>& owner, VarId v, int i) {
      auto [it, fresh] = owner.emplace(v, i);
      if (!fresh) uf.unite(i, it->second);
    };
    for (int i = 0; i < nm; ++i) {
      for (VarId v : m.factors[i]->cpd_sources) link(lineage_owner, v, i);
      for (VarId v : m.factors[i]->absorbed) link(finding_owner, v, i);
    }
    for (int j = 0; j < ns; ++j)
      for (VarId v : shadow.factors[j]->cpd_sources)
        link(lineage_owner, v, nm + j);

    std::map<int, RetractionGroup> blocks;
    for (int i = 0; i < nm; ++i) {
      if (m.factors[i]->absorbed.empty()) continue;
      blocks[uf.find(i)];  // a block exists where something was folded in
    }
    for (auto& [key, g] : blocks) {
      VarSet region, swapped_in;
      for (int i = 0; i < nm; ++i) {
        if (uf.find(i) != key) continue;
        g.out_factors.push_back(m.factors[i]);
        g.findings = vs_union(g.findings, m.factors[i]->absorbed);
        region = vs_union(region, m.factors[i]->cpd_sources);
      }
      for (int j = 0; j < ns; ++j) {
        if (uf.find(nm + j) != key) continue;
        g.in_factors.push_back(shadow.factors[j]);
        swapped_in = vs_union(swapped_in, shadow.factors[j]->cpd_sources);
      }
      g.clique = clique;
      g.sep = sid;
      g.retractable = vs_subset(swapped_in, region);
      groups.push_back(std::move(g));
    }
  }
  return groups;
}

std::vector<FactorPtr> retracted_pool(const JunctionTree& t, int clique,
                                      const VarSet& retract) {
  require_cautious(t, clique);
  const std::vector<RetractionGroup> groups = retractable_sets(t, clique);
  const auto cover = cover_of(groups, retract);
  const Clique& at = t.clique(clique);

  std::vector<FactorPtr> pool = at.potential.factors;
  for (const FactorPtr& ind : at.evidence)
    if (!vs_contains(retract, ind->origin_var)) pool.push_back(ind);
  for (int sid : at.seps) {
    std::vector<FactorPtr> out, in;
    for (const RetractionGroup* g : cover) {
      if (g->sep != sid) continue;
      out.insert(out.end(), g->out_factors.begin(), g->out_factors.end());
      in.insert(in.end(), g->in_factors.begin(), g->in_factors.end());
    }
    for (const FactorPtr& f : t.message_into(clique, sid).factors)
      if (std::find(out.begin(), out.end(), f) == out.end()) pool.push_back(f);
    pool.insert(pool.end(), in.begin(), in.end());
  }
  return pool;
}

double retracted_prob(const JunctionTree& t, int clique,
                      const VarSet& retract) {
  SizeLedger ledger;
  FactorPtr prod = contract(retracted_pool(t, clique, retract), &ledger);
  double p = 0.0;
  for (double v : prod->values()) p += v;
  return p;
}

FactorPtr retracted_derivative(const JunctionTree& t, int clique,
                               const VarSet& retract,
                               const std::vector<MultiTarget>& targets) {
  detail::validate_targets(t, targets);
  std::vector<FactorPtr> pool = retracted_pool(t, clique, retract);
  Evidence ev = t.evidence();
  for (VarId v : retract) ev = ev.without(v);

  detail::RemovalPlan plan;
  if (!detail::plan_targets(t.net(), ev, pool, targets, plan))
    throw QueryError("targets are not jointly evaluable at this clique");
  SizeLedger ledger;
  return evaluate_removed(t.net(), ev, pool, plan.removed, plan.w,
                          plan.unfolded, &ledger);
}

}  // namespace larp
