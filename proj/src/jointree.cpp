#include "larp/jointree.hpp"

#include <algorithm>
#include <limits>

#include "larp/errors.hpp"

namespace larp {

std::vector<VarSet> moralize(const Network& net) {
  std::vector<VarSet> adj(net.size());
  auto link = [&](VarId a, VarId b) {
    if (a == b) return;
    vs_insert(adj[a], b);
    vs_insert(adj[b], a);
  };
  for (VarId v = 0; v < static_cast<VarId>(net.size()); ++v) {
    const auto& parents = net.cpd(v).parents;
    for (VarId p : parents) link(v, p);
    for (size_t i = 0; i < parents.size(); ++i)
      for (size_t j = i + 1; j < parents.size(); ++j)
        link(parents[i], parents[j]);
  }
  return adj;
}

namespace {

uint64_t set_state_space(const Network& net, const VarSet& vs) {
  uint64_t s = 1;
  for (VarId v : vs) s *= static_cast<uint64_t>(net.card(v));
  return s;
}

}  // namespace

Triangulation triangulate(const Network& net, const std::vector<VarSet>& adj) {
  const int n = static_cast<int>(net.size());
  std::vector<VarSet> g = adj;
  std::vector<bool> gone(n, false);
  Triangulation t;

  auto live_neighbors = [&](VarId v) {
    VarSet out;
    for (VarId u : g[v])
      if (!gone[u]) out.push_back(u);
    return out;
  };

  for (int step = 0; step < n; ++step) {
    VarId best = -1;
    size_t best_fill = 0;
    uint64_t best_space = 0;
    for (VarId v = 0; v < n; ++v) {
      if (gone[v]) continue;
      VarSet nb = live_neighbors(v);
      size_t fill = 0;
      for (size_t i = 0; i < nb.size(); ++i)
        for (size_t j = i + 1; j < nb.size(); ++j)
          if (!vs_contains(g[nb[i]], nb[j])) ++fill;
      VarSet cl = nb;
      vs_insert(cl, v);
      uint64_t space = set_state_space(net, cl);
      if (best < 0 || fill < best_fill ||
          (fill == best_fill && space < best_space)) {
        best = v;
        best_fill = fill;
        best_space = space;
      }
    }
    VarSet nb = live_neighbors(best);
    for (size_t i = 0; i < nb.size(); ++i)
      for (size_t j = i + 1; j < nb.size(); ++j)
        if (!vs_contains(g[nb[i]], nb[j])) {
          vs_insert(g[nb[i]], nb[j]);
          vs_insert(g[nb[j]], nb[i]);
          t.fill.emplace_back(nb[i], nb[j]);
        }
    VarSet cl = nb;
    vs_insert(cl, best);
    t.order.push_back(best);
    gone[best] = true;

    // A later candidate never contains an eliminated variable, so it can only
    // be a subset of an earlier one, never a superset.
    bool dominated = false;
    for (const auto& c : t.cliques)
      if (vs_subset(cl, c)) {
        dominated = true;
        break;
      }
    if (!dominated) t.cliques.push_back(cl);
  }
  return t;
}

namespace {

struct UnionFind {
  std::vector<int> up;
  explicit UnionFind(int n) : up(n) {
    for (int i = 0; i < n; ++i) up[i] = i;
  }
  int find(int x) {
    while (up[x] != x) x = up[x] = up[up[x]];
    return x;
  }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    up[a] = b;
    return true;
  }
};

}  // namespace

JunctionTree::JunctionTree(const Network& net, int root_override) : net_(&net) {
  Triangulation t = triangulate(net, moralize(net));
  const int nc = static_cast<int>(t.cliques.size());
  cliques_.resize(nc);
  for (int i = 0; i < nc; ++i) {
    cliques_[i].id = i;
    cliques_[i].vars = t.cliques[i];
  }

  struct Edge {
    int a, b;
    size_t weight;
    uint64_t space;
  };
  std::vector<Edge> edges;
  for (int i = 0; i < nc; ++i)
    for (int j = i + 1; j < nc; ++j) {
      VarSet s = vs_intersect(cliques_[i].vars, cliques_[j].vars);
      edges.push_back({i, j, s.size(), set_state_space(net, s)});
    }
  std::stable_sort(edges.begin(), edges.end(), [](const Edge& x, const Edge& y) {
    if (x.weight != y.weight) return x.weight > y.weight;
    if (x.space != y.space) return x.space > y.space;
    if (x.a != y.a) return x.a < y.a;
    return x.b < y.b;
  });
  UnionFind uf(nc);
  for (const Edge& e : edges) {
    if (static_cast<int>(seps_.size()) == nc - 1) break;
    if (!uf.unite(e.a, e.b)) continue;
    Separator s;
    s.id = static_cast<int>(seps_.size());
    s.a = e.a;
    s.b = e.b;
    s.vars = vs_intersect(cliques_[e.a].vars, cliques_[e.b].vars);
    cliques_[e.a].seps.push_back(s.id);
    cliques_[e.b].seps.push_back(s.id);
    seps_.push_back(std::move(s));
  }

  if (root_override >= 0) {
    if (root_override >= nc)
      throw ValidationError("root clique id out of range");
    root_ = root_override;
  } else {
    root_ = 0;
  }

  host_.assign(net.size(), -1);
  containing_.assign(net.size(), {});
  for (VarId v = 0; v < static_cast<VarId>(net.size()); ++v)
    for (int c = 0; c < nc; ++c)
      if (vs_contains(cliques_[c].vars, v)) containing_[v].push_back(c);
  for (VarId v = 0; v < static_cast<VarId>(net.size()); ++v) {
    const VarSet fam = net.family(v);
    for (int c = 0; c < nc; ++c)
      if (vs_subset(fam, cliques_[c].vars)) {
        host_[v] = c;
        break;
      }
    if (host_[v] < 0)
      throw ValidationError("no clique covers the family of " + net.var(v).name);
    cliques_[host_[v]].potential.insert(net.cpd(v).factor);
  }
}

int JunctionTree::sep_between(int a, int b) const {
  for (int sid : cliques_.at(a).seps) {
    const Separator& s = seps_[sid];
    if ((s.a == a && s.b == b) || (s.a == b && s.b == a)) return sid;
  }
  return -1;
}

int JunctionTree::neighbor_via(int clique, int sep) const {
  const Separator& s = seps_.at(sep);
  if (s.a == clique) return s.b;
  if (s.b == clique) return s.a;
  throw QueryError("separator not adjacent to clique");
}

std::uint64_t JunctionTree::state_space(int clique) const {
  return set_state_space(*net_, cliques_.at(clique).vars);
}

void JunctionTree::initialize(const Evidence& ev) {
  for (const auto& [v, s] : ev.findings()) {
    (void)s;
    if (v < 0 || v >= static_cast<VarId>(net_->size()))
      throw ValidationError("evidence variable id out of range");
  }
  ev_ = ev;
  for (Clique& c : cliques_) {
    c.evidence.clear();
    for (VarId v : c.vars)
      if (ev_.observed(v))
        c.evidence.push_back(evidence_indicator(*net_, v, ev_.state_of(v)));
  }
  for (Separator& s : seps_) {
    s.to_a = Message{};
    s.to_b = Message{};
    s.shadow_to_a = Message{};
    s.shadow_to_b = Message{};
  }
  posterior_.clear();
  p_ev_ = 0.0;
  propagated_ = false;
  initialized_ = true;
}

Message& JunctionTree::mailbox(int sep, int into_clique, bool shadow) {
  Separator& s = seps_.at(sep);
  if (s.a == into_clique) return shadow ? s.shadow_to_a : s.to_a;
  if (s.b == into_clique) return shadow ? s.shadow_to_b : s.to_b;
  throw QueryError("separator not adjacent to clique");
}

const Message& JunctionTree::message_into(int clique, int sep,
                                          bool shadow) const {
  const Separator& s = seps_.at(sep);
  if (s.a == clique) return shadow ? s.shadow_to_a : s.to_a;
  if (s.b == clique) return shadow ? s.shadow_to_b : s.to_b;
  throw QueryError("separator not adjacent to clique");
}

const Factor& JunctionTree::posterior_clique(int clique) const {
  if (!propagated_) throw QueryError("tree not propagated");
  return posterior_.at(clique);
}

double JunctionTree::prob_evidence() const {
  if (!propagated_) throw QueryError("tree not propagated");
  return p_ev_;
}

std::vector<double> JunctionTree::marginal(VarId x) const {
  if (!propagated_) throw QueryError("tree not propagated");
  if (x < 0 || x >= static_cast<VarId>(net_->size()))
    throw QueryError("marginal: unknown variable");
  const int k = net_->card(x);
  std::vector<double> out(k, 0.0);
  if (ev_.observed(x)) {
    out[ev_.state_of(x)] = 1.0;
    return out;
  }
  if (p_ev_ <= 0.0)
    throw NumericalError("evidence has zero probability, posteriors undefined");
  const Factor& post = posterior_.at(containing_.at(x).front());
  const int ax = post.axis_of(x);
  const size_t stride = post.stride_of_axis(ax);
  const size_t n = post.size();
  const auto& vals = post.values();
  for (size_t i = 0; i < n; ++i)
    out[(i / stride) % static_cast<size_t>(k)] += vals[i];
  for (double& v : out) v /= p_ev_;
  return out;
}

}  // namespace larp
