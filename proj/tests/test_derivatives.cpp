#include <cstdint>
#include <vector>

#include "common.hpp"
#include "larp/derivatives.hpp"
#include "larp/oracle.hpp"
#include "larp/randnet.hpp"

using namespace testing;
namespace orc = larp::oracle;

namespace {

const Mode kModes[] = {Mode::Larp, Mode::AllEvidence, Mode::Clarp};

JunctionTree propagated(const Network& net, const Evidence& ev, Mode mode) {
  JunctionTree t(net);
  t.initialize(ev);
  t.propagate(mode);
  return t;
}

// Visits every cpd cell of v as (child_state, parent_states, external index).
template <class Fn>
void for_each_cpd_entry(const Network& net, VarId v, Fn&& fn) {
  const auto& parents = net.cpd(v).parents;
  std::vector<int> ps(parents.size(), 0);
  while (true) {
    for (int x = 0; x < net.card(v); ++x)
      fn(x, ps, orc::cpd_index(net, v, x, ps));
    int k = static_cast<int>(ps.size()) - 1;
    for (; k >= 0; --k) {
      if (++ps[k] < net.card(parents[k])) break;
      ps[k] = 0;
    }
    if (k < 0) break;
  }
}

// Decodes cell i of a factor into per-variable states.
std::vector<int> cell_states(const Network& net, const Factor& f,
                             std::size_t i) {
  std::vector<int> st(net.size(), 0);
  for (int ax = static_cast<int>(f.axes().size()) - 1; ax >= 0; --ax) {
    st[f.axes()[ax]] = static_cast<int>(i % f.cards()[ax]);
    i /= f.cards()[ax];
  }
  return st;
}

std::vector<orc::EntryRef> entries_for(const Network& net,
                                       const std::vector<MultiTarget>& targets,
                                       const std::vector<int>& st) {
  std::vector<orc::EntryRef> es;
  for (const MultiTarget& q : targets) {
    orc::EntryRef e;
    e.var = q.var;
    if (q.theta) {
      e.kind = orc::EntryRef::Theta;
      std::vector<int> ps;
      for (VarId p : net.cpd(q.var).parents) ps.push_back(st[p]);
      e.index = orc::cpd_index(net, q.var, st[q.var], ps);
    } else {
      e.kind = orc::EntryRef::EvidenceFn;
      e.index = static_cast<std::size_t>(st[q.var]);
    }
    es.push_back(e);
  }
  return es;
}

void check_multi_against_oracle(const Network& net, const Evidence& ev,
                                const FactorPtr& got,
                                const std::vector<MultiTarget>& targets,
                                double tol) {
  VarSet want_dom;
  for (const MultiTarget& q : targets)
    want_dom = vs_union(want_dom, q.theta ? net.family(q.var) : VarSet{q.var});
  REQUIRE(got->dom() == want_dom);
  for (std::size_t i = 0; i < got->size(); ++i) {
    const auto st = cell_states(net, *got, i);
    const double want = orc::exact_partial(net, ev, entries_for(net, targets, st));
    check_value(got->values()[i], want, tol);
  }
}

}  // namespace

TEST_SUITE("derivatives") {

TEST_CASE("toy theta derivatives, pinned") {
  const Network net = toy1();
  const VarId x = vid(net, "X");
  const VarId y = vid(net, "Y");
  for (Mode mode : kModes) {
    const JunctionTree t = propagated(net, make_ev(net, {{"Y", "y0"}}), mode);
    check_close(d_theta(t, x), {0.9, 0.2}, 1e-15);
    check_close(d_theta(t, y), {0.3, 0.0, 0.7, 0.0}, 1e-15);
  }
}

TEST_CASE("theta derivatives satisfy the Euler identity") {
  const Network net = chain3();
  for (const char* evspec : {"none", "some"}) {
    const Evidence ev = evspec[0] == 'n' ? Evidence{}
                                         : make_ev(net, {{"Z", "z1"}});
    const JunctionTree t = propagated(net, ev, Mode::Larp);
    const double p = t.prob_evidence();
    for (VarId v = 0; v < net.size(); ++v) {
      const auto d = d_theta(t, v);
      const auto& table = net.cpd(v).table;
      REQUIRE(d.size() == table.size());
      double dot = 0.0;
      for (std::size_t i = 0; i < d.size(); ++i) dot += d[i] * table[i];
      check_value(dot, p, 1e-12);
    }
  }
}

TEST_CASE("evidence-function derivatives, pinned") {
  const Network net = toy1();
  const VarId x = vid(net, "X");
  const VarId y = vid(net, "Y");
  for (Mode mode : kModes) {
    const JunctionTree t = propagated(net, make_ev(net, {{"Y", "y0"}}), mode);
    SUBCASE("unobserved: the joint with the evidence") {
      check_close(d_f(t, x), {0.27, 0.14}, 1e-15);
      const auto d = d_f(t, x);
      const auto m = t.marginal(x);
      for (std::size_t i = 0; i < d.size(); ++i)
        check_value(d[i] / t.prob_evidence(), m[i], 1e-15);
    }
    SUBCASE("observed: extends the evidence function off the finding") {
      check_close(d_f(t, y), {0.41, 0.59}, 1e-15);
      check_value(retracted_evidence_prob(t, y), 1.0, 1e-15);
    }
  }
}

TEST_CASE("retracting one of two findings matches a fresh run") {
  const Network net = chain3();
  const Evidence ev = make_ev(net, {{"Y", "y0"}, {"Z", "z1"}});
  const VarId y = vid(net, "Y");
  const VarId z = vid(net, "Z");
  for (Mode mode : kModes) {
    const JunctionTree t = propagated(net, ev, mode);
    check_value(retracted_evidence_prob(t, y),
                orc::prob_evidence(net, ev.without(y)), 1e-12);
    check_value(retracted_evidence_prob(t, z),
                orc::prob_evidence(net, ev.without(z)), 1e-12);
    CHECK_THROWS_AS(retracted_evidence_prob(t, vid(net, "X")), QueryError);
  }
}

TEST_CASE("separator derivatives, pinned and by reconstruction") {
  const Network net = chain3();
  const VarId z = vid(net, "Z");
  SUBCASE("no evidence: downstream sums to one") {
    const JunctionTree t = propagated(net, Evidence{}, Mode::Larp);
    const FactorPtr d = d_separator(t, 0, t.host_of(z));
    REQUIRE(d->dom() == VarSet{vid(net, "Y")});
    check_close(d->values(), {1.0, 1.0}, 1e-15);
  }
  SUBCASE("evidence on the receiving side shows up") {
    const JunctionTree t =
        propagated(net, make_ev(net, {{"Z", "z1"}}), Mode::Larp);
    const FactorPtr d = d_separator(t, 0, t.host_of(z));
    check_close(d->values(), {0.4, 0.75}, 1e-15);
  }
  SUBCASE("a single-clique tree has no separators to ask about") {
    const JunctionTree t = propagated(toy1(), Evidence{}, Mode::Larp);
    CHECK_THROWS_AS(d_separator(t, 0, 0), QueryError);
  }
  SUBCASE("reconstruction: the derivative against the actual contraction") {
    RandomNetSpec spec;
    spec.vars = 10;
    for (std::uint64_t seed = 80; seed < 85; ++seed) {
      spec.seed = seed;
      const Network rnet = random_network(spec);
      const Evidence ev = random_evidence(rnet, 2, seed);
      for (Mode mode : {Mode::Larp, Mode::AllEvidence}) {
        const JunctionTree t = propagated(rnet, ev, mode);
        for (int s = 0; s < t.sep_count(); ++s) {
          for (int into : {t.sep(s).a, t.sep(s).b}) {
            const FactorPtr d = d_separator(t, s, into);
            const FactorPtr c = contract(t.message_into(into, s).factors);
            FactorPtr prod = multiply(d, c);
            double total = 0.0;
            for (double v : prod->values()) total += v;
            check_value(total, t.prob_evidence(),
                        1e-12 * std::max(1.0, t.prob_evidence()));
          }
        }
      }
    }
  }
}

TEST_CASE("message-factor derivatives") {
  SUBCASE("chain forward factor, pinned") {
    const Network net = chain3();
    const JunctionTree t = propagated(net, Evidence{}, Mode::Larp);
    const int cz = t.host_of(vid(net, "Z"));
    REQUIRE(t.message_into(cz, 0).factors.size() == 1u);
    const FactorPtr d = d_message_factor(t, 0, cz, 0);
    REQUIRE(d->dom() == VarSet{vid(net, "Y")});
    check_close(d->values(), {1.0, 1.0}, 1e-15);
  }
  SUBCASE("a pristine cpd in the mailbox differentiates like the cpd") {
    const Network net = fork3();
    const VarId y = vid(net, "Y");
    const Evidence ev = make_ev(net, {{"X", "x0"}});
    const JunctionTree t = propagated(net, ev, Mode::Larp);
    const int away = t.host_of(y) == t.sep(0).a ? t.sep(0).b : t.sep(0).a;
    const Message& m = t.message_into(away, 0);
    int idx = -1;
    for (std::size_t i = 0; i < m.factors.size(); ++i)
      if (m.factors[i] == net.cpd(y).factor) idx = static_cast<int>(i);
    REQUIRE(idx >= 0);
    const FactorPtr d = d_message_factor(t, 0, away, idx);
    check_close(d->values(), d_theta(t, y), 1e-12);
    check_value(orc::exact_partial(net, ev, {{orc::EntryRef::Theta, y, 0}}),
                d->values()[0], 1e-12);
  }
  SUBCASE("each deposited factor satisfies its own Euler identity") {
    RandomNetSpec spec;
    spec.vars = 10;
    for (std::uint64_t seed = 90; seed < 94; ++seed) {
      spec.seed = seed;
      const Network rnet = random_network(spec);
      const Evidence ev = random_evidence(rnet, 2, seed + 5);
      const JunctionTree t = propagated(rnet, ev, Mode::AllEvidence);
      for (int s = 0; s < t.sep_count(); ++s) {
        for (int into : {t.sep(s).a, t.sep(s).b}) {
          const Message& m = t.message_into(into, s);
          for (std::size_t i = 0; i < m.factors.size(); ++i) {
            const FactorPtr d = d_message_factor(t, s, into, i);
            REQUIRE(d->dom() == m.factors[i]->dom());
            double dot = 0.0;
            const FactorPtr prod = multiply(d, m.factors[i]);
            for (double v : prod->values()) dot += v;
            check_value(dot, t.prob_evidence(),
                        1e-12 * std::max(1.0, t.prob_evidence()));
          }
        }
      }
    }
  }
}

TEST_CASE("joint derivatives over several arguments") {
  const Network net = toy1();
  const VarId x = vid(net, "X");
  const VarId y = vid(net, "Y");
  const Evidence ev = make_ev(net, {{"Y", "y0"}});
  for (Mode mode : kModes) {
    const JunctionTree t = propagated(net, ev, mode);
    SUBCASE("prior and evidence function of the child") {
      const std::vector<MultiTarget> q = {{true, x}, {false, y}};
      check_multi_against_oracle(net, ev, d_multi(t, q), q, 1e-14);
    }
    SUBCASE("both cpds at once") {
      const std::vector<MultiTarget> q = {{true, x}, {true, y}};
      check_multi_against_oracle(net, ev, d_multi(t, q), q, 1e-14);
    }
    SUBCASE("single theta matches d_theta") {
      const FactorPtr d = d_multi(t, {{true, y}});
      const auto flat = d_theta(t, y);
      // d_theta uses the external layout; for one binary parent the axes
      // orders differ, so compare through the oracle instead.
      check_multi_against_oracle(net, ev, d, {{true, y}}, 1e-14);
      CHECK(flat.size() == d->size());
    }
  }
}

TEST_CASE("joint derivatives match the substitution oracle on random nets") {
  RandomNetSpec spec;
  spec.vars = 8;
  std::uint64_t mix = 12345;
  auto next = [&mix] {
    mix ^= mix << 13;
    mix ^= mix >> 7;
    mix ^= mix << 17;
    return mix;
  };
  for (std::uint64_t seed = 100; seed < 110; ++seed) {
    spec.seed = seed;
    const Network net = random_network(spec);
    const Evidence ev = random_evidence(net, 2, seed + 3);
    for (Mode mode : kModes) {
      const JunctionTree t = propagated(net, ev, mode);
      for (int rep = 0; rep < 3; ++rep) {
        std::vector<MultiTarget> q;
        VarSet used;
        const int want = 1 + static_cast<int>(next() % 3);
        while (static_cast<int>(q.size()) < want) {
          const VarId v = static_cast<VarId>(next() % net.size());
          if (vs_contains(used, v)) continue;
          vs_insert(used, v);
          q.push_back({next() % 2 == 0, v});
        }
        check_multi_against_oracle(net, ev, d_multi(t, q), q, 1e-10);
      }
    }
  }
}

TEST_CASE("fixed-clique evaluation is clique independent") {
  const Network net = fork3();
  const VarId y = vid(net, "Y");
  const Evidence ev = make_ev(net, {{"X", "x1"}});
  const JunctionTree t = propagated(net, ev, Mode::Larp);
  const std::vector<MultiTarget> q = {{true, y}};
  const FactorPtr a = d_multi_at(t, q, 0, nullptr, {});
  const FactorPtr b = d_multi_at(t, q, 1, nullptr, {});
  REQUIRE(a->dom() == b->dom());
  check_close(a->values(), b->values(), 1e-12);
  SUBCASE("asking a clique that never sees the variable fails") {
    const Network chain = chain3();
    const JunctionTree c =
        propagated(chain, make_ev(chain, {{"Y", "y0"}}), Mode::Larp);
    const int far = c.host_of(vid(chain, "Z"));
    CHECK_THROWS_AS(
        d_multi_at(c, {{false, vid(chain, "X")}}, far, nullptr, {}),
        QueryError);
  }
}

TEST_CASE("derivatives agree with the oracle entry by entry") {
  RandomNetSpec spec;
  spec.vars = 7;
  for (std::uint64_t seed = 120; seed < 126; ++seed) {
    spec.seed = seed;
    const Network net = random_network(spec);
    for (int nev : {0, 2}) {
      const Evidence ev = random_evidence(net, nev, seed + 9);
      for (Mode mode : kModes) {
        const JunctionTree t = propagated(net, ev, mode);
        for (VarId v = 0; v < net.size(); ++v) {
          const auto dth = d_theta(t, v);
          for_each_cpd_entry(net, v,
                             [&](int, const std::vector<int>&, std::size_t i) {
            const double want =
                orc::exact_partial(net, ev, {{orc::EntryRef::Theta, v, i}});
            check_value(dth[i], want, 1e-10);
          });
          const auto df = d_f(t, v);
          for (int s = 0; s < net.card(v); ++s) {
            const double want = orc::exact_partial(
                net, ev,
                {{orc::EntryRef::EvidenceFn, v, static_cast<std::size_t>(s)}});
            check_value(df[s], want, 1e-10);
          }
          if (ev.observed(v))
            check_value(retracted_evidence_prob(t, v),
                        orc::prob_evidence(net, ev.without(v)), 1e-10);
        }
      }
    }
  }
}

TEST_CASE("theta derivatives track finite differences") {
  RandomNetSpec spec;
  spec.vars = 6;
  for (std::uint64_t seed = 130; seed < 133; ++seed) {
    spec.seed = seed;
    const Network net = random_network(spec);
    const Evidence ev = random_evidence(net, 2, seed);
    const JunctionTree t = propagated(net, ev, Mode::Larp);
    for (VarId v = 0; v < net.size(); ++v) {
      const auto dth = d_theta(t, v);
      for (std::size_t i = 0; i < dth.size(); i += 3) {
        const double fd = orc::finite_diff(
            net, ev, {orc::EntryRef::Theta, v, i}, 1e-5);
        check_value(dth[i], fd, 1e-5 * std::max(1.0, std::fabs(fd)));
      }
    }
  }
}

TEST_CASE("parameter posteriors") {
  const Network net = toy1();
  const VarId x = vid(net, "X");
  const VarId y = vid(net, "Y");
  const Evidence ev = make_ev(net, {{"Y", "y0"}});
  const JunctionTree t = propagated(net, ev, Mode::Larp);
  check_close(parameter_posterior(t, x), {0.27 / 0.41, 0.14 / 0.41}, 1e-15);
  check_close(parameter_posterior(t, y),
              {0.27 / 0.41, 0.0, 0.14 / 0.41, 0.0}, 1e-15);
  SUBCASE("each table sums to one") {
    for (VarId v : {x, y}) {
      double s = 0.0;
      for (double p : parameter_posterior(t, v)) s += p;
      check_value(s, 1.0, 1e-12);
    }
  }
  SUBCASE("without evidence it is the family joint") {
    const JunctionTree e = propagated(net, Evidence{}, Mode::Larp);
    check_close(parameter_posterior(e, y), {0.27, 0.03, 0.14, 0.56}, 1e-15);
  }
}

TEST_CASE("derivative queries demand a propagated tree") {
  const Network net = toy1();
  JunctionTree t(net);
  t.initialize(Evidence{});
  CHECK_THROWS_AS(d_theta(t, 0), QueryError);
  CHECK_THROWS_AS(d_f(t, 0), QueryError);
  CHECK_THROWS_AS(d_multi(t, {{true, 0}}), QueryError);
  const JunctionTree p = propagated(net, Evidence{}, Mode::Larp);
  CHECK_THROWS_AS(d_theta(p, 9), QueryError);
  CHECK_THROWS_AS(d_f(p, -1), QueryError);
}

}  // TEST_SUITE
