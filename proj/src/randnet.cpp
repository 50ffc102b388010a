#include "larp/randnet.hpp"

#include <cmath>
#include <random>
#include <string>

#include "larp/errors.hpp"

namespace larp {

namespace {

// mt19937_64 output mapped to [0, 1) by hand so the stream is identical on
// every standard library.
double unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return lo + static_cast<int>(unit(rng) * (hi - lo + 1));
}

}  // namespace

Network random_network(const RandomNetSpec& spec) {
  if (spec.vars < 1 || spec.min_states < 2 || spec.max_states < spec.min_states)
    throw ValidationError("random network: bad shape parameters");
  std::mt19937_64 rng(spec.seed);

  std::vector<Variable> vars(spec.vars);
  for (int v = 0; v < spec.vars; ++v) {
    vars[v].id = v;
    vars[v].name = "X" + std::to_string(v);
    const int k = uniform_int(rng, spec.min_states, spec.max_states);
    for (int s = 0; s < k; ++s)
      vars[v].states.push_back("s" + std::to_string(s));
  }

  std::vector<Cpd> cpds(spec.vars);
  for (int v = 0; v < spec.vars; ++v) {
    cpds[v].child = v;
    for (int u = 0; u < v; ++u) {
      if (static_cast<int>(cpds[v].parents.size()) >= spec.max_parents) break;
      if (unit(rng) < spec.edge_prob) cpds[v].parents.push_back(u);
    }
    std::size_t rows = 1;
    for (VarId u : cpds[v].parents) rows *= vars[u].states.size();
    const std::size_t k = vars[v].states.size();
    cpds[v].table.resize(rows * k);
    for (std::size_t r = 0; r < rows; ++r) {
      double sum = 0.0;
      for (std::size_t s = 0; s < k; ++s) {
        const double g = -std::log(1.0 - unit(rng));
        cpds[v].table[r * k + s] = g;
        sum += g;
      }
      for (std::size_t s = 0; s < k; ++s) cpds[v].table[r * k + s] /= sum;
    }
  }
  return Network(std::move(vars), std::move(cpds));
}

Evidence random_evidence(const Network& net, int count, std::uint64_t seed) {
  if (count < 0 || count > net.size())
    throw ValidationError("random evidence: bad count");
  std::mt19937_64 rng(seed);
  std::vector<VarId> ids(net.size());
  for (int v = 0; v < net.size(); ++v) ids[v] = v;
  for (int i = net.size() - 1; i > 0; --i) {
    const int j = uniform_int(rng, 0, i);
    std::swap(ids[i], ids[j]);
  }
  Evidence ev;
  for (int i = 0; i < count; ++i)
    ev.set(ids[i], uniform_int(rng, 0, net.card(ids[i]) - 1));
  return ev;
}

}  // namespace larp
