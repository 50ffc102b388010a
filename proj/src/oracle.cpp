#include "larp/oracle.hpp"

#include <cstdint>

namespace larp::oracle {

namespace {

constexpr std::uint64_t kMaxJointCells = std::uint64_t{1} << 24;

std::uint64_t joint_cells(const Network& net) {
  std::uint64_t n = 1;
  for (const auto& v : net.vars()) {
    n *= static_cast<std::uint64_t>(v.card());
    if (n > kMaxJointCells)
      throw ValidationError("oracle: joint state space exceeds 2^24 cells");
  }
  return n;
}

// Weight of one configuration: product of cpd entries and evidence-function
// values, with overrides applied entry-wise.
double config_weight(const Network& net, const Evidence& ev,
                     const std::vector<std::pair<EntryRef, double>>& overrides,
                     const std::vector<int>& config) {
  double w = 1.0;
  for (const auto& c : net.cpds()) {
    std::size_t idx = 0;
    for (VarId p : c.parents)
      idx = idx * static_cast<std::size_t>(net.card(p)) +
            static_cast<std::size_t>(config[p]);
    idx = idx * static_cast<std::size_t>(net.card(c.child)) +
          static_cast<std::size_t>(config[c.child]);
    double theta = c.table[idx];
    for (const auto& [ref, val] : overrides)
      if (ref.kind == EntryRef::Theta && ref.var == c.child &&
          ref.index == idx)
        theta = val;
    w *= theta;
  }
  for (const auto& v : net.vars()) {
    double f;
    if (ev.observed(v.id))
      f = (config[v.id] == ev.state_of(v.id)) ? 1.0 : 0.0;
    else
      f = 1.0;
    for (const auto& [ref, val] : overrides)
      if (ref.kind == EntryRef::EvidenceFn && ref.var == v.id &&
          ref.index == static_cast<std::size_t>(config[v.id]))
        f = val;
    w *= f;
  }
  return w;
}

bool next_config(const Network& net, std::vector<int>& config) {
  for (int v = net.size() - 1; v >= 0; --v) {
    if (++config[v] < net.card(v)) return true;
    config[v] = 0;
  }
  return false;
}

}  // namespace

std::vector<double> enum_joint(const Network& net, const Evidence& ev) {
  std::uint64_t n = joint_cells(net);
  std::vector<double> joint(static_cast<std::size_t>(n));
  std::vector<int> config(net.size(), 0);
  std::size_t i = 0;
  do {
    joint[i++] = config_weight(net, ev, {}, config);
  } while (next_config(net, config));
  return joint;
}

double prob_evidence(const Network& net, const Evidence& ev) {
  return eval_with(net, ev, {});
}

std::vector<double> joint_over(const Network& net, const Evidence& ev,
                               const VarSet& w) {
  joint_cells(net);
  std::size_t n = 1;
  for (VarId v : w) n *= static_cast<std::size_t>(net.card(v));
  std::vector<double> out(n, 0.0);
  std::vector<int> config(net.size(), 0);
  do {
    std::size_t idx = 0;
    for (VarId v : w)
      idx = idx * static_cast<std::size_t>(net.card(v)) +
            static_cast<std::size_t>(config[v]);
    out[idx] += config_weight(net, ev, {}, config);
  } while (next_config(net, config));
  return out;
}

std::size_t cpd_index(const Network& net, VarId child, int child_state,
                      const std::vector<int>& parent_states) {
  const Cpd& c = net.cpd(child);
  if (parent_states.size() != c.parents.size())
    throw QueryError("oracle: parent state count mismatch");
  std::size_t idx = 0;
  for (std::size_t k = 0; k < c.parents.size(); ++k)
    idx = idx * static_cast<std::size_t>(net.card(c.parents[k])) +
          static_cast<std::size_t>(parent_states[k]);
  return idx * static_cast<std::size_t>(net.card(child)) +
         static_cast<std::size_t>(child_state);
}

double eval_with(const Network& net, const Evidence& ev,
                 const std::vector<std::pair<EntryRef, double>>& overrides) {
  joint_cells(net);
  double total = 0.0;
  std::vector<int> config(net.size(), 0);
  do {
    total += config_weight(net, ev, overrides, config);
  } while (next_config(net, config));
  return total;
}

double exact_partial(const Network& net, const Evidence& ev,
                     const std::vector<EntryRef>& entries) {
  if (entries.empty()) return prob_evidence(net, ev);
  for (std::size_t i = 0; i < entries.size(); ++i)
    for (std::size_t j = i + 1; j < entries.size(); ++j)
      if (entries[i] == entries[j])
        throw ValidationError("oracle: repeated entry in mixed partial");

  // P is multilinear in the entries, so the mixed partial is the alternating
  // sum of P over all 0/1 substitutions.
  double acc = 0.0;
  std::size_t m = entries.size();
  for (std::size_t mask = 0; mask < (std::size_t{1} << m); ++mask) {
    std::vector<std::pair<EntryRef, double>> ov;
    int ones = 0;
    for (std::size_t k = 0; k < m; ++k) {
      bool one = (mask >> k) & 1;
      ones += one;
      ov.emplace_back(entries[k], one ? 1.0 : 0.0);
    }
    double sign = ((m - ones) % 2 == 0) ? 1.0 : -1.0;
    acc += sign * eval_with(net, ev, ov);
  }
  return acc;
}

double finite_diff(const Network& net, const Evidence& ev,
                   const EntryRef& entry, double h) {
  double cur;
  if (entry.kind == EntryRef::Theta) {
    cur = net.cpd(entry.var).table.at(entry.index);
  } else {
    if (ev.observed(entry.var))
      cur = (static_cast<std::size_t>(ev.state_of(entry.var)) == entry.index)
                ? 1.0
                : 0.0;
    else
      cur = 1.0;
  }
  double hi = eval_with(net, ev, {{entry, cur + h}});
  double lo = eval_with(net, ev, {{entry, cur - h}});
  return (hi - lo) / (2.0 * h);
}

}  // namespace larp::oracle
