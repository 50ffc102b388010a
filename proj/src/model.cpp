#include "larp/model.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace larp {

using nlohmann::json;

namespace {

// External CPT layout: axes [p1, ..., pk, child] with p1 slowest and the
// child innermost. The engine factor wants [child, sorted parents] row-major,
// so reindex on construction.
FactorPtr cpd_factor(const Variable& child, const std::vector<VarId>& parents,
                     const std::vector<int>& parent_cards,
                     const std::vector<double>& table) {
  VarSet head{child.id};
  VarSet tail = vs_sorted(parents);
  std::vector<VarId> axes = head;
  axes.insert(axes.end(), tail.begin(), tail.end());
  std::vector<int> cards(axes.size());
  cards[0] = child.card();
  for (std::size_t k = 1; k < axes.size(); ++k) {
    for (std::size_t i = 0; i < parents.size(); ++i)
      if (parents[i] == axes[k]) cards[k] = parent_cards[i];
  }

  // External stride per internal axis.
  std::vector<std::size_t> ext(axes.size(), 1);  // child stride = 1
  for (std::size_t k = 1; k < axes.size(); ++k) {
    std::size_t s = child.card();
    bool found = false;
    for (int i = static_cast<int>(parents.size()) - 1; i >= 0; --i) {
      if (parents[i] == axes[k]) {
        ext[k] = s;
        found = true;
        break;
      }
      s *= static_cast<std::size_t>(parent_cards[i]);
    }
    if (!found) throw ValidationError("cpd: internal parent mismatch");
  }

  std::size_t n = table.size();
  std::vector<double> vals(n);
  std::vector<int> digit(axes.size(), 0);
  std::size_t ie = 0;
  for (std::size_t i = 0; i < n; ++i) {
    vals[i] = table[ie];
    for (int k = static_cast<int>(axes.size()) - 1; k >= 0; --k) {
      ++digit[k];
      ie += ext[k];
      if (digit[k] < cards[k]) break;
      ie -= ext[k] * static_cast<std::size_t>(cards[k]);
      digit[k] = 0;
    }
  }

  auto f = std::make_shared<Factor>(std::move(head), std::move(tail),
                                    std::move(cards), std::move(vals));
  f->origin = FactorOrigin::Cpd;
  f->origin_var = child.id;
  f->cpd_sources = VarSet{child.id};
  return f;
}

json parse_json(const std::string& text, std::size_t* key_events = nullptr) {
  try {
    if (key_events) {
      *key_events = 0;
      auto cb = [&](int, json::parse_event_t event, json&) {
        if (event == json::parse_event_t::key) ++*key_events;
        return true;
      };
      return json::parse(text, cb);
    }
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what());
  }
}

}  // namespace

Network::Network(std::vector<Variable> vars, std::vector<Cpd> cpds)
    : vars_(std::move(vars)), cpds_(std::move(cpds)) {
  children_.assign(vars_.size(), {});
  for (const auto& v : vars_) {
    if (by_name_.count(v.name))
      throw ValidationError("duplicate variable name: " + v.name);
    by_name_[v.name] = v.id;
  }
  if (cpds_.size() != vars_.size())
    throw ValidationError("network: exactly one cpd per variable required");
  for (std::size_t v = 0; v < cpds_.size(); ++v)
    if (cpds_[v].child != static_cast<VarId>(v))
      throw ValidationError("network: cpds must be indexed by child id");
  for (const auto& c : cpds_)
    for (VarId p : c.parents) {
      if (p < 0 || p >= static_cast<VarId>(vars_.size()) || p == c.child)
        throw ValidationError("network: bad parent id in cpd of " +
                              vars_[c.child].name);
      children_[p].push_back(c.child);
    }

  // Acyclicity by Kahn's algorithm.
  std::vector<int> indegree(vars_.size(), 0);
  for (const auto& c : cpds_)
    indegree[c.child] = static_cast<int>(c.parents.size());
  std::vector<VarId> queue;
  for (std::size_t v = 0; v < vars_.size(); ++v)
    if (indegree[v] == 0) queue.push_back(static_cast<VarId>(v));
  std::size_t seen = 0;
  while (!queue.empty()) {
    VarId v = queue.back();
    queue.pop_back();
    ++seen;
    for (VarId c : children_[v])
      if (--indegree[c] == 0) queue.push_back(c);
  }
  if (seen != vars_.size())
    throw ValidationError("network: parent structure is cyclic");

  for (auto& c : cpds_) {
    const std::string& cname = vars_[c.child].name;
    std::vector<int> pcards;
    std::size_t rows = 1;
    for (VarId p : c.parents) {
      pcards.push_back(vars_[p].card());
      rows *= static_cast<std::size_t>(vars_[p].card());
    }
    std::size_t ccard = static_cast<std::size_t>(vars_[c.child].card());
    if (c.table.size() != rows * ccard)
      throw ValidationError("network: cpd table size mismatch for " + cname);
    for (double x : c.table)
      if (!(x >= 0.0) || !std::isfinite(x))
        throw ValidationError("network: cpd entries must be finite and >= 0");
    for (std::size_t r = 0; r < rows; ++r) {
      double s = 0;
      for (std::size_t k = 0; k < ccard; ++k) s += c.table[r * ccard + k];
      if (std::fabs(s - 1.0) > 1e-9)
        throw ValidationError("network: cpd row does not sum to 1 in " + cname);
    }
    c.factor = cpd_factor(vars_[c.child], c.parents, pcards, c.table);
  }
}

VarSet Network::family(VarId v) const {
  VarSet f = vs_sorted(cpds_.at(v).parents);
  vs_insert(f, v);
  return f;
}

VarId Network::find(const std::string& name) const {
  auto it = by_name_.find(name);
  return it == by_name_.end() ? -1 : it->second;
}

void Evidence::set(VarId v, int state) {
  if (findings_.count(v))
    throw ValidationError("evidence: duplicate finding for a variable");
  findings_[v] = state;
}

int Evidence::state_of(VarId v) const {
  auto it = findings_.find(v);
  if (it == findings_.end())
    throw QueryError("evidence: variable is not observed");
  return it->second;
}

VarSet Evidence::observed_set() const {
  VarSet s;
  s.reserve(findings_.size());
  for (const auto& [v, st] : findings_) s.push_back(v);
  return s;
}

Evidence Evidence::without(VarId v) const {
  if (!observed(v)) throw QueryError("evidence: variable is not observed");
  Evidence e = *this;
  e.findings_.erase(v);
  return e;
}

FactorPtr evidence_indicator(const Network& net, VarId x, int state) {
  int c = net.card(x);
  if (state < 0 || state >= c)
    throw ValidationError("evidence: state out of range");
  std::vector<double> vals(c, 0.0);
  vals[state] = 1.0;
  auto f = std::make_shared<Factor>(VarSet{}, VarSet{x}, std::vector<int>{c},
                                    std::move(vals));
  f->origin = FactorOrigin::Evidence;
  f->origin_var = x;
  return f;
}

Network parse_network(const std::string& text) {
  json j = parse_json(text);
  if (!j.is_object() || !j.contains("variables") || !j.contains("cpds"))
    throw ParseError("network: expected object with variables and cpds");

  std::vector<Variable> vars;
  for (const auto& jv : j.at("variables")) {
    if (!jv.is_object() || !jv.contains("name") || !jv.contains("states"))
      throw ParseError("network: variable needs name and states");
    Variable v;
    v.id = static_cast<VarId>(vars.size());
    v.name = jv.at("name").get<std::string>();
    for (const auto& s : jv.at("states")) {
      if (!s.is_string()) throw ParseError("network: state labels are strings");
      v.states.push_back(s.get<std::string>());
    }
    if (v.states.empty())
      throw ValidationError("network: variable with no states: " + v.name);
    std::set<std::string> uniq(v.states.begin(), v.states.end());
    if (uniq.size() != v.states.size())
      throw ValidationError("network: duplicate state label in " + v.name);
    vars.push_back(std::move(v));
  }

  std::map<std::string, VarId> by_name;
  for (const auto& v : vars) {
    if (by_name.count(v.name))
      throw ValidationError("network: duplicate variable name " + v.name);
    by_name[v.name] = v.id;
  }

  std::vector<Cpd> cpds(vars.size());
  std::vector<bool> have(vars.size(), false);
  for (const auto& jc : j.at("cpds")) {
    if (!jc.is_object() || !jc.contains("child") || !jc.contains("table"))
      throw ParseError("network: cpd needs child and table");
    std::string cname = jc.at("child").get<std::string>();
    auto it = by_name.find(cname);
    if (it == by_name.end())
      throw ValidationError("network: cpd for unknown variable " + cname);
    VarId child = it->second;
    if (have[child])
      throw ValidationError("network: two cpds for variable " + cname);
    have[child] = true;

    Cpd c;
    c.child = child;
    std::set<VarId> pset;
    if (jc.contains("parents")) {
      for (const auto& jp : jc.at("parents")) {
        auto pit = by_name.find(jp.get<std::string>());
        if (pit == by_name.end())
          throw ValidationError("network: unknown parent in cpd of " + cname);
        if (pit->second == child)
          throw ValidationError("network: variable is its own parent: " + cname);
        if (!pset.insert(pit->second).second)
          throw ValidationError("network: duplicate parent in cpd of " + cname);
        c.parents.push_back(pit->second);
      }
    }
    c.table = jc.at("table").get<std::vector<double>>();
    cpds[child] = std::move(c);
  }
  for (std::size_t v = 0; v < vars.size(); ++v)
    if (!have[v])
      throw ValidationError("network: missing cpd for " + vars[v].name);

  return Network(std::move(vars), std::move(cpds));
}

std::string serialize_network(const Network& net) {
  json j;
  j["variables"] = json::array();
  for (const auto& v : net.vars()) {
    json jv;
    jv["name"] = v.name;
    jv["states"] = v.states;
    j["variables"].push_back(jv);
  }
  j["cpds"] = json::array();
  for (const auto& c : net.cpds()) {
    json jc;
    jc["child"] = net.var(c.child).name;
    jc["parents"] = json::array();
    for (VarId p : c.parents) jc["parents"].push_back(net.var(p).name);
    jc["table"] = c.table;
    j["cpds"].push_back(jc);
  }
  return j.dump(2);
}

Evidence parse_evidence(const Network& net, const std::string& text) {
  std::size_t keys = 0;
  json j = parse_json(text, &keys);
  if (!j.is_object()) throw ParseError("evidence: expected a JSON object");
  if (keys != j.size())
    throw ValidationError("evidence: duplicate finding for a variable");

  Evidence e;
  for (const auto& [name, val] : j.items()) {
    VarId v = net.find(name);
    if (v < 0) throw ValidationError("evidence: unknown variable " + name);
    if (!val.is_string())
      throw ValidationError(
          "evidence: finding for " + name +
          " must name a state (soft evidence is not supported)");
    std::string state = val.get<std::string>();
    const auto& states = net.var(v).states;
    int idx = -1;
    for (std::size_t k = 0; k < states.size(); ++k)
      if (states[k] == state) idx = static_cast<int>(k);
    if (idx < 0)
      throw ValidationError("evidence: unknown state " + state + " of " + name);
    e.set(v, idx);
  }
  return e;
}

namespace {
std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}
}  // namespace

Network load_network(const std::string& path) {
  return parse_network(read_file(path));
}

Evidence load_evidence(const Network& net, const std::string& path) {
  return parse_evidence(net, read_file(path));
}

}  // namespace larp
