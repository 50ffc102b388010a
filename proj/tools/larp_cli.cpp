#include <algorithm>
#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "larp/cautious.hpp"
#include "larp/derivatives.hpp"
#include "larp/errors.hpp"
#include "larp/jointree.hpp"
#include "larp/model.hpp"
#include "larp/randnet.hpp"
#include "larp/varprop.hpp"

namespace {

using nlohmann::json;

void emit(const std::string& key, const json& value) {
  std::cout << key << '\t' << value.dump() << '\n';
}

larp::VarId need_var(const larp::Network& net, const std::string& name) {
  const larp::VarId v = net.find(name);
  if (v < 0) throw larp::QueryError("unknown variable name: " + name);
  return v;
}

std::vector<std::string> split(const std::string& s, char by) {
  std::vector<std::string> parts;
  std::size_t from = 0;
  while (true) {
    const std::size_t at = s.find(by, from);
    parts.push_back(s.substr(from, at - from));
    if (at == std::string::npos) return parts;
    from = at + 1;
  }
}

struct QueryFlags {
  std::string net_file, ev_file;
  std::string mode = "larp";
  int root = -1;
  bool prob_evidence = false;
  std::vector<std::string> marginals, joints, d_thetas, d_fs, d_separators,
      d_multis, retract;
};

larp::Mode parse_mode(const std::string& s) {
  if (s == "larp") return larp::Mode::Larp;
  if (s == "all-evidence") return larp::Mode::AllEvidence;
  if (s == "clarp") return larp::Mode::Clarp;
  throw CLI::ValidationError("--mode", "expected larp|all-evidence|clarp");
}

int run_compile(const std::string& net_file, int root) {
  const larp::Network net = larp::load_network(net_file);
  const larp::JunctionTree t(net, root);
  std::uint64_t largest = 0, total = 0;
  for (int c = 0; c < t.clique_count(); ++c) {
    const std::uint64_t s = t.state_space(c);
    largest = std::max(largest, s);
    total += s;
  }
  emit("variables", net.size());
  emit("cliques", t.clique_count());
  emit("max-state-space", largest);
  emit("total-state-space", total);
  for (int c = 0; c < t.clique_count(); ++c) {
    json names = json::array();
    for (larp::VarId v : t.clique(c).vars) names.push_back(net.var(v).name);
    emit("clique[" + std::to_string(c) + "]", names);
  }
  return 0;
}

// Retraction queries evaluate at the root clique; the retraction set must be
// a union of groups retractable there.
int run_retract(const larp::JunctionTree& t, const QueryFlags& q) {
  const larp::Network& net = t.net();
  larp::VarSet r;
  for (const std::string& spec : q.retract)
    for (const std::string& name : split(spec, ','))
      larp::vs_insert(r, need_var(net, name));
  if (q.prob_evidence) emit("P(e')", larp::retracted_prob(t, t.root(), r));
  for (const std::string& name : q.d_thetas) {
    const larp::VarId x = need_var(net, name);
    const larp::FactorPtr d =
        larp::retracted_derivative(t, t.root(), r, {{true, x}});
    emit("dP(e')/dtheta(" + name + ")", d->values());
  }
  return 0;
}

int run_query(const QueryFlags& q) {
  const larp::Network net = larp::load_network(q.net_file);
  const larp::Evidence ev = q.ev_file.empty()
                                ? larp::Evidence{}
                                : larp::load_evidence(net, q.ev_file);
  const larp::Mode mode = parse_mode(q.mode);
  if (!q.retract.empty()) {
    if (mode != larp::Mode::Clarp) {
      std::cerr << "larp_cli: --retract needs --mode clarp\n";
      return 1;
    }
    if (!q.marginals.empty() || !q.joints.empty() || !q.d_fs.empty() ||
        !q.d_separators.empty() || !q.d_multis.empty()) {
      std::cerr << "larp_cli: --retract combines only with --prob-evidence "
                   "and --d-theta\n";
      return 1;
    }
  }

  larp::JunctionTree t(net, q.root);
  t.initialize(ev);
  t.propagate(mode);

  if (!q.retract.empty()) return run_retract(t, q);

  if (q.prob_evidence) emit("P(e)", t.prob_evidence());
  for (const std::string& name : q.marginals)
    emit("P(" + name + "|e)", t.marginal(need_var(net, name)));
  for (const std::string& spec : q.joints) {
    larp::VarSet w;
    for (const std::string& name : split(spec, ','))
      larp::vs_insert(w, need_var(net, name));
    const larp::FactorPtr f = larp::joint_over(t, w);
    std::string key = "P(";
    for (larp::VarId v : f->axes()) key += net.var(v).name + ",";
    emit(key + "e)", f->values());
  }
  for (const std::string& name : q.d_thetas)
    emit("dP/dtheta(" + name + ")", larp::d_theta(t, need_var(net, name)));
  for (const std::string& name : q.d_fs)
    emit("dP/df(" + name + ")", larp::d_f(t, need_var(net, name)));
  for (const std::string& spec : q.d_separators) {
    const auto parts = split(spec, ':');
    if (parts.size() != 2)
      throw larp::QueryError("expected --d-separator <cliqueA>:<cliqueB>");
    const int a = std::stoi(parts[0]), b = std::stoi(parts[1]);
    const larp::FactorPtr d = larp::d_separator(t, t.sep_between(a, b), a);
    emit("dP/dsep(" + spec + ")", d->values());
  }
  for (const std::string& spec : q.d_multis) {
    const std::size_t colon = spec.find(':');
    if (colon == std::string::npos)
      throw larp::QueryError("expected --d-multi <clique>:<target,...>");
    const std::string where = spec.substr(0, colon);
    std::vector<larp::MultiTarget> targets;
    for (const std::string& tok : split(spec.substr(colon + 1), ',')) {
      if (tok.rfind("theta:", 0) == 0)
        targets.push_back({true, need_var(net, tok.substr(6))});
      else if (tok.rfind("f:", 0) == 0)
        targets.push_back({false, need_var(net, tok.substr(2))});
      else
        targets.push_back({true, need_var(net, tok)});
    }
    const larp::FactorPtr d =
        where == "auto"
            ? larp::d_multi(t, targets)
            : larp::d_multi_at(t, targets, std::stoi(where), nullptr, {});
    emit("dP/dmulti(" + spec + ")", d->values());
  }
  return 0;
}

struct BenchFlags {
  int vars = 20;
  int max_parents = 3;
  int max_card = 3;
  double edge_prob = 0.35;
  std::uint64_t seed = 1;
  int sets = 25;
  int max_evidence = 15;
};

int run_bench(const BenchFlags& b) {
  larp::RandomNetSpec spec;
  spec.vars = b.vars;
  spec.max_parents = b.max_parents;
  spec.max_states = b.max_card;
  spec.edge_prob = b.edge_prob;
  spec.seed = b.seed;
  const larp::Network net = larp::random_network(spec);
  larp::JunctionTree t(net);

  const std::vector<std::pair<std::string, larp::Mode>> modes = {
      {"larp", larp::Mode::Larp},
      {"all-evidence", larp::Mode::AllEvidence},
      {"clarp", larp::Mode::Clarp}};
  for (int n = 0; n <= std::min(b.max_evidence, net.size()); ++n) {
    json row;
    for (const auto& [name, mode] : modes) {
      double size_sum = 0.0, time_sum = 0.0;
      for (int k = 0; k < b.sets; ++k) {
        const std::uint64_t es = b.seed * 1000003ULL +
                                 static_cast<std::uint64_t>(n) * 1009ULL +
                                 static_cast<std::uint64_t>(k);
        t.initialize(larp::random_evidence(net, n, es));
        const larp::PropagationStats& st = t.propagate(mode);
        size_sum += static_cast<double>(st.largest_potential_size);
        time_sum += st.elapsed_seconds;
      }
      row[name] = {{"avg-largest", size_sum / b.sets},
                   {"avg-seconds", time_sum / b.sets}};
    }
    emit("bench[n=" + std::to_string(n) + "]", row);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Junction-tree inference with lazy arc-reversal propagation"};
  app.require_subcommand(1);

  std::string compile_net;
  int compile_root = -1;
  CLI::App* compile = app.add_subcommand("compile", "Report compilation stats");
  compile->add_option("net", compile_net, "network file")->required();
  compile->add_option("--root", compile_root, "root clique id");

  QueryFlags q;
  CLI::App* query = app.add_subcommand("query", "Run inference queries");
  query->add_option("net", q.net_file, "network file")->required();
  query->add_option("evidence", q.ev_file, "evidence file");
  query->add_option("--mode", q.mode, "larp|all-evidence|clarp");
  query->add_option("--root", q.root, "root clique id");
  query->add_flag("--prob-evidence", q.prob_evidence, "print P(e)");
  query->add_option("--marginal", q.marginals, "posterior of a variable");
  query->add_option("--joint", q.joints, "joint over v1,v2,...");
  query->add_option("--d-theta", q.d_thetas, "dP(e)/d cpd entries");
  query->add_option("--d-f", q.d_fs, "dP(e)/d evidence function");
  query->add_option("--d-separator", q.d_separators,
                    "dP(e)/d message contraction, receiving:sending clique");
  query->add_option("--d-multi", q.d_multis,
                    "mixed partial at <clique|auto>:<theta:X|f:X,...>");
  query->add_option("--retract", q.retract,
                    "evaluate with findings on v1,v2,... withdrawn (clarp)");

  BenchFlags b;
  CLI::App* bench = app.add_subcommand("bench", "Random-network benchmark");
  bench->add_option("--vars", b.vars, "variable count");
  bench->add_option("--max-parents", b.max_parents, "parent cap");
  bench->add_option("--max-card", b.max_card, "largest cardinality");
  bench->add_option("--edge-prob", b.edge_prob, "arc acceptance probability");
  bench->add_option("--seed", b.seed, "generator seed");
  bench->add_option("--sets", b.sets, "evidence sets per size");
  bench->add_option("--max-evidence", b.max_evidence, "largest evidence size");

  try {
    app.parse(argc, argv);
    if (compile->parsed()) return run_compile(compile_net, compile_root);
    if (query->parsed()) return run_query(q);
    return run_bench(b);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  } catch (const larp::NumericalError& e) {
    std::cerr << "larp_cli: " << e.what() << '\n';
    return 3;
  } catch (const larp::Error& e) {
    std::cerr << "larp_cli: " << e.what() << '\n';
    return 2;
  }
}
