#pragma once

#include <map>
#include <string>
#include <vector>

#include "larp/factor.hpp"
#include "larp/varset.hpp"

namespace larp {

struct Variable {
  VarId id = -1;
  std::string name;
  std::vector<std::string> states;

  int card() const { return static_cast<int>(states.size()); }
};

struct Cpd {
  VarId child = -1;
  std::vector<VarId> parents;  // file order, drives the external table layout
  std::vector<double> table;   // external order: parent configs row-major
                               // (leftmost parent slowest), child innermost
  FactorPtr factor;            // same numbers in engine axis order
};

// A discrete Bayesian network over variables 0..n-1 (ids are file order).
class Network {
 public:
  Network(std::vector<Variable> vars, std::vector<Cpd> cpds);

  int size() const { return static_cast<int>(vars_.size()); }
  const Variable& var(VarId v) const { return vars_.at(v); }
  const std::vector<Variable>& vars() const { return vars_; }
  const Cpd& cpd(VarId v) const { return cpds_.at(v); }
  const std::vector<Cpd>& cpds() const { return cpds_; }
  int card(VarId v) const { return vars_.at(v).card(); }
  const std::vector<VarId>& children(VarId v) const { return children_.at(v); }
  // Family: {v} u parents(v), sorted.
  VarSet family(VarId v) const;
  // -1 when no variable carries the name.
  VarId find(const std::string& name) const;

 private:
  std::vector<Variable> vars_;
  std::vector<Cpd> cpds_;
  std::map<std::string, VarId> by_name_;
  std::vector<std::vector<VarId>> children_;
};

// Hard findings, one state per observed variable.
class Evidence {
 public:
  Evidence() = default;

  void set(VarId v, int state);
  bool observed(VarId v) const { return findings_.count(v) != 0; }
  int state_of(VarId v) const;
  const std::map<VarId, int>& findings() const { return findings_; }
  VarSet observed_set() const;
  std::size_t size() const { return findings_.size(); }
  bool empty() const { return findings_.empty(); }

  // Copy without the finding on v (v must be observed).
  Evidence without(VarId v) const;

 private:
  std::map<VarId, int> findings_;
};

// 0/1 table over {x} with no head variable: the evidence function of a hard
// finding. Every call builds a fresh object so clique slots stay distinct.
FactorPtr evidence_indicator(const Network& net, VarId x, int state);

Network parse_network(const std::string& text);
std::string serialize_network(const Network& net);
Evidence parse_evidence(const Network& net, const std::string& text);

Network load_network(const std::string& path);
Evidence load_evidence(const Network& net, const std::string& path);

}  // namespace larp
