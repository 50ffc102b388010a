#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "larp/factor.hpp"
#include "larp/model.hpp"

namespace larp {

// A directed mailbox content: the factors deposited on a separator for one
// direction. Factors all satisfy |head| <= 1.
struct Message {
  std::vector<FactorPtr> factors;
  bool computed = false;
};

struct Clique {
  int id = -1;
  VarSet vars;
  Potential potential;              // hosted cpds, fixed after build
  std::vector<FactorPtr> evidence;  // indicator slots, set by initialize
  std::vector<int> seps;            // adjacent separator ids
};

struct Separator {
  int id = -1;
  int a = -1, b = -1;  // clique ids
  VarSet vars;
  Message to_a, to_b;                // evidence mailboxes
  Message shadow_to_a, shadow_to_b;  // evidence-free mailboxes (cautious)
};

struct PropagationStats {
  std::uint64_t largest_potential_size = 0;
  std::uint64_t total_created_size = 0;
  double elapsed_seconds = 0.0;
};

enum class Mode { Larp, AllEvidence, Clarp };

// How one message gets computed. Plain propagation uses the bare modes;
// query-time recomputations add postponed findings and protected variables.
enum class MsgMode { Larp, AllEvidence, Cautious, NoEvidence };

struct MsgOptions {
  MsgMode mode = MsgMode::AllEvidence;
  VarSet postpone;  // findings left uninstantiated throughout
  VarSet protect;   // variables never eliminated (variable propagation)
  bool use_shadow = false;
};

// Scratch overrides of incoming messages, keyed by (separator, into-clique).
// Query-time recomputation never touches the real mailboxes.
struct ScratchMessages {
  std::map<std::pair<int, int>, Message> into;

  const Message* find(int sep, int clique) const {
    auto it = into.find({sep, clique});
    return it == into.end() ? nullptr : &it->second;
  }
};

struct Triangulation {
  std::vector<VarId> order;
  std::vector<std::pair<VarId, VarId>> fill;
  std::vector<VarSet> cliques;  // maximal, in discovery order
};

// Moral graph adjacency: one sorted neighbor set per variable.
std::vector<VarSet> moralize(const Network& net);

// Min-fill elimination; ties by smaller resulting clique state space, then
// by variable id.
Triangulation triangulate(const Network& net, const std::vector<VarSet>& adj);

class JunctionTree {
 public:
  explicit JunctionTree(const Network& net, int root_override = -1);

  const Network& net() const { return *net_; }
  int clique_count() const { return static_cast<int>(cliques_.size()); }
  int sep_count() const { return static_cast<int>(seps_.size()); }
  const Clique& clique(int i) const { return cliques_.at(i); }
  const Separator& sep(int i) const { return seps_.at(i); }
  int root() const { return root_; }
  int host_of(VarId x) const { return host_.at(x); }
  const std::vector<int>& cliques_containing(VarId x) const {
    return containing_.at(x);
  }
  // -1 when the cliques are not adjacent.
  int sep_between(int a, int b) const;
  int neighbor_via(int clique, int sep) const;

  std::uint64_t state_space(int clique) const;

  void initialize(const Evidence& ev);
  const Evidence& evidence() const { return ev_; }
  bool initialized() const { return initialized_; }

  // Fills the mailboxes by a full collect/distribute flow, computes every
  // clique's posterior table, and checks that all cliques agree on P(ev).
  const PropagationStats& propagate(Mode mode);
  // Clarp: evidence-free pass into the shadow mailboxes first, then the
  // cautious pass that keeps separator findings uninstantiated.
  const PropagationStats& cautious_propagate();

  bool propagated() const { return propagated_; }
  Mode mode() const { return mode_; }
  const PropagationStats& stats() const { return stats_; }

  // P(A, ev) as a table over the unobserved members of A.
  const Factor& posterior_clique(int clique) const;
  double prob_evidence() const;
  // Posterior distribution of x. Observed variables return their indicator.
  std::vector<double> marginal(VarId x) const;

  // pi_A u evidence slots u incoming messages, with scratch overrides.
  std::vector<FactorPtr> posterior_pool(
      int clique, const ScratchMessages* scratch = nullptr) const;

  const Message& message_into(int clique, int sep, bool shadow = false) const;

  // One directed message from the clique across the separator, computed from
  // the current mailboxes (with scratch overrides) but writing nothing back.
  Message compute_message(int from, int sep_id, const MsgOptions& opt,
                          const ScratchMessages* scratch,
                          SizeLedger* ledger) const;

  // Scratch recomputation of the message into `clique` across `sep_id`,
  // recursing into any upstream message that folded in a postponed finding.
  // Results for upstream edges land in `scratch`; the computed message is
  // returned for the caller to place.
  Message recompute_into(int clique, int sep_id, const MsgOptions& opt,
                         ScratchMessages& scratch, SizeLedger* ledger) const;

  // Options for query-time recomputation on this tree: the message mode that
  // matches how it was propagated, plus the given sets.
  MsgOptions query_options(VarSet postpone = {}, VarSet protect = {}) const {
    MsgOptions o;
    o.mode = mode_ == Mode::Clarp ? MsgMode::Cautious : MsgMode::AllEvidence;
    o.postpone = std::move(postpone);
    o.protect = std::move(protect);
    return o;
  }

 private:
  Message& mailbox(int sep, int into_clique, bool shadow);
  void run_flows(MsgMode mode, bool shadow, SizeLedger* ledger);
  void finish_propagation(Mode mode, SizeLedger* ledger);

  const Network* net_;
  std::vector<Clique> cliques_;
  std::vector<Separator> seps_;
  int root_ = 0;
  std::vector<int> host_;
  std::vector<std::vector<int>> containing_;

  Evidence ev_;
  bool initialized_ = false;
  bool propagated_ = false;
  Mode mode_ = Mode::Larp;
  PropagationStats stats_;
  std::vector<Factor> posterior_;
  double p_ev_ = 0.0;
};

}  // namespace larp
