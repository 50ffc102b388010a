#pragma once

#include <cmath>
#include <initializer_list>
#include <string>
#include <utility>
#include <vector>

#include "doctest.h"
#include "larp/model.hpp"

namespace testing {

using namespace larp;

// Two binary variables, X -> Y. P(e) = 0.41 under Y=y0; most pinned numbers
// in the suites come from this net.
inline Network toy1() {
  return parse_network(R"({
    "variables": [
      {"name": "X", "states": ["x0", "x1"]},
      {"name": "Y", "states": ["y0", "y1"]}
    ],
    "cpds": [
      {"child": "X", "parents": [], "table": [0.3, 0.7]},
      {"child": "Y", "parents": ["X"], "table": [0.9, 0.1, 0.2, 0.8]}
    ]
  })");
}

// toy1 extended by Y -> Z: two cliques {X,Y}, {Y,Z} over separator {Y}.
inline Network chain3() {
  return parse_network(R"({
    "variables": [
      {"name": "X", "states": ["x0", "x1"]},
      {"name": "Y", "states": ["y0", "y1"]},
      {"name": "Z", "states": ["z0", "z1"]}
    ],
    "cpds": [
      {"child": "X", "parents": [], "table": [0.3, 0.7]},
      {"child": "Y", "parents": ["X"], "table": [0.9, 0.1, 0.2, 0.8]},
      {"child": "Z", "parents": ["Y"], "table": [0.6, 0.4, 0.25, 0.75]}
    ]
  })");
}

// Same chain with every row uniform: the joint is 1/8 everywhere.
inline Network chain3_uniform() {
  return parse_network(R"({
    "variables": [
      {"name": "X", "states": ["x0", "x1"]},
      {"name": "Y", "states": ["y0", "y1"]},
      {"name": "Z", "states": ["z0", "z1"]}
    ],
    "cpds": [
      {"child": "X", "parents": [], "table": [0.5, 0.5]},
      {"child": "Y", "parents": ["X"], "table": [0.5, 0.5, 0.5, 0.5]},
      {"child": "Z", "parents": ["Y"], "table": [0.5, 0.5, 0.5, 0.5]}
    ]
  })");
}

// Collider X -> Y <- Z, file order X, Z, Y. Moralization marries X and Z.
inline Network collider() {
  return parse_network(R"({
    "variables": [
      {"name": "X", "states": ["x0", "x1"]},
      {"name": "Z", "states": ["z0", "z1"]},
      {"name": "Y", "states": ["y0", "y1"]}
    ],
    "cpds": [
      {"child": "X", "parents": [], "table": [0.3, 0.7]},
      {"child": "Z", "parents": [], "table": [0.6, 0.4]},
      {"child": "Y", "parents": ["X", "Z"],
       "table": [0.9, 0.1, 0.3, 0.7, 0.5, 0.5, 0.1, 0.9]}
    ]
  })");
}

// Fork X <- Y -> Z. The root's cpd travels between the cliques untouched.
inline Network fork3() {
  return parse_network(R"({
    "variables": [
      {"name": "X", "states": ["x0", "x1"]},
      {"name": "Y", "states": ["y0", "y1"]},
      {"name": "Z", "states": ["z0", "z1"]}
    ],
    "cpds": [
      {"child": "X", "parents": ["Y"], "table": [0.9, 0.1, 0.2, 0.8]},
      {"child": "Y", "parents": [], "table": [0.3, 0.7]},
      {"child": "Z", "parents": ["Y"], "table": [0.6, 0.4, 0.25, 0.75]}
    ]
  })");
}

// X determines Y. X=x0 together with Y=y1 has probability zero.
inline Network deterministic_pair() {
  return parse_network(R"({
    "variables": [
      {"name": "X", "states": ["x0", "x1"]},
      {"name": "Y", "states": ["y0", "y1"]}
    ],
    "cpds": [
      {"child": "X", "parents": [], "table": [0.5, 0.5]},
      {"child": "Y", "parents": ["X"], "table": [1.0, 0.0, 0.0, 1.0]}
    ]
  })");
}

inline VarId vid(const Network& net, const std::string& name) {
  const VarId v = net.find(name);
  REQUIRE(v >= 0);
  return v;
}

inline int state_index(const Network& net, VarId v, const std::string& state) {
  const auto& states = net.var(v).states;
  for (int i = 0; i < static_cast<int>(states.size()); ++i)
    if (states[i] == state) return i;
  REQUIRE(false);
  return -1;
}

inline Evidence make_ev(
    const Network& net,
    std::initializer_list<std::pair<const char*, const char*>> items) {
  Evidence ev;
  for (const auto& [var, state] : items) {
    const VarId v = vid(net, var);
    ev.set(v, state_index(net, v, state));
  }
  return ev;
}

inline void check_close(const std::vector<double>& got,
                        const std::vector<double>& want, double tol) {
  REQUIRE(got.size() == want.size());
  for (std::size_t i = 0; i < got.size(); ++i) {
    INFO("index " << i << ": got " << got[i] << ", want " << want[i]);
    CHECK(std::fabs(got[i] - want[i]) <= tol);
  }
}

inline void check_value(double got, double want, double tol) {
  INFO("got " << got << ", want " << want);
  CHECK(std::fabs(got - want) <= tol);
}

// Cells reordered to row-major over ascending variable ids, the layout the
// oracle uses. Factors put head axes first, so the raw order can differ.
inline std::vector<double> ascending_cells(const Factor& f) {
  const VarSet& dom = f.dom();
  std::vector<double> out(f.size());
  std::vector<int> st(dom.size(), 0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::size_t idx = 0;
    for (std::size_t k = 0; k < dom.size(); ++k)
      idx += static_cast<std::size_t>(st[k]) *
             f.stride_of_axis(f.axis_of(dom[k]));
    out[i] = f.values()[idx];
    for (int k = static_cast<int>(dom.size()) - 1; k >= 0; --k) {
      if (++st[k] < f.card_of(dom[k])) break;
      st[k] = 0;
    }
  }
  return out;
}

}  // namespace testing
