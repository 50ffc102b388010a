#pragma once

#include <algorithm>
#include <vector>

namespace larp {

using VarId = int;

// Sorted, duplicate-free vector of variable ids. Kept as a plain vector so
// callers can iterate cheaply and index positions map to table axes.
using VarSet = std::vector<VarId>;

inline bool vs_contains(const VarSet& s, VarId v) {
  return std::binary_search(s.begin(), s.end(), v);
}

inline VarSet vs_union(const VarSet& a, const VarSet& b) {
  VarSet r;
  r.reserve(a.size() + b.size());
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(r));
  return r;
}

inline VarSet vs_minus(const VarSet& a, const VarSet& b) {
  VarSet r;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(r));
  return r;
}

inline VarSet vs_intersect(const VarSet& a, const VarSet& b) {
  VarSet r;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(r));
  return r;
}

inline bool vs_subset(const VarSet& a, const VarSet& b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

inline bool vs_disjoint(const VarSet& a, const VarSet& b) {
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i < *j)
      ++i;
    else if (*j < *i)
      ++j;
    else
      return false;
  }
  return true;
}

inline void vs_insert(VarSet& s, VarId v) {
  auto it = std::lower_bound(s.begin(), s.end(), v);
  if (it == s.end() || *it != v) s.insert(it, v);
}

inline void vs_erase(VarSet& s, VarId v) {
  auto it = std::lower_bound(s.begin(), s.end(), v);
  if (it != s.end() && *it == v) s.erase(it);
}

inline VarSet vs_sorted(std::vector<VarId> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

}  // namespace larp
