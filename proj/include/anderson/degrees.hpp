#pragma once

// Power counting on full subdiagrams.
//
// Every definition used here (divergences, primitive blow-ups, the
// classification minimum) is attained on full subdiagrams: dropping part of an
// edge multiplicity raises the degree by -type > 0 for Anderson edges, so the
// minimum over sub-multisets on a fixed vertex set is the induced one. We
// therefore only enumerate connected vertex subsets and take induced edges.

#include <bit>
#include <cstdint>
#include <functional>
#include <vector>

#include "diagrams.hpp"

namespace anderson {

using VMask = std::uint64_t;

inline int popcount(VMask m) { return std::popcount(m); }
inline bool is_subset(VMask a, VMask b) { return (a & ~b) == 0; }

inline VMask full_mask(const Diagram& d) {
  return d.num_internal() == 64 ? ~VMask{0} : ((VMask{1} << d.num_internal()) - 1);
}

inline VMask mask_of(const Diagram& d, const std::vector<int>& labels) {
  VMask m = 0;
  for (int v : labels) {
    int i = d.index_of(v);
    if (i < 0) throw std::invalid_argument("label is not an internal vertex");
    m |= VMask{1} << i;
  }
  return m;
}

inline std::vector<int> labels_of(const Diagram& d, VMask m) {
  std::vector<int> out;
  for (int i = 0; i < d.num_internal(); ++i)
    if (m >> i & 1) out.push_back(d.internal[i]);
  return out;
}

inline bool in_mask(const Diagram& d, VMask m, int label) {
  int i = d.index_of(label);
  return i >= 0 && (m >> i & 1);
}

// Adjacency over internal vertices through internal edges (direction ignored).
inline std::vector<VMask> adjacency(const Diagram& d) {
  std::vector<VMask> adj(d.num_internal(), 0);
  for (auto& e : d.edges) {
    int a = d.index_of(e.tail), b = d.index_of(e.head);
    if (a != b) adj[a] |= VMask{1} << b, adj[b] |= VMask{1} << a;
  }
  return adj;
}

inline std::vector<VMask> components(const Diagram& d, VMask m) {
  auto adj = adjacency(d);
  std::vector<VMask> out;
  VMask left = m;
  while (left) {
    VMask comp = left & (~left + 1), frontier = comp;
    while (frontier) {
      int i = std::countr_zero(frontier);
      frontier &= frontier - 1;
      VMask nb = adj[i] & m & ~comp;
      comp |= nb;
      frontier |= nb;
    }
    out.push_back(comp);
    left &= ~comp;
  }
  return out;
}

inline bool is_connected_subset(const Diagram& d, VMask m) { return m != 0 && components(d, m).size() == 1; }

// Induced internal edges, counted with multiplicity.
inline int induced_edge_count(const Diagram& d, VMask m) {
  int s = 0;
  for (auto& e : d.edges)
    if (in_mask(d, m, e.tail) && in_mask(d, m, e.head)) s += e.mult;
  return s;
}

// d(|V|-1) + sum of types, no correction for components.
inline Rational degbar(const Diagram& d, VMask m) {
  Rational s = d.d * (popcount(m) - 1);
  for (auto& e : d.edges)
    if (in_mask(d, m, e.tail) && in_mask(d, m, e.head)) s += e.type * e.mult;
  return s;
}

// Degree of the full subdiagram on m; disconnected sets sum their components.
inline Rational degree(const Diagram& d, VMask m) {
  Rational s = 0;
  for (VMask c : components(d, m)) s += degbar(d, c);
  return s;
}

inline Rational degree(const Diagram& d) { return degree(d, full_mask(d)); }

// All connected vertex subsets, each exactly once (extension-set growth).
inline std::vector<VMask> enumerate_connected_subsets(const Diagram& d) {
  const int n = d.num_internal();
  auto adj = adjacency(d);
  std::vector<VMask> out;
  std::function<void(VMask, VMask, VMask, int)> extend = [&](VMask sub, VMask ext, VMask nbhd, int root) {
    out.push_back(sub);
    while (ext) {
      int w = 63 - std::countl_zero(ext);
      ext &= ~(VMask{1} << w);
      VMask above = ~((VMask{2} << root) - 1);  // indices > root
      VMask fresh = adj[w] & above & ~sub & ~nbhd;
      extend(sub | (VMask{1} << w), ext | fresh, nbhd | adj[w], root);
    }
  };
  for (int v = 0; v < n; ++v) {
    VMask above = ~((VMask{2} << v) - 1);
    VMask s = VMask{1} << v;
    extend(s, adj[v] & above, adj[v] | s, v);
  }
  std::sort(out.begin(), out.end(), [](VMask a, VMask b) {
    return popcount(a) != popcount(b) ? popcount(a) < popcount(b) : a < b;
  });
  return out;
}

// Connected full vacuum subdiagrams of strictly negative degree.
inline std::vector<VMask> enumerate_divergences(const Diagram& d) {
  std::vector<VMask> out;
  for (VMask m : enumerate_connected_subsets(d))
    if (degbar(d, m) < 0) out.push_back(m);
  return out;
}

inline bool compatible(VMask a, VMask b) { return is_subset(a, b) || is_subset(b, a) || (a & b) == 0; }

inline bool is_forest(const std::vector<VMask>& f) {
  for (std::size_t i = 0; i < f.size(); ++i)
    for (std::size_t j = i + 1; j < f.size(); ++j)
      if (f[i] == f[j] || !compatible(f[i], f[j])) return false;
  return true;
}

using Forest = std::vector<VMask>;

inline std::vector<Forest> enumerate_forests(const std::vector<VMask>& divs) {
  std::vector<Forest> out;
  Forest cur;
  std::function<void(std::size_t)> rec = [&](std::size_t i) {
    if (i == divs.size()) {
      out.push_back(cur);
      return;
    }
    rec(i + 1);
    for (VMask g : cur)
      if (!compatible(g, divs[i])) return;
    cur.push_back(divs[i]);
    rec(i + 1);
    cur.pop_back();
  };
  rec(0);
  std::sort(out.begin(), out.end(), [](const Forest& a, const Forest& b) {
    return a.size() != b.size() ? a.size() < b.size() : a < b;
  });
  return out;
}

inline std::vector<Forest> enumerate_forests(const Diagram& d) { return enumerate_forests(enumerate_divergences(d)); }

enum class DegreeClass { Positive, Negative, ZeroDegree };

inline const char* to_string(DegreeClass c) {
  switch (c) {
    case DegreeClass::Positive: return "Positive";
    case DegreeClass::Negative: return "Negative";
    default: return "ZeroDegree";
  }
}

// Subdiagrams that carry at least one edge; an isolated vertex is not one.
inline bool has_edge(const Diagram& d, VMask m) { return induced_edge_count(d, m) > 0; }

inline DegreeClass classify(const Diagram& d) {
  bool zero = false;
  for (VMask m : enumerate_connected_subsets(d)) {
    if (!has_edge(d, m)) continue;
    Rational g = degbar(d, m);
    if (g < 0) return DegreeClass::Negative;
    if (g == 0) zero = true;
  }
  // A single edge with a positive type would be the only candidate left; its
  // degree is d + type, which the scan above already covers via the 2-vertex set.
  return zero ? DegreeClass::ZeroDegree : DegreeClass::Positive;
}

inline std::vector<VMask> primitive_blowups(const Diagram& d) {
  auto subsets = enumerate_connected_subsets(d);
  std::vector<VMask> out;
  for (VMask m : subsets) {
    if (!has_edge(d, m) || degbar(d, m) != 0) continue;
    bool primitive = true;
    for (VMask s : subsets) {
      if (s == m || !is_subset(s, m) || !has_edge(d, s)) continue;
      if (degbar(d, s) <= 0) {
        primitive = false;
        break;
      }
    }
    if (primitive) out.push_back(m);
  }
  return out;
}

// Incoming / outgoing boundary edges of a vertex set, legs included.
struct BoundaryCount {
  int in = 0;
  int out = 0;
};

inline BoundaryCount boundary_count(const Diagram& d, VMask m) {
  BoundaryCount b;
  for (auto& e : d.edges) {
    bool t = in_mask(d, m, e.tail), h = in_mask(d, m, e.head);
    if (t && !h) b.out += e.mult;
    if (!t && h) b.in += e.mult;
  }
  for (auto& l : d.legs) {
    bool t = in_mask(d, m, l.tail), h = in_mask(d, m, l.head);
    if (t && !h) ++b.out;
    if (!t && h) ++b.in;
  }
  return b;
}

// The full subdiagram on m as a stand-alone vacuum diagram.
inline Diagram induced_subdiagram(const Diagram& d, VMask m) {
  Diagram s;
  s.d = d.d;
  s.internal = labels_of(d, m);
  for (auto& e : d.edges)
    if (in_mask(d, m, e.tail) && in_mask(d, m, e.head)) s.edges.push_back(e);
  s.normalize();
  return s;
}

}  // namespace anderson
