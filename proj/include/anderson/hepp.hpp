#pragma once

// Hepp trees, sectors, rewired extractions and safe/unsafe forests.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "bphz.hpp"

namespace anderson {

// Rooted binary tree whose leaves carry vertex labels. Node indices are
// stable; leaves and inner nodes share one index space.
class HeppTree {
 public:
  struct Node {
    int parent = -1;
    int left = -1;
    int right = -1;
    int vertex = -1;  // leaf label, -1 for inner nodes
  };

  HeppTree() = default;

  static HeppTree leaf(int v) {
    HeppTree t;
    t.nodes_.push_back({-1, -1, -1, v});
    t.root_ = 0;
    t.finish();
    return t;
  }

  static HeppTree join(const HeppTree& a, const HeppTree& b) {
    HeppTree t;
    t.nodes_.push_back({});
    t.root_ = 0;
    auto graft = [&](const HeppTree& s) {
      int off = static_cast<int>(t.nodes_.size());
      for (auto n : s.nodes_) {
        if (n.parent >= 0) n.parent += off;
        if (n.left >= 0) n.left += off;
        if (n.right >= 0) n.right += off;
        t.nodes_.push_back(n);
      }
      t.nodes_[off + s.root_].parent = 0;
      return off + s.root_;
    };
    int l = graft(a);
    int r = graft(b);
    t.nodes_[0].left = l;
    t.nodes_[0].right = r;
    t.finish();
    return t;
  }

  const std::vector<Node>& nodes() const { return nodes_; }
  int root() const { return root_; }
  int size() const { return static_cast<int>(nodes_.size()); }
  bool is_inner(int u) const { return nodes_[u].vertex < 0; }
  int leaf_of(int v) const { return leaf_of_.at(v); }
  const std::vector<int>& inner() const { return inner_; }
  const std::vector<int>& below(int u) const { return below_[u]; }
  int depth(int u) const { return depth_[u]; }

  // Leaf labels in increasing order.
  std::vector<int> labels() const { return below_[root_]; }

  int lca(int a, int b) const {
    while (depth_[a] > depth_[b]) a = nodes_[a].parent;
    while (depth_[b] > depth_[a]) b = nodes_[b].parent;
    while (a != b) a = nodes_[a].parent, b = nodes_[b].parent;
    return a;
  }

  int lca_vertices(int v, int w) const { return lca(leaf_of(v), leaf_of(w)); }

  // a is a strict ancestor of b (a is closer to the root).
  bool precedes(int a, int b) const { return a != b && lca(a, b) == a; }

  std::string str() const { return str_rec(root_); }

 private:
  std::vector<Node> nodes_;
  int root_ = -1;
  std::vector<int> inner_;
  std::vector<std::vector<int>> below_;
  std::vector<int> depth_;
  std::map<int, int> leaf_of_;

  void finish() {
    const int n = size();
    below_.assign(n, {});
    depth_.assign(n, 0);
    inner_.clear();
    leaf_of_.clear();
    std::function<void(int, int)> walk = [&](int u, int dep) {
      depth_[u] = dep;
      const Node& x = nodes_[u];
      if (x.vertex >= 0) {
        below_[u] = {x.vertex};
        leaf_of_[x.vertex] = u;
        return;
      }
      walk(x.left, dep + 1);
      walk(x.right, dep + 1);
      std::merge(below_[x.left].begin(), below_[x.left].end(), below_[x.right].begin(), below_[x.right].end(),
                 std::back_inserter(below_[u]));
    };
    walk(root_, 0);
    for (int u = 0; u < n; ++u)
      if (is_inner(u)) inner_.push_back(u);
    // Inner nodes ordered by their leaf sets, which identify them.
    std::sort(inner_.begin(), inner_.end(), [&](int a, int b) {
      return below_[a].size() != below_[b].size() ? below_[a].size() > below_[b].size() : below_[a] < below_[b];
    });
  }

  std::string str_rec(int u) const {
    const Node& x = nodes_[u];
    if (x.vertex >= 0) return std::to_string(x.vertex);
    std::string a = str_rec(x.left), b = str_rec(x.right);
    if (below_[x.right].front() < below_[x.left].front()) std::swap(a, b);
    return "(" + a + "," + b + ")";
  }
};

// Parse "((1,2),(3,4))".
inline HeppTree parse_hepp_tree(const std::string& s) {
  std::size_t i = 0;
  std::function<HeppTree()> parse = [&]() -> HeppTree {
    if (i >= s.size()) throw std::invalid_argument("hepp tree: unexpected end");
    if (s[i] == '(') {
      ++i;
      HeppTree a = parse();
      if (i >= s.size() || s[i] != ',') throw std::invalid_argument("hepp tree: expected ','");
      ++i;
      HeppTree b = parse();
      if (i >= s.size() || s[i] != ')') throw std::invalid_argument("hepp tree: expected ')'");
      ++i;
      return HeppTree::join(a, b);
    }
    std::size_t j = i;
    while (j < s.size() && (std::isdigit(static_cast<unsigned char>(s[j])) || s[j] == '-')) ++j;
    if (j == i) throw std::invalid_argument("hepp tree: expected a label");
    int v = std::stoi(s.substr(i, j - i));
    i = j;
    return HeppTree::leaf(v);
  };
  HeppTree t = parse();
  if (i != s.size()) throw std::invalid_argument("hepp tree: trailing characters");
  return t;
}

// All rooted binary trees with the given leaves, each once.
inline std::vector<HeppTree> enumerate_hepp_trees(const std::vector<int>& labels) {
  if (labels.empty()) throw std::invalid_argument("enumerate_hepp_trees: no vertices");
  // Grow by inserting each new leaf above every existing node.
  struct Shape {
    std::vector<int> parent, left, right, vertex;
    int root;
  };
  std::vector<Shape> cur{{{-1}, {-1}, {-1}, {labels[0]}, 0}};
  for (std::size_t k = 1; k < labels.size(); ++k) {
    std::vector<Shape> next;
    for (auto& s : cur) {
      const int n = static_cast<int>(s.parent.size());
      for (int u = 0; u < n; ++u) {
        Shape t = s;
        int leafn = n, join = n + 1;
        t.parent.push_back(join), t.left.push_back(-1), t.right.push_back(-1), t.vertex.push_back(labels[k]);
        int p = s.parent[u];
        t.parent.push_back(p), t.left.push_back(u), t.right.push_back(leafn), t.vertex.push_back(-1);
        t.parent[u] = join;
        if (p < 0)
          t.root = join;
        else if (t.left[p] == u)
          t.left[p] = join;
        else
          t.right[p] = join;
        next.push_back(std::move(t));
      }
    }
    cur = std::move(next);
  }
  std::vector<HeppTree> out;
  for (auto& s : cur) {
    std::function<HeppTree(int)> build = [&](int u) {
      return s.vertex[u] >= 0 ? HeppTree::leaf(s.vertex[u]) : HeppTree::join(build(s.left[u]), build(s.right[u]));
    };
    out.push_back(build(s.root));
  }
  return out;
}

inline std::vector<HeppTree> enumerate_hepp_trees(const Diagram& d) { return enumerate_hepp_trees(d.internal); }

// ---------------------------------------------------------------------------
// Power counting on a tree

struct NullReport {
  std::map<int, Rational> eta;     // inner node -> eta
  std::map<int, Rational> degbar;  // inner node -> degbar
  int null = 0;
};

// A plain edge list over the internal vertices, as used by rewired diagrams.
struct TypedArc {
  int tail, head;
  Rational type;
};

inline std::vector<TypedArc> internal_arcs(const Diagram& d) {
  std::vector<TypedArc> a;
  for (auto& e : d.edges)
    for (int k = 0; k < e.mult; ++k) a.push_back({e.tail, e.head, e.type});
  return a;
}

// eta(u) = d + sum of types of edges resolved at u; self-loops resolve at a
// leaf and enter no inner node.
inline std::map<int, Rational> eta_map(const HeppTree& t, const std::vector<TypedArc>& arcs, int dim) {
  std::map<int, Rational> eta;
  for (int u : t.inner()) eta[u] = dim;
  for (auto& a : arcs) {
    int u = t.lca_vertices(a.tail, a.head);
    if (t.is_inner(u)) eta[u] += a.type;
  }
  return eta;
}

// Sum of eta over u and its descendants.
inline std::map<int, Rational> subtree_sums(const HeppTree& t, const std::map<int, Rational>& eta) {
  std::map<int, Rational> s;
  for (int u : t.inner()) {
    Rational x = 0;
    for (int v : t.inner())
      if (v == u || t.precedes(u, v)) x += eta.at(v);
    s[u] = x;
  }
  return s;
}

inline NullReport null_count(const HeppTree& t, const Diagram& d) {
  NullReport r;
  r.eta = eta_map(t, internal_arcs(d), d.d);
  for (int u : t.inner()) {
    r.degbar[u] = degbar(d, mask_of(d, t.below(u)));
    if (r.degbar[u] == 0) ++r.null;
  }
  return r;
}

inline std::vector<HeppTree> contributing_trees(const Diagram& d) {
  std::vector<HeppTree> out;
  if (d.num_internal() < 2) return out;
  for (auto& t : enumerate_hepp_trees(d))
    if (null_count(t, d).null == static_cast<int>(t.inner().size())) out.push_back(t);
  return out;
}

// ---------------------------------------------------------------------------
// Sectors

using Point = std::vector<double>;

// Distance on R^d / (2 pi Z)^d.
inline double torus_distance(const Point& x, const Point& y) {
  double s = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double a = std::remainder(x[i] - y[i], 2 * std::numbers::pi);
    s += a * a;
  }
  return std::sqrt(s);
}

inline double sector_scale(int dim) { return std::sqrt(static_cast<double>(dim)) * std::numbers::pi; }

// The n with c 2^{-n-1} < r <= c 2^{-n}.
inline int shell_index(double r, int dim) {
  const double c = sector_scale(dim);
  int n = static_cast<int>(std::floor(std::log2(c / r)));
  while (r > c * std::ldexp(1.0, -n)) --n;
  while (r <= c * std::ldexp(1.0, -n - 1)) ++n;
  return n;
}

using ScaleAssignment = std::map<int, int>;  // inner node -> n

inline bool is_compatible(const HeppTree& t, const ScaleAssignment& n) {
  for (int u : t.inner())
    for (int v : t.inner())
      if (t.precedes(u, v) && n.at(v) < n.at(u)) return false;
  return true;
}

inline bool is_distinct(const ScaleAssignment& n) {
  std::set<int> s;
  for (auto& [u, k] : n) s.insert(k);
  return s.size() == n.size();
}

// Points are given in the order of the tree's leaf labels.
inline bool in_sector(const HeppTree& t, const ScaleAssignment& n, const std::vector<Point>& x, int dim) {
  auto labels = t.labels();
  const double c = sector_scale(dim);
  for (std::size_t i = 0; i < labels.size(); ++i)
    for (std::size_t j = i + 1; j < labels.size(); ++j) {
      int u = t.lca_vertices(labels[i], labels[j]);
      double r = torus_distance(x[i], x[j]);
      int k = n.at(u);
      if (!(c * std::ldexp(1.0, -k - 1) < r && r <= c * std::ldexp(1.0, -k))) return false;
    }
  return true;
}

// The only scale map that could place x in a sector of t, if any.
inline std::optional<ScaleAssignment> forced_scales(const HeppTree& t, const std::vector<Point>& x, int dim) {
  auto labels = t.labels();
  ScaleAssignment n;
  for (std::size_t i = 0; i < labels.size(); ++i)
    for (std::size_t j = i + 1; j < labels.size(); ++j) {
      int u = t.lca_vertices(labels[i], labels[j]);
      int k = shell_index(torus_distance(x[i], x[j]), dim);
      auto [it, fresh] = n.try_emplace(u, k);
      if (!fresh && it->second != k) return std::nullopt;
    }
  if (!is_compatible(t, n) || !in_sector(t, n, x, dim)) return std::nullopt;
  return n;
}

// Compatible maps with values in [0, cap], in lexicographic order of the
// inner nodes. Throws BudgetExceeded past `limit` maps.
inline std::vector<ScaleAssignment> enumerate_compatible_scales(const HeppTree& t, int cap,
                                                                std::size_t limit = 1000000) {
  const auto& inner = t.inner();  // parents precede children
  std::vector<ScaleAssignment> out;
  ScaleAssignment n;
  std::function<void(std::size_t)> rec = [&](std::size_t i) {
    if (i == inner.size()) {
      if (out.size() == limit) throw BudgetExceeded("enumerate_compatible_scales: too many maps");
      out.push_back(n);
      return;
    }
    int u = inner[i], p = t.nodes()[u].parent;
    for (int k = p < 0 ? 0 : n.at(p); k <= cap; ++k) {
      n[u] = k;
      rec(i + 1);
    }
    n.erase(u);
  };
  rec(0);
  return out;
}

// A uniformly chosen distinct-scale compatible map with values in [0, cap]:
// random distinct values assigned along a random heap ordering.
template <class Rng>
ScaleAssignment random_distinct_scales(const HeppTree& t, int cap, Rng& rng) {
  const auto& inner = t.inner();
  if (cap + 1 < static_cast<int>(inner.size())) throw std::invalid_argument("random_distinct_scales: cap too small");
  std::vector<int> values(cap + 1);
  std::iota(values.begin(), values.end(), 0);
  std::shuffle(values.begin(), values.end(), rng);
  values.resize(inner.size());
  std::sort(values.begin(), values.end());
  // Random linear extension: repeatedly pick an available node.
  std::vector<int> avail{t.root()};
  ScaleAssignment n;
  for (int k : values) {
    std::uniform_int_distribution<std::size_t> pick(0, avail.size() - 1);
    std::size_t i = pick(rng);
    int u = avail[i];
    avail.erase(avail.begin() + static_cast<long>(i));
    n[u] = k;
    for (int c : {t.nodes()[u].left, t.nodes()[u].right})
      if (t.is_inner(c)) avail.push_back(c);
  }
  return n;
}

// Uniform points on the torus.
template <class Rng>
std::vector<Point> random_configuration(int m, int dim, Rng& rng) {
  std::uniform_real_distribution<double> u(-std::numbers::pi, std::numbers::pi);
  std::vector<Point> x(m, Point(dim));
  for (auto& p : x)
    for (auto& c : p) c = u(rng);
  return x;
}

// Points built by recursive splitting at random dyadic scales, so that
// configurations near the walls of many different sectors are common.
template <class Rng>
std::vector<Point> clustered_configuration(int m, int dim, Rng& rng, int max_level = 12) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_int_distribution<int> lv(0, max_level);
  std::vector<Point> x(m, Point(dim));
  std::function<void(int, int, const Point&, double)> place = [&](int lo, int hi, const Point& c, double r) {
    if (hi - lo == 1) {
      x[lo] = c;
      return;
    }
    std::uniform_int_distribution<int> cut(lo + 1, hi - 1);
    int mid = cut(rng);
    double s = std::min(r, std::ldexp(std::numbers::pi, -lv(rng)));
    Point a = c, b = c;
    for (int i = 0; i < dim; ++i) a[i] += s * u(rng), b[i] += s * u(rng);
    place(lo, mid, a, s / 2);
    place(mid, hi, b, s / 2);
  };
  Point origin(dim);
  for (auto& c : origin) c = std::numbers::pi * u(rng);
  place(0, m, origin, std::numbers::pi);
  return x;
}

struct Sector {
  HeppTree tree;
  ScaleAssignment scales;
};

// Single-linkage tree of the minimal spanning tree: the last edge added
// becomes the root.
inline HeppTree spanning_tree_hepp(const std::vector<int>& labels, const std::vector<Point>& x) {
  const int m = static_cast<int>(labels.size());
  struct Pair {
    double r;
    int i, j;
  };
  std::vector<Pair> pairs;
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j) pairs.push_back({torus_distance(x[i], x[j]), i, j});
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    return a.r != b.r ? a.r < b.r : std::tie(a.i, a.j) < std::tie(b.i, b.j);
  });
  std::vector<int> comp(m);
  std::iota(comp.begin(), comp.end(), 0);
  std::vector<HeppTree> cluster;
  for (int v : labels) cluster.push_back(HeppTree::leaf(v));
  std::function<int(int)> find = [&](int v) { return comp[v] == v ? v : comp[v] = find(comp[v]); };
  for (auto& p : pairs) {
    int a = find(p.i), b = find(p.j);
    if (a == b) continue;
    cluster[a] = HeppTree::join(cluster[a], cluster[b]);
    comp[b] = a;
  }
  return cluster[find(0)];
}

// Locate a sector containing x (points in the order of d.internal).
// Tries the spanning-tree construction first, then every tree.
inline Sector locate_sector(const std::vector<Point>& x, const Diagram& d) {
  const auto& labels = d.internal;
  if (x.size() != labels.size()) throw std::invalid_argument("locate_sector: one point per internal vertex");
  if (labels.size() < 2) throw std::invalid_argument("locate_sector: need at least two vertices");
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = i + 1; j < x.size(); ++j)
      if (torus_distance(x[i], x[j]) == 0) throw DegenerateConfiguration("locate_sector: coinciding points");
  HeppTree t = spanning_tree_hepp(labels, x);
  if (auto n = forced_scales(t, x, d.d)) return {t, *n};
  if (labels.size() <= 8)
    for (auto& s : enumerate_hepp_trees(labels))
      if (auto n = forced_scales(s, x, d.d)) return {s, *n};
  throw SectorNotFound("locate_sector: no sector contains the configuration");
}

// Every (T, n) with n in the distinct-scale family whose sector contains x.
inline std::vector<Sector> distinct_scale_sectors_containing(const std::vector<HeppTree>& trees,
                                                            const std::vector<Point>& x, int dim) {
  std::vector<Sector> out;
  for (auto& t : trees)
    if (auto n = forced_scales(t, x, dim))
      if (is_distinct(*n)) out.push_back({t, *n});
  return out;
}

// ---------------------------------------------------------------------------
// Rewired diagrams

enum class RewireVariant { AllBoundary, IncomingOnly };

// Unit edges of a diagram (multiplicities expanded, legs included). Slot i
// of a rewired diagram corresponds to slot i of the original; that is the
// bijection between edge sets.
struct Slot {
  int tail, head;
  bool leg;
  Rational type;
};

struct RewiredDiagram {
  Diagram original;
  std::vector<Slot> slots;     // original endpoints
  std::vector<Slot> current;   // endpoints after rewiring
  std::vector<std::string> history;

  Diagram diagram() const {
    Diagram r;
    r.d = original.d;
    r.internal = original.internal;
    r.leaves = original.leaves;
    r.tags = original.tags;
    for (auto& s : current)
      if (s.leg)
        r.legs.push_back({s.tail, s.head});
      else
        r.edges.push_back({s.tail, s.head, 1, s.type});
    r.normalize();
    return r;
  }

  std::vector<TypedArc> arcs() const {
    std::vector<TypedArc> a;
    for (auto& s : current)
      if (!s.leg) a.push_back({s.tail, s.head, s.type});
    return a;
  }

  bool operator==(const RewiredDiagram& o) const {
    if (current.size() != o.current.size()) return false;
    for (std::size_t i = 0; i < current.size(); ++i)
      if (current[i].tail != o.current[i].tail || current[i].head != o.current[i].head) return false;
    return true;
  }
};

inline RewiredDiagram as_rewired(const Diagram& d) {
  RewiredDiagram r;
  r.original = d;
  for (auto& e : d.edges)
    for (int k = 0; k < e.mult; ++k) r.slots.push_back({e.tail, e.head, false, e.type});
  for (auto& l : d.legs) r.slots.push_back({l.tail, l.head, true, Rational(-2)});
  r.current = r.slots;
  return r;
}

// Original slot of the unique incoming / outgoing edge of gamma, or -1.
inline int incoming_slot(const RewiredDiagram& r, VMask g) {
  int found = -1;
  for (std::size_t i = 0; i < r.slots.size(); ++i) {
    const Slot& s = r.slots[i];
    if (!in_mask(r.original, g, s.tail) && in_mask(r.original, g, s.head)) {
      if (found >= 0) return -1;
      found = static_cast<int>(i);
    }
  }
  return found;
}

inline int outgoing_slot(const RewiredDiagram& r, VMask g) {
  int found = -1;
  for (std::size_t i = 0; i < r.slots.size(); ++i) {
    const Slot& s = r.slots[i];
    if (in_mask(r.original, g, s.tail) && !in_mask(r.original, g, s.head)) {
      if (found >= 0) return -1;
      found = static_cast<int>(i);
    }
  }
  return found;
}

// Distinguished vertex of gamma for the chosen variant.
inline int anchor_vertex(const RewiredDiagram& r, VMask g, RewireVariant v) {
  if (v == RewireVariant::AllBoundary) return labels_of(r.original, g).back();
  int o = outgoing_slot(r, g);
  if (o < 0) throw PreconditionViolated("rewire: divergence without a unique outgoing edge");
  return r.slots[o].tail;
}

// Extraction by rewiring; gamma is a vertex set of the original diagram.
// IncomingOnly leaves the input unchanged when the incoming edge has already
// been moved out of gamma.
inline RewiredDiagram rewire_extract(const RewiredDiagram& r, VMask g, RewireVariant variant) {
  const Diagram& d = r.original;
  if (!is_connected_subset(d, g)) throw PreconditionViolated("rewire: subdiagram must be connected");
  RewiredDiagram out = r;
  const int star = anchor_vertex(r, g, variant);
  auto in = [&](int v) { return in_mask(d, g, v); };
  if (variant == RewireVariant::AllBoundary) {
    for (auto& s : out.current) {
      bool t = in(s.tail), h = in(s.head);
      if (t && !h) s.tail = star;
      if (h && !t) s.head = star;
    }
  } else {
    if (degree(d, g) >= 0) throw PreconditionViolated("rewire: IncomingOnly needs a strictly negative subdiagram");
    int e = incoming_slot(r, g);
    if (e < 0) throw PreconditionViolated("rewire: divergence without a unique incoming edge");
    if (in(out.current[e].head)) out.current[e].head = star;
  }
  out.history.push_back((variant == RewireVariant::AllBoundary ? "A" : "I") + std::to_string(g));
  return out;
}

inline RewiredDiagram rewire_forest(const Diagram& d, const Forest& f, RewireVariant variant) {
  RewiredDiagram r = as_rewired(d);
  for (VMask g : f) r = rewire_extract(r, g, variant);
  return r;
}

// ---------------------------------------------------------------------------
// Safe and unsafe divergences

struct EdgeSets {
  VMask parent = 0;               // full mask when the parent is the diagram itself
  std::vector<VMask> children;
  std::vector<int> proper;        // slots
  std::vector<int> boundary;      // slots
};

// Parent, children, proper and boundary edges of g relative to the forest f
// (g itself is ignored if present in f).
inline EdgeSets edge_sets(const RewiredDiagram& r, const Forest& f, VMask g) {
  const Diagram& d = r.original;
  EdgeSets s;
  s.parent = full_mask(d);
  for (VMask h : f)
    if (h != g && is_subset(g, h) && popcount(h) < popcount(s.parent)) s.parent = h;
  for (VMask h : f) {
    if (h == g || !is_subset(h, g)) continue;
    bool maximal = true;
    for (VMask k : f)
      if (k != g && k != h && is_subset(h, k) && is_subset(k, g)) maximal = false;
    if (maximal) s.children.push_back(h);
  }
  auto inside = [&](const Slot& e, VMask m) { return in_mask(d, m, e.tail) && in_mask(d, m, e.head); };
  for (std::size_t i = 0; i < r.slots.size(); ++i) {
    const Slot& e = r.slots[i];
    if (e.leg) continue;
    if (inside(e, g)) {
      bool in_child = std::any_of(s.children.begin(), s.children.end(), [&](VMask c) { return inside(e, c); });
      if (!in_child) s.proper.push_back(static_cast<int>(i));
    } else if (inside(e, s.parent) && (in_mask(d, g, e.tail) || in_mask(d, g, e.head))) {
      s.boundary.push_back(static_cast<int>(i));
    }
  }
  return s;
}

// Node at which a rewired slot resolves; a self-loop resolves at its leaf.
inline int slot_node(const HeppTree& t, const RewiredDiagram& r, int slot) {
  const Slot& s = r.current[slot];
  return t.lca_vertices(s.tail, s.head);
}

struct DivergenceVerdict {
  VMask gamma = 0;
  bool safe = true;
  // Some boundary node is incomparable with some proper node and no pair
  // settles the comparison: the raw scale test then depends on the scales.
  bool assignment_dependent = false;
  EdgeSets sets;
  int up = -1;     // gamma-up
  int upup = -1;   // gamma-upup, -1 for the cemetery state
};

// Verdict for g with scales read off the rewired diagram r.
inline DivergenceVerdict judge(const HeppTree& t, const RewiredDiagram& r, const Forest& f, VMask g) {
  DivergenceVerdict v;
  v.gamma = g;
  v.sets = edge_sets(r, f, g);
  std::vector<int> pn, bn;
  for (int e : v.sets.proper) pn.push_back(slot_node(t, r, e));
  for (int e : v.sets.boundary) bn.push_back(slot_node(t, r, e));
  if (!pn.empty()) {
    v.up = pn.front();
    for (int u : pn) v.up = t.lca(v.up, u);
  }
  if (!bn.empty()) {
    // The deepest boundary node; ties between incomparable nodes keep the first.
    v.upup = bn.front();
    for (int u : bn)
      if (t.precedes(v.upup, u)) v.upup = u;
  }
  bool all_strict = true, settled_safe = false, incomparable = false;
  for (int b : bn)
    for (int p : pn) {
      if (t.precedes(b, p)) continue;
      all_strict = false;
      if (b == p || t.precedes(p, b)) settled_safe = true;
      else incomparable = true;
    }
  // sup over an empty boundary is -inf and min over no proper edges is +inf.
  v.safe = !bn.empty() && !pn.empty() && !all_strict;
  v.assignment_dependent = v.safe && !settled_safe && incomparable;
  return v;
}

// The raw comparison sup(boundary scales) >= min(proper scales).
inline bool safe_by_scales(const HeppTree& t, const RewiredDiagram& r, const EdgeSets& s, const ScaleAssignment& n) {
  auto scale = [&](int slot) {
    int u = slot_node(t, r, slot);
    return t.is_inner(u) ? static_cast<long>(n.at(u)) : std::numeric_limits<long>::max();
  };
  long sup = std::numeric_limits<long>::min();
  for (int e : s.boundary) sup = std::max(sup, scale(e));
  long mn = std::numeric_limits<long>::max();
  for (int e : s.proper) mn = std::min(mn, scale(e));
  return sup >= mn;
}

struct SafeUnsafeReport {
  std::vector<DivergenceVerdict> verdicts;  // one per member of the forest
  bool all_safe() const {
    return std::all_of(verdicts.begin(), verdicts.end(), [](auto& v) { return v.safe; });
  }
};

inline SafeUnsafeReport classify_safe_unsafe(const Diagram& d, const HeppTree& t, const Forest& f) {
  validate_forest(d, f);
  RewiredDiagram r = rewire_forest(d, f, RewireVariant::IncomingOnly);
  SafeUnsafeReport rep;
  for (VMask g : f) rep.verdicts.push_back(judge(t, r, f, g));
  return rep;
}

inline bool is_safe_forest(const Diagram& d, const HeppTree& t, const Forest& f) {
  return classify_safe_unsafe(d, t, f).all_safe();
}

inline Forest with(Forest f, VMask g) {
  f.push_back(g);
  return f;
}

// Two readings of "unsafe to be added": gamma unsafe in F_s + {gamma}, or
// F_s + {gamma} not a safe forest. Both require F_s + {gamma} to be a forest.
enum class UnsafeRule { GammaUnsafe, ForestNotSafe };

inline Forest unsafe_set(const Diagram& d, const HeppTree& t, const Forest& fs, UnsafeRule rule) {
  Forest fu;
  for (VMask g : enumerate_divergences(d)) {
    if (std::find(fs.begin(), fs.end(), g) != fs.end()) continue;
    Forest h = with(fs, g);
    if (!is_forest(h)) continue;
    auto rep = classify_safe_unsafe(d, t, h);
    bool bad = rule == UnsafeRule::GammaUnsafe ? !rep.verdicts.back().safe : !rep.all_safe();
    if (bad) fu.push_back(g);
  }
  return fu;
}

struct ForestInterval {
  Forest safe;
  Forest unsafe;
};

inline std::vector<ForestInterval> partition_forests(const Diagram& d, const HeppTree& t,
                                                     UnsafeRule rule = UnsafeRule::GammaUnsafe) {
  std::vector<ForestInterval> out;
  for (auto& f : enumerate_forests(d))
    if (is_safe_forest(d, t, f)) out.push_back({f, unsafe_set(d, t, f, rule)});
  return out;
}

// Intervals cover every forest exactly once and each top is a forest.
inline bool is_partition(const Diagram& d, const std::vector<ForestInterval>& p) {
  auto all = enumerate_forests(d);
  std::map<Forest, int> hits;
  for (auto f : all) {
    std::sort(f.begin(), f.end());
    hits[f] = 0;
  }
  for (auto& iv : p) {
    Forest top = iv.safe;
    top.insert(top.end(), iv.unsafe.begin(), iv.unsafe.end());
    if (!is_forest(top)) return false;
    const std::size_t k = iv.unsafe.size();
    for (std::size_t s = 0; s < (std::size_t{1} << k); ++s) {
      Forest f = iv.safe;
      for (std::size_t i = 0; i < k; ++i)
        if (s >> i & 1) f.push_back(iv.unsafe[i]);
      std::sort(f.begin(), f.end());
      auto it = hits.find(f);
      if (it == hits.end()) return false;
      ++it->second;
    }
  }
  return std::all_of(hits.begin(), hits.end(), [](auto& kv) { return kv.second == 1; });
}

struct UnsafeShift {
  std::map<int, Rational> eta;      // eta of the rewired diagram
  std::map<int, Rational> eta_hat;  // shifted by the unsafe divergences
  int null_hat = 0;
  int order_violations = 0;  // gamma unsafe but gamma-up not strictly below gamma-upup
  std::vector<DivergenceVerdict> unsafe;
};

// Shifted exponent for the interval [F_s, F_s + F_u].
inline UnsafeShift unsafe_shift(const Diagram& d, const HeppTree& t, const ForestInterval& iv) {
  RewiredDiagram r = rewire_forest(d, iv.safe, RewireVariant::IncomingOnly);
  UnsafeShift s;
  s.eta = eta_map(t, r.arcs(), d.d);
  s.eta_hat = s.eta;
  for (VMask g : iv.unsafe) {
    DivergenceVerdict v = judge(t, r, iv.safe, g);
    if (v.up >= 0 && t.is_inner(v.up)) s.eta_hat[v.up] += 2;
    if (v.upup >= 0 && t.is_inner(v.upup)) s.eta_hat[v.upup] -= 2;
    bool ordered = v.up >= 0 && (v.upup < 0 || t.precedes(v.upup, v.up));
    if (!ordered) ++s.order_violations;
    s.unsafe.push_back(v);
  }
  for (auto& [u, x] : subtree_sums(t, s.eta_hat))
    if (x == 0) ++s.null_hat;
  return s;
}

}  // namespace anderson
