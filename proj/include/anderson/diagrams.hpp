#pragma once

// Ladder trees, pairings and the directed multigraphs they produce.

#include <algorithm>
#include <array>
#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "rational.hpp"

namespace anderson {

struct LadderTree {
  int n = 0;

  int top() const { return n + 1; }
  bool is_leaf(int v) const { return v == 0 || v == n + 1; }
  std::vector<std::pair<int, int>> edges() const {
    std::vector<std::pair<int, int>> e;
    for (int i = 0; i <= n; ++i) e.emplace_back(i, i + 1);
    return e;
  }
};

inline LadderTree ladder_tree(int n) {
  if (n < 0) throw std::invalid_argument("ladder_tree: n must be non-negative");
  return LadderTree{n};
}

struct VertexRef {
  int tree = 0;  // index into the tree list
  int pos = 0;   // 1..n for internal vertices
  auto operator<=>(const VertexRef&) const = default;
};

enum class PairingMode { Internal, Complete, ConnectedComplete };

struct Pairing {
  std::vector<LadderTree> trees;
  std::vector<std::pair<VertexRef, VertexRef>> pairs;
  bool complete = false;

  std::vector<VertexRef> unpaired() const {
    std::set<VertexRef> used;
    for (auto& [a, b] : pairs) used.insert(a), used.insert(b);
    std::vector<VertexRef> out;
    for (int t = 0; t < static_cast<int>(trees.size()); ++t)
      for (int p = 1; p <= trees[t].n; ++p)
        if (!used.count({t, p})) out.push_back({t, p});
    return out;
  }
};

struct Edge {
  int tail = 0;
  int head = 0;
  int mult = 1;
  Rational type = -2;
};

struct Leg {
  int tail = 0;
  int head = 0;
  auto operator<=>(const Leg&) const = default;
};

// Internal edges live in `edges`; anything touching a leaf is a leg. Leaves
// carry a tag that identifies them across contractions and relabellings.
struct Diagram {
  int d = 4;
  std::vector<int> internal;
  std::vector<int> leaves;
  std::vector<Edge> edges;
  std::vector<Leg> legs;
  std::map<int, std::string> tags;

  bool is_leaf(int v) const { return std::binary_search(leaves.begin(), leaves.end(), v); }
  bool is_internal(int v) const { return std::binary_search(internal.begin(), internal.end(), v); }
  bool is_vacuum() const { return legs.empty(); }
  int num_internal() const { return static_cast<int>(internal.size()); }

  int index_of(int label) const {
    auto it = std::lower_bound(internal.begin(), internal.end(), label);
    if (it == internal.end() || *it != label) return -1;
    return static_cast<int>(it - internal.begin());
  }

  int internal_edge_count() const {
    int s = 0;
    for (auto& e : edges) s += e.mult;
    return s;
  }

  std::string tag_of(int leaf) const {
    auto it = tags.find(leaf);
    return it == tags.end() ? "#" + std::to_string(leaf) : it->second;
  }

  int max_label() const {
    int m = -1;
    for (int v : internal) m = std::max(m, v);
    for (int v : leaves) m = std::max(m, v);
    return m;
  }

  // Sort everything and merge parallel edges of equal type.
  void normalize() {
    std::sort(internal.begin(), internal.end());
    std::sort(leaves.begin(), leaves.end());
    std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
      if (a.tail != b.tail) return a.tail < b.tail;
      if (a.head != b.head) return a.head < b.head;
      return a.type < b.type;
    });
    std::vector<Edge> merged;
    for (auto& e : edges) {
      if (e.mult <= 0) continue;
      if (!merged.empty() && merged.back().tail == e.tail && merged.back().head == e.head &&
          merged.back().type == e.type)
        merged.back().mult += e.mult;
      else
        merged.push_back(e);
    }
    edges = std::move(merged);
    std::sort(legs.begin(), legs.end());
    for (int l : leaves)
      if (!tags.count(l)) tags[l] = "#" + std::to_string(l);
    for (auto it = tags.begin(); it != tags.end();)
      it = is_leaf(it->first) ? std::next(it) : tags.erase(it);
  }
};

inline bool is_connected(const Diagram& d) {
  std::vector<int> all = d.internal;
  all.insert(all.end(), d.leaves.begin(), d.leaves.end());
  if (all.empty()) return true;
  std::map<int, int> parent;
  for (int v : all) parent[v] = v;
  std::function<int(int)> find = [&](int v) { return parent[v] == v ? v : parent[v] = find(parent[v]); };
  for (auto& e : d.edges) parent[find(e.tail)] = find(e.head);
  for (auto& l : d.legs) parent[find(l.tail)] = find(l.head);
  int root = find(all.front());
  return std::all_of(all.begin(), all.end(), [&](int v) { return find(v) == root; });
}

// Total graph degree (edges plus legs) of every vertex.
inline std::map<int, int> vertex_degrees(const Diagram& d) {
  std::map<int, int> deg;
  for (int v : d.internal) deg[v] = 0;
  for (int v : d.leaves) deg[v] = 0;
  for (auto& e : d.edges) deg[e.tail] += e.mult, deg[e.head] += e.mult;
  for (auto& l : d.legs) ++deg[l.tail], ++deg[l.head];
  return deg;
}

// ---------------------------------------------------------------------------
// Pairings

namespace detail {

inline void perfect_matchings(std::vector<VertexRef>& rest, std::vector<std::pair<VertexRef, VertexRef>>& cur,
                              const std::function<void(const std::vector<std::pair<VertexRef, VertexRef>>&)>& emit) {
  if (rest.empty()) {
    emit(cur);
    return;
  }
  VertexRef a = rest.front();
  for (std::size_t i = 1; i < rest.size(); ++i) {
    VertexRef b = rest[i];
    std::vector<VertexRef> next;
    next.reserve(rest.size() - 2);
    for (std::size_t j = 1; j < rest.size(); ++j)
      if (j != i) next.push_back(rest[j]);
    cur.emplace_back(a, b);
    perfect_matchings(next, cur, emit);
    cur.pop_back();
  }
}

inline void partial_matchings(std::vector<VertexRef>& rest, std::vector<std::pair<VertexRef, VertexRef>>& cur,
                              const std::function<void(const std::vector<std::pair<VertexRef, VertexRef>>&)>& emit) {
  if (rest.empty()) {
    emit(cur);
    return;
  }
  VertexRef a = rest.front();
  std::vector<VertexRef> tail(rest.begin() + 1, rest.end());
  partial_matchings(tail, cur, emit);
  for (std::size_t i = 1; i < rest.size(); ++i) {
    std::vector<VertexRef> next;
    for (std::size_t j = 1; j < rest.size(); ++j)
      if (j != i) next.push_back(rest[j]);
    cur.emplace_back(a, rest[i]);
    partial_matchings(next, cur, emit);
    cur.pop_back();
  }
}

}  // namespace detail

// Edge of a tree as it appears in the paired graph.
struct EdgeOrigin {
  int tail = 0;
  int head = 0;
  int tree = 0;
  bool leg = false;
};

struct PairedGraph {
  Diagram diagram;
  std::vector<EdgeOrigin> origins;
  std::map<VertexRef, int> label;  // every tree vertex (leaves at pos 0, n+1)
};

// Labels follow the traversal rule: walk tree 1 upwards from its bottom leaf,
// numbering each newly seen vertex, then tree 2, and so on. Unpaired internal
// vertices become noise leaves. Tags read "<tree>:<pos>" with trees counted
// from first_tree_tag.
inline PairedGraph build_with_origins(const std::vector<LadderTree>& trees, const Pairing& kappa,
                                      int first_tree_tag = 1) {
  std::map<VertexRef, VertexRef> partner;
  for (auto& [a, b] : kappa.pairs) {
    for (const VertexRef& v : {a, b}) {
      if (v.tree < 0 || v.tree >= static_cast<int>(trees.size()) || v.pos < 1 || v.pos > trees[v.tree].n)
        throw MalformedPairing("pairing references a vertex outside the trees");
      if (partner.count(v)) throw MalformedPairing("vertex paired twice");
    }
    if (a == b) throw MalformedPairing("vertex paired with itself");
    partner[a] = b;
    partner[b] = a;
  }
  PairedGraph g;
  Diagram& d = g.diagram;
  std::map<VertexRef, int> cls_label;
  int next = 0;
  auto rep = [&](VertexRef v) {
    auto it = partner.find(v);
    return it == partner.end() ? v : std::min(v, it->second);
  };
  for (int t = 0; t < static_cast<int>(trees.size()); ++t) {
    const int n = trees[t].n;
    for (int p = 0; p <= n + 1; ++p) {
      VertexRef v{t, p};
      bool leaf = (p == 0 || p == n + 1);
      VertexRef r = leaf ? v : rep(v);
      auto it = cls_label.find(r);
      int lab;
      if (it == cls_label.end()) {
        lab = next++;
        cls_label[r] = lab;
        bool noise = !leaf && !partner.count(v);
        if (leaf || noise) {
          d.leaves.push_back(lab);
          d.tags[lab] = std::to_string(t + first_tree_tag) + ":" + std::to_string(p);
        } else {
          d.internal.push_back(lab);
        }
      } else {
        lab = it->second;
      }
      g.label[v] = lab;
    }
  }
  std::sort(d.leaves.begin(), d.leaves.end());
  std::sort(d.internal.begin(), d.internal.end());
  for (int t = 0; t < static_cast<int>(trees.size()); ++t) {
    for (int p = 0; p <= trees[t].n; ++p) {
      int u = g.label[{t, p}], w = g.label[{t, p + 1}];
      bool leg = d.is_leaf(u) || d.is_leaf(w);
      if (leg)
        d.legs.push_back({u, w});
      else
        d.edges.push_back({u, w, 1, Rational(-2)});
      g.origins.push_back({u, w, t, leg});
    }
  }
  d.normalize();
  return g;
}

inline Diagram build_paired_diagram(const std::vector<LadderTree>& trees, const Pairing& kappa,
                                    int first_tree_tag = 1) {
  return build_with_origins(trees, kappa, first_tree_tag).diagram;
}

inline std::vector<Pairing> enumerate_pairings(const std::vector<LadderTree>& trees, PairingMode mode) {
  std::vector<Pairing> out;
  std::vector<VertexRef> verts;
  for (int t = 0; t < static_cast<int>(trees.size()); ++t)
    for (int p = 1; p <= trees[t].n; ++p) verts.push_back({t, p});
  std::vector<std::pair<VertexRef, VertexRef>> cur;
  if (mode == PairingMode::Internal) {
    if (trees.size() != 1) throw std::invalid_argument("Internal pairings need exactly one tree");
    detail::partial_matchings(verts, cur, [&](const auto& m) {
      out.push_back(Pairing{trees, m, 2 * m.size() == verts.size()});
    });
    return out;
  }
  if (verts.size() % 2 != 0) return out;
  detail::perfect_matchings(verts, cur, [&](const auto& m) {
    Pairing k{trees, m, true};
    if (mode == PairingMode::ConnectedComplete && !is_connected(build_paired_diagram(trees, k))) return;
    out.push_back(std::move(k));
  });
  return out;
}

// One diagram per complete pairing; isomorphic shapes are kept as separate terms.
inline std::vector<Diagram> moment_expansion(const std::vector<LadderTree>& trees) {
  std::vector<Diagram> out;
  for (auto& k : enumerate_pairings(trees, PairingMode::Complete)) out.push_back(build_paired_diagram(trees, k));
  return out;
}

inline std::vector<LadderTree> ladder_trees(const std::vector<int>& sizes) {
  std::vector<LadderTree> t;
  for (int n : sizes) t.push_back(ladder_tree(n));
  return t;
}

// Convenience: pairs given as ((tree, pos), (tree, pos)) with 0-based trees.
inline Pairing make_pairing(const std::vector<int>& sizes, const std::vector<std::pair<VertexRef, VertexRef>>& pairs) {
  Pairing k{ladder_trees(sizes), pairs, false};
  int total = std::accumulate(sizes.begin(), sizes.end(), 0);
  k.complete = 2 * static_cast<int>(pairs.size()) == total;
  return k;
}

// ---------------------------------------------------------------------------
// Isomorphism and canonical forms

struct CanonicalLabel {
  std::map<int, int> relabel;  // old label -> new label
  std::string key;             // equal keys <=> isomorphic
  Diagram diagram;             // relabelled copy
};

namespace detail {

struct Arc {
  int u, v, mult, type;
};

struct CanonSearch {
  int n = 0;                         // vertices being ordered
  std::vector<std::vector<int64_t>> base;  // colour-independent part of each signature
  std::vector<Arc> arcs;             // between ordered vertices
  std::vector<std::vector<int>> out_arcs, in_arcs;
  std::vector<int64_t> fixed_part;   // encoding of parts not involving ordered vertices
  std::vector<int64_t> best;
  std::vector<int> best_order;
  bool have_best = false;

  static std::vector<int> rerank(const std::vector<std::vector<int64_t>>& sig) {
    std::vector<int> idx(sig.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return sig[a] < sig[b]; });
    std::vector<int> col(sig.size());
    int c = 0;
    for (std::size_t i = 0; i < idx.size(); ++i) {
      if (i > 0 && sig[idx[i]] != sig[idx[i - 1]]) c = static_cast<int>(i);
      col[idx[i]] = c;
    }
    return col;
  }

  static int count_colours(const std::vector<int>& col) {
    std::set<int> s(col.begin(), col.end());
    return static_cast<int>(s.size());
  }

  void refine(std::vector<int>& col) const {
    int k = count_colours(col);
    while (true) {
      std::vector<std::vector<int64_t>> sig(n);
      for (int v = 0; v < n; ++v) {
        std::vector<int64_t>& s = sig[v];
        s.push_back(col[v]);
        std::vector<std::array<int64_t, 3>> o, i;
        for (int a : out_arcs[v]) o.push_back({col[arcs[a].v], arcs[a].mult, arcs[a].type});
        for (int a : in_arcs[v]) i.push_back({col[arcs[a].u], arcs[a].mult, arcs[a].type});
        std::sort(o.begin(), o.end());
        std::sort(i.begin(), i.end());
        s.push_back(static_cast<int64_t>(o.size()));
        for (auto& x : o) s.insert(s.end(), x.begin(), x.end());
        s.push_back(-1);
        for (auto& x : i) s.insert(s.end(), x.begin(), x.end());
      }
      col = rerank(sig);
      int k2 = count_colours(col);
      if (k2 == k) return;
      k = k2;
    }
  }

  std::vector<int64_t> encode(const std::vector<int>& order) const {
    std::vector<int64_t> code = fixed_part;
    std::vector<std::vector<int64_t>> vs(n);
    for (int v = 0; v < n; ++v) {
      vs[order[v]] = base[v];
    }
    code.push_back(n);
    for (auto& b : vs) {
      code.push_back(static_cast<int64_t>(b.size()));
      code.insert(code.end(), b.begin(), b.end());
    }
    std::vector<std::array<int64_t, 4>> a;
    for (auto& x : arcs) a.push_back({order[x.u], order[x.v], x.mult, x.type});
    std::sort(a.begin(), a.end());
    code.push_back(static_cast<int64_t>(a.size()));
    for (auto& x : a) code.insert(code.end(), x.begin(), x.end());
    return code;
  }

  void search(std::vector<int> col) {
    refine(col);
    // Discrete partition: colours are 0..n-1.
    if (count_colours(col) == n) {
      auto code = encode(col);
      if (!have_best || code < best) {
        best = std::move(code);
        best_order = col;
        have_best = true;
      }
      return;
    }
    std::map<int, std::vector<int>> cells;
    for (int v = 0; v < n; ++v) cells[col[v]].push_back(v);
    const std::vector<int>* target = nullptr;
    for (auto& [c, members] : cells)
      if (members.size() > 1) {
        target = &members;
        break;
      }
    for (int v : *target) {
      std::vector<std::vector<int64_t>> sig(n);
      for (int w = 0; w < n; ++w) sig[w] = {col[w], (w == v || col[w] != col[v]) ? 0 : 1};
      search(rerank(sig));
    }
  }
};

inline std::string code_to_string(const std::vector<int64_t>& code) {
  std::string s;
  for (auto x : code) {
    s += std::to_string(x);
    s += ',';
  }
  return s;
}

}  // namespace detail

// Canonical labelling up to isomorphism. With respect_legs, leaves are pinned
// by their tags; otherwise leaves are permuted freely along with the rest.
inline CanonicalLabel canonical_form(const Diagram& d_in, bool respect_legs = true) {
  Diagram d = d_in;
  d.normalize();
  // Type and tag dictionaries, sorted so codes do not depend on labels.
  std::set<std::string> type_set;
  for (auto& e : d.edges) type_set.insert(to_string(e.type));
  std::vector<std::string> type_list(type_set.begin(), type_set.end());
  auto type_code = [&](const Rational& t) {
    return static_cast<int>(std::lower_bound(type_list.begin(), type_list.end(), to_string(t)) - type_list.begin());
  };
  std::set<std::string> tag_set;
  for (int l : d.leaves) tag_set.insert(d.tag_of(l));
  std::vector<std::string> tag_list(tag_set.begin(), tag_set.end());
  auto tag_code = [&](int leaf) {
    return static_cast<int>(std::lower_bound(tag_list.begin(), tag_list.end(), d.tag_of(leaf)) - tag_list.begin());
  };

  detail::CanonSearch S;
  std::vector<int> verts = d.internal;
  if (!respect_legs) verts.insert(verts.end(), d.leaves.begin(), d.leaves.end());
  S.n = static_cast<int>(verts.size());
  std::map<int, int> idx;
  for (int i = 0; i < S.n; ++i) idx[verts[i]] = i;
  S.base.assign(S.n, {});
  S.out_arcs.assign(S.n, {});
  S.in_arcs.assign(S.n, {});
  for (int i = 0; i < S.n; ++i) S.base[i].push_back(d.is_leaf(verts[i]) ? 1 : 0);
  auto add_arc = [&](int u, int v, int mult, int type) {
    int a = static_cast<int>(S.arcs.size());
    S.arcs.push_back({idx[u], idx[v], mult, type});
    S.out_arcs[idx[u]].push_back(a);
    S.in_arcs[idx[v]].push_back(a);
  };
  for (auto& e : d.edges) add_arc(e.tail, e.head, e.mult, type_code(e.type));
  const int leg_type = static_cast<int>(type_list.size());
  std::vector<std::array<int64_t, 2>> leaf_leaf;
  std::vector<std::vector<std::array<int64_t, 2>>> pinned(S.n);
  for (auto& l : d.legs) {
    if (!respect_legs) {
      add_arc(l.tail, l.head, 1, leg_type);
      continue;
    }
    bool tl = d.is_leaf(l.tail), hl = d.is_leaf(l.head);
    if (tl && hl)
      leaf_leaf.push_back({tag_code(l.tail), tag_code(l.head)});
    else if (tl)
      pinned[idx[l.head]].push_back({0, tag_code(l.tail)});
    else
      pinned[idx[l.tail]].push_back({1, tag_code(l.head)});
  }
  for (int i = 0; i < S.n; ++i) {
    std::sort(pinned[i].begin(), pinned[i].end());
    S.base[i].push_back(static_cast<int64_t>(pinned[i].size()));
    for (auto& p : pinned[i]) S.base[i].insert(S.base[i].end(), p.begin(), p.end());
  }
  std::sort(leaf_leaf.begin(), leaf_leaf.end());
  S.fixed_part.push_back(d.d);
  S.fixed_part.push_back(respect_legs ? 1 : 0);
  S.fixed_part.push_back(static_cast<int64_t>(leaf_leaf.size()));
  for (auto& p : leaf_leaf) S.fixed_part.insert(S.fixed_part.end(), p.begin(), p.end());

  std::vector<int> col;
  if (S.n > 0) {
    col = detail::CanonSearch::rerank(S.base);
    S.search(col);
  }

  CanonicalLabel out;
  std::string key = detail::code_to_string(S.have_best ? S.best : S.fixed_part);
  key += "|T";
  for (auto& t : type_list) key += t + ";";
  if (respect_legs) {
    key += "|L";
    for (auto& t : tag_list) key += t + ";";
  } else {
    key += "|l" + std::to_string(d.leaves.size());
  }
  out.key = key;

  // Internal vertices first (1..m), then leaves.
  int m = d.num_internal();
  for (int i = 0; i < S.n; ++i) {
    int v = verts[i];
    int pos = S.best_order[i];
    out.relabel[v] = pos + 1;
  }
  if (respect_legs) {
    std::vector<int> ls = d.leaves;
    std::sort(ls.begin(), ls.end(), [&](int a, int b) { return d.tag_of(a) < d.tag_of(b); });
    for (std::size_t i = 0; i < ls.size(); ++i) out.relabel[ls[i]] = m + 1 + static_cast<int>(i);
  }
  Diagram r;
  r.d = d.d;
  for (int v : d.internal) r.internal.push_back(out.relabel[v]);
  for (int v : d.leaves) {
    r.leaves.push_back(out.relabel[v]);
    r.tags[out.relabel[v]] = d.tag_of(v);
  }
  for (auto& e : d.edges) r.edges.push_back({out.relabel[e.tail], out.relabel[e.head], e.mult, e.type});
  for (auto& l : d.legs) r.legs.push_back({out.relabel[l.tail], out.relabel[l.head]});
  r.normalize();
  out.diagram = std::move(r);
  return out;
}

inline bool is_isomorphic(const Diagram& a, const Diagram& b, bool respect_legs) {
  if (a.num_internal() != b.num_internal() || a.leaves.size() != b.leaves.size()) return false;
  return canonical_form(a, respect_legs).key == canonical_form(b, respect_legs).key;
}

// Relabel vertices with a map; unmapped labels keep their value.
inline Diagram relabel(const Diagram& d, const std::map<int, int>& m) {
  auto f = [&](int v) {
    auto it = m.find(v);
    return it == m.end() ? v : it->second;
  };
  Diagram r;
  r.d = d.d;
  for (int v : d.internal) r.internal.push_back(f(v));
  for (int v : d.leaves) {
    r.leaves.push_back(f(v));
    r.tags[f(v)] = d.tag_of(v);
  }
  for (auto& e : d.edges) r.edges.push_back({f(e.tail), f(e.head), e.mult, e.type});
  for (auto& l : d.legs) r.legs.push_back({f(l.tail), f(l.head)});
  r.normalize();
  return r;
}

// ---------------------------------------------------------------------------
// Built-in diagrams

inline std::vector<std::string> named_diagram_list() {
  return {"tadpole", "bubble4", "crossed4", "sunset2", "star", "nested4", "parallel", "chain2sunset", "k4"};
}

inline Pairing named_pairing(const std::string& name) {
  using P = std::pair<VertexRef, VertexRef>;
  auto v = [](int t, int p) { return VertexRef{t, p}; };
  if (name == "tadpole") return make_pairing({2}, {P{v(0, 1), v(0, 2)}});
  if (name == "bubble4") return make_pairing({2, 2}, {P{v(0, 1), v(1, 1)}, P{v(0, 2), v(1, 2)}});
  if (name == "crossed4") return make_pairing({2, 2}, {P{v(0, 1), v(1, 2)}, P{v(0, 2), v(1, 1)}});
  if (name == "sunset2") return make_pairing({4}, {P{v(0, 1), v(0, 3)}, P{v(0, 2), v(0, 4)}});
  if (name == "star") return make_pairing({1, 1}, {P{v(0, 1), v(1, 1)}});
  if (name == "nested4")
    return make_pairing({4, 4}, {P{v(0, 1), v(1, 2)}, P{v(0, 2), v(1, 3)}, P{v(0, 3), v(1, 1)}, P{v(0, 4), v(1, 4)}});
  if (name == "parallel")
    return make_pairing({4, 4}, {P{v(0, 1), v(1, 1)}, P{v(0, 2), v(1, 2)}, P{v(0, 3), v(1, 3)}, P{v(0, 4), v(1, 4)}});
  if (name == "chain2sunset")
    return make_pairing({8}, {P{v(0, 1), v(0, 3)}, P{v(0, 2), v(0, 4)}, P{v(0, 5), v(0, 7)}, P{v(0, 6), v(0, 8)}});
  // Complete graph on four vertices with four legs: the smallest primitive
  // blow-up other than the bubble.
  if (name == "k4")
    return make_pairing({4, 4}, {P{v(0, 1), v(1, 3)}, P{v(0, 2), v(1, 1)}, P{v(0, 3), v(1, 4)}, P{v(0, 4), v(1, 2)}});
  throw std::invalid_argument("unknown diagram name: " + name);
}

inline Diagram named_diagram(const std::string& name) {
  Pairing k = named_pairing(name);
  return build_paired_diagram(k.trees, k);
}

}  // namespace anderson
