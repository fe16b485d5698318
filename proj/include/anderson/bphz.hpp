#pragma once

// Contraction, forest extraction and the forest formula as exact formal sums.

#include <map>
#include <string>
#include <vector>

#include "degrees.hpp"

namespace anderson {

// A subdiagram given explicitly by vertices and edges, as a user would pass it.
struct Subdiagram {
  std::vector<int> vertices;
  std::vector<Edge> edges;
};

namespace detail {

// Merge the connected vertex set m into its smallest label.
inline Diagram contract_connected(const Diagram& d, VMask m) {
  auto vs = labels_of(d, m);
  if (vs.empty()) return d;
  const int star = vs.front();
  auto in = [&](int v) { return in_mask(d, m, v); };
  Diagram r;
  r.d = d.d;
  for (int v : d.internal)
    if (!in(v) || v == star) r.internal.push_back(v);
  r.leaves = d.leaves;
  r.tags = d.tags;
  for (auto& e : d.edges) {
    bool t = in(e.tail), h = in(e.head);
    if (t && h) continue;
    r.edges.push_back({t ? star : e.tail, h ? star : e.head, e.mult, e.type});
  }
  for (auto& l : d.legs) r.legs.push_back({in(l.tail) ? star : l.tail, in(l.head) ? star : l.head});
  r.normalize();
  return r;
}

}  // namespace detail

// Contract the full subdiagram on m; components are contracted one at a time.
inline Diagram contract(const Diagram& d, VMask m) {
  std::vector<std::vector<int>> comps;
  for (VMask c : components(d, m)) comps.push_back(labels_of(d, c));
  Diagram r = d;
  // Labels survive contraction (each component keeps its minimum), so the
  // remaining components can be located again by label.
  for (auto& c : comps) r = detail::contract_connected(r, mask_of(r, c));
  return r;
}

inline Diagram contract(const Diagram& d, const Subdiagram& sub) {
  VMask m = mask_of(d, sub.vertices);
  Diagram given;
  given.d = d.d;
  given.internal = sub.vertices;
  given.edges = sub.edges;
  given.normalize();
  Diagram induced = induced_subdiagram(d, m);
  auto same = [](const std::vector<Edge>& a, const std::vector<Edge>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
      if (a[i].tail != b[i].tail || a[i].head != b[i].head || a[i].mult != b[i].mult || a[i].type != b[i].type)
        return false;
    return true;
  };
  if (!same(given.edges, induced.edges)) throw NotFull("contract: subdiagram is not full");
  return contract(d, m);
}

// ---------------------------------------------------------------------------
// Products and formal sums

struct DiagramProduct {
  std::vector<Diagram> factors;
};

struct Term {
  Rational coeff;
  DiagramProduct product;
};

// Unreduced list of terms; reduce() merges isomorphic products.
struct FormalSum {
  std::vector<Term> terms;

  std::size_t size() const { return terms.size(); }
  bool empty() const { return terms.empty(); }

  FormalSum& operator+=(const FormalSum& o) {
    terms.insert(terms.end(), o.terms.begin(), o.terms.end());
    return *this;
  }
  friend FormalSum operator+(FormalSum a, const FormalSum& b) { return a += b; }
  friend FormalSum operator*(const Rational& c, FormalSum a) {
    for (auto& t : a.terms) t.coeff *= c;
    return a;
  }
  friend FormalSum operator-(const FormalSum& a) { return Rational(-1) * a; }
};

// Remove self-loops from a factor. A self-loop only contributes the constant
// value of its kernel at the origin, so it is split off as its own one-vertex
// vacuum factor. Vacuum factors with a single vertex and no edges have value
// one and are dropped.
inline std::vector<Diagram> split_loops(const Diagram& f) {
  std::vector<Diagram> out;
  Diagram g = f;
  g.edges.clear();
  for (auto& e : f.edges) {
    if (e.tail != e.head) {
      g.edges.push_back(e);
      continue;
    }
    for (int k = 0; k < e.mult; ++k) {
      Diagram loop;
      loop.d = f.d;
      loop.internal = {1};
      loop.edges = {{1, 1, 1, e.type}};
      out.push_back(loop);
    }
  }
  g.normalize();
  if (g.is_vacuum()) {
    // Split vacuum factors into components; isolated vertices drop out.
    for (VMask c : components(g, full_mask(g))) {
      if (popcount(c) == 1 && induced_edge_count(g, c) == 0) continue;
      out.push_back(induced_subdiagram(g, c));
    }
  } else {
    out.push_back(g);
  }
  return out;
}

struct ProductKey {
  std::string legged;               // empty when the product has no legs
  std::vector<std::string> vacuum;  // sorted
  std::string str() const {
    std::string s = "L{" + legged + "}";
    for (auto& v : vacuum) s += "V{" + v + "}";
    return s;
  }
};

// Normal form of a product: the legged factor first, then vacuum factors in
// key order, loops split off.
inline DiagramProduct normal_form(const DiagramProduct& p, ProductKey* key = nullptr) {
  std::vector<Diagram> legged;
  std::vector<std::pair<std::string, Diagram>> vac;
  for (auto& f : p.factors)
    for (auto& g : split_loops(f)) {
      if (g.is_vacuum())
        vac.emplace_back(canonical_form(g, false).key, g);
      else
        legged.push_back(g);
    }
  Diagram joint;
  if (legged.size() > 1) {
    // Several legged factors are one disconnected legged diagram.
    joint = legged.front();
    for (std::size_t i = 1; i < legged.size(); ++i) {
      int off = joint.max_label() + 1;
      std::map<int, int> shift;
      for (int v : legged[i].internal) shift[v] = v + off;
      for (int v : legged[i].leaves) shift[v] = v + off;
      Diagram s = relabel(legged[i], shift);
      joint.internal.insert(joint.internal.end(), s.internal.begin(), s.internal.end());
      joint.leaves.insert(joint.leaves.end(), s.leaves.begin(), s.leaves.end());
      joint.edges.insert(joint.edges.end(), s.edges.begin(), s.edges.end());
      joint.legs.insert(joint.legs.end(), s.legs.begin(), s.legs.end());
      joint.tags.insert(s.tags.begin(), s.tags.end());
    }
    joint.normalize();
    legged = {joint};
  }
  std::sort(vac.begin(), vac.end(), [](auto& a, auto& b) { return a.first < b.first; });
  DiagramProduct out;
  ProductKey k;
  if (!legged.empty()) {
    auto c = canonical_form(legged.front(), true);
    k.legged = c.key;
    out.factors.push_back(c.diagram);
  }
  for (auto& [s, g] : vac) {
    k.vacuum.push_back(s);
    out.factors.push_back(canonical_form(g, false).diagram);
  }
  if (key) *key = k;
  return out;
}

inline FormalSum reduce(const FormalSum& fs) {
  std::map<std::string, Term> acc;
  for (auto& t : fs.terms) {
    ProductKey k;
    DiagramProduct p = normal_form(t.product, &k);
    auto [it, fresh] = acc.try_emplace(k.str(), Term{0, p});
    it->second.coeff += t.coeff;
  }
  FormalSum out;
  for (auto& [k, t] : acc)
    if (t.coeff != 0) out.terms.push_back(t);
  return out;
}

inline bool is_formally_zero(const FormalSum& fs) { return reduce(fs).empty(); }

// Equal after reduction.
inline bool formally_equal(const FormalSum& a, const FormalSum& b) { return is_formally_zero(a + (-b)); }

// Every edge and leg doubled with its reverse; isomorphism of the results is
// isomorphism of the underlying undirected multigraphs.
inline Diagram symmetrized(const Diagram& d) {
  Diagram s = d;
  for (auto& e : d.edges)
    if (e.tail != e.head) s.edges.push_back({e.head, e.tail, e.mult, e.type});
  for (auto& l : d.legs) s.legs.push_back({l.head, l.tail});
  s.normalize();
  return s;
}

// Merge terms whose products have equal valuations for every translation
// invariant test function: factors compared as undirected multigraphs with
// legs free. Coarser than reduce().
inline FormalSum group_by_value(const FormalSum& fs) {
  std::map<std::string, Term> acc;
  for (auto& t : reduce(fs).terms) {
    std::vector<std::string> keys;
    for (auto& f : t.product.factors) keys.push_back((f.is_vacuum() ? "V" : "L") + canonical_form(symmetrized(f), false).key);
    std::sort(keys.begin(), keys.end());
    std::string k;
    for (auto& x : keys) k += x + "&";
    auto [it, fresh] = acc.try_emplace(k, Term{0, t.product});
    it->second.coeff += t.coeff;
  }
  FormalSum out;
  for (auto& [k, t] : acc)
    if (t.coeff != 0) out.terms.push_back(t);
  return out;
}

// ---------------------------------------------------------------------------
// Extraction

namespace detail {

inline void extract_rec(const Diagram& g, const std::vector<std::vector<int>>& forest, std::vector<Diagram>& out) {
  // Roots are the maximal members.
  auto inside = [](const std::vector<int>& a, const std::vector<int>& b) {
    return std::includes(b.begin(), b.end(), a.begin(), a.end());
  };
  std::vector<std::vector<int>> roots;
  for (auto& a : forest) {
    bool maximal = true;
    for (auto& b : forest)
      if (&a != &b && a != b && inside(a, b)) maximal = false;
    if (maximal) roots.push_back(a);
  }
  Diagram rest = g;
  for (auto& r : roots) {
    VMask m = mask_of(g, r);
    std::vector<std::vector<int>> sub;
    for (auto& a : forest)
      if (a != r && inside(a, r)) sub.push_back(a);
    extract_rec(induced_subdiagram(g, m), sub, out);
    rest = detail::contract_connected(rest, mask_of(rest, r));
  }
  out.push_back(rest);
}

}  // namespace detail

inline void validate_forest(const Diagram& d, const Forest& f) {
  if (!is_forest(f)) throw InvalidForest("forest members must be distinct and nested or disjoint");
  for (VMask m : f)
    if (m == 0 || !is_subset(m, full_mask(d)) || !is_connected_subset(d, m))
      throw InvalidForest("forest member is not a connected vertex set of the diagram");
}

// Extracted divergences (recursively) times the contracted remainder, which
// is always the last factor.
inline DiagramProduct extract(const Diagram& d, const Forest& f) {
  validate_forest(d, f);
  std::vector<std::vector<int>> sets;
  for (VMask m : f) sets.push_back(labels_of(d, m));
  DiagramProduct p;
  detail::extract_rec(d, sets, p.factors);
  return p;
}

// Sum over forests of (-1)^|F| times the extraction; unreduced, one term per forest.
inline FormalSum zimmermann(const Diagram& d) {
  FormalSum fs;
  for (auto& f : enumerate_forests(d))
    fs.terms.push_back({Rational(f.size() % 2 ? -1 : 1), extract(d, f)});
  return fs;
}

inline FormalSum renormalise_tree(const LadderTree& t, const Pairing& kappa_int, int tree_tag = 1) {
  return zimmermann(build_paired_diagram({t}, kappa_int, tree_tag));
}

inline FormalSum renormalised_moment_expansion(const std::vector<LadderTree>& trees) {
  FormalSum fs;
  for (auto& k : enumerate_pairings(trees, PairingMode::Complete)) fs += zimmermann(build_paired_diagram(trees, k));
  return fs;
}

// ---------------------------------------------------------------------------
// Assembly from renormalised trees

// Disjoint union of legged diagrams, then every pair of leaf tags in `glue`
// becomes one internal vertex. Legs whose ends are both internal afterwards
// turn into internal edges.
inline Diagram glue_leaves(const std::vector<Diagram>& parts, const std::vector<std::pair<std::string, std::string>>& glue) {
  Diagram u;
  for (auto& p : parts) {
    int off = u.max_label() + 1;
    std::map<int, int> shift;
    for (int v : p.internal) shift[v] = v + off;
    for (int v : p.leaves) shift[v] = v + off;
    Diagram s = relabel(p, shift);
    u.d = p.d;
    u.internal.insert(u.internal.end(), s.internal.begin(), s.internal.end());
    u.leaves.insert(u.leaves.end(), s.leaves.begin(), s.leaves.end());
    u.edges.insert(u.edges.end(), s.edges.begin(), s.edges.end());
    u.legs.insert(u.legs.end(), s.legs.begin(), s.legs.end());
    u.tags.insert(s.tags.begin(), s.tags.end());
  }
  u.normalize();
  std::map<std::string, int> by_tag;
  for (int l : u.leaves) by_tag[u.tag_of(l)] = l;
  std::map<int, int> merge;
  int next = u.max_label() + 1;
  for (auto& [a, b] : glue) {
    auto ia = by_tag.find(a), ib = by_tag.find(b);
    if (ia == by_tag.end() || ib == by_tag.end()) throw MalformedPairing("glue: no leaf with tag " + a + " or " + b);
    merge[ia->second] = next;
    merge[ib->second] = next;
    ++next;
  }
  Diagram r;
  r.d = u.d;
  r.internal = u.internal;
  for (int l : u.leaves)
    if (!merge.count(l)) r.leaves.push_back(l), r.tags[l] = u.tag_of(l);
  for (int i = u.max_label() + 1; i < next; ++i) r.internal.push_back(i);
  std::sort(r.internal.begin(), r.internal.end());
  auto f = [&](int v) {
    auto it = merge.find(v);
    return it == merge.end() ? v : it->second;
  };
  r.edges = u.edges;
  for (auto& l : u.legs) {
    int a = f(l.tail), b = f(l.head);
    if (r.is_internal(a) && r.is_internal(b))
      r.edges.push_back({a, b, 1, Rational(-2)});
    else
      r.legs.push_back({a, b});
  }
  r.normalize();
  return r;
}

struct PairingSplit {
  Pairing first, second;                                        // internal pairings of each tree
  std::vector<std::pair<std::string, std::string>> external;   // noise-leaf tags to glue
};

// Split a complete pairing of two trees into the two internal pairings and
// the cross pairs.
inline PairingSplit split_pairing(const std::vector<LadderTree>& trees, const Pairing& k) {
  if (trees.size() != 2) throw std::invalid_argument("split_pairing needs two trees");
  PairingSplit s;
  s.first.trees = {trees[0]};
  s.second.trees = {trees[1]};
  for (auto [a, b] : k.pairs) {
    if (a.tree == b.tree) {
      Pairing& p = a.tree == 0 ? s.first : s.second;
      p.pairs.push_back({{0, a.pos}, {0, b.pos}});
    } else {
      if (a.tree > b.tree) std::swap(a, b);
      s.external.emplace_back("1:" + std::to_string(a.pos), "2:" + std::to_string(b.pos));
    }
  }
  return s;
}

// The product of the two renormalised trees, paired externally by kappa.
inline FormalSum assembled_from_trees(const std::vector<LadderTree>& trees, const Pairing& k) {
  auto s = split_pairing(trees, k);
  FormalSum r1 = renormalise_tree(trees[0], s.first, 1);
  FormalSum r2 = renormalise_tree(trees[1], s.second, 2);
  FormalSum out;
  for (auto& a : r1.terms)
    for (auto& b : r2.terms) {
      // The remainder (legged) is the last factor of each extraction.
      DiagramProduct p;
      p.factors.assign(a.product.factors.begin(), a.product.factors.end() - 1);
      p.factors.insert(p.factors.end(), b.product.factors.begin(), b.product.factors.end() - 1);
      p.factors.push_back(glue_leaves({a.product.factors.back(), b.product.factors.back()}, s.external));
      out.terms.push_back({a.coeff * b.coeff, p});
    }
  return out;
}

inline FormalSum assembled_moment_expansion(const std::vector<LadderTree>& trees) {
  FormalSum fs;
  for (auto& k : enumerate_pairings(trees, PairingMode::Complete)) fs += assembled_from_trees(trees, k);
  return fs;
}

}  // namespace anderson
