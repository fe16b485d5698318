#pragma once

// Nested bubbles, extraction sequences, heap orderings and the variance
// coefficients they produce.

#include <boost/multiprecision/cpp_dec_float.hpp>
#include <functional>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "hepp.hpp"

namespace anderson {

using Float50 = boost::multiprecision::cpp_dec_float_50;

// q * (8 pi^2)^(-m).
struct SymbolicWeight {
  Rational q = 0;
  int m = 0;

  bool is_zero() const { return q == 0; }

  Float50 value() const {
    Float50 pi = boost::math::constants::pi<Float50>();
    Float50 v = Float50(q.get_num().get_str()) / Float50(q.get_den().get_str());
    return v / pow(8 * pi * pi, m);
  }
  double to_double() const { return static_cast<double>(value()); }

  SymbolicWeight& operator+=(const SymbolicWeight& o) {
    if (o.is_zero()) return *this;
    if (is_zero()) return *this = o;
    if (o.m != m) throw std::invalid_argument("SymbolicWeight: adding different powers of 8 pi^2");
    q += o.q;
    return *this;
  }

  bool operator==(const SymbolicWeight& o) const { return q == o.q && (q == 0 || m == o.m); }
};

// ---------------------------------------------------------------------------
// Extraction sequences as chains of block partitions

// A partition of the internal vertices into blocks (vertex masks), sorted.
using Blocks = std::vector<VMask>;

// One extraction sequence: the two blocks merged at each step. The i-th
// subdiagram of the sequence is the union of non-singleton blocks after i
// merges, with the edges inside blocks.
struct ExtractionSequence {
  std::vector<std::pair<VMask, VMask>> merges;

  // Vertex sets of the non-singleton blocks after `step` merges (1-based).
  Blocks blocks_after(int num_internal, int step) const {
    Blocks b;
    for (int i = 0; i < num_internal; ++i) b.push_back(VMask{1} << i);
    for (int s = 0; s < step; ++s) {
      auto [x, y] = merges[s];
      b.erase(std::remove_if(b.begin(), b.end(), [&](VMask z) { return z == x || z == y; }), b.end());
      b.push_back(x | y);
    }
    Blocks out;
    for (VMask z : b)
      if (popcount(z) > 1) out.push_back(z);
    std::sort(out.begin(), out.end());
    return out;
  }

  VMask support_after(int num_internal, int step) const {
    VMask m = 0;
    for (VMask z : blocks_after(num_internal, step)) m |= z;
    return m;
  }
};

namespace detail {

inline int edges_between(const Diagram& d, VMask a, VMask b) {
  int s = 0;
  for (auto& e : d.edges) {
    bool ta = in_mask(d, a, e.tail), ha = in_mask(d, a, e.head);
    bool tb = in_mask(d, b, e.tail), hb = in_mask(d, b, e.head);
    if ((ta && hb) || (tb && ha)) s += e.mult;
  }
  return s;
}

// Pairs of blocks that form a bubble in the contracted diagram.
inline std::vector<std::pair<VMask, VMask>> bubble_moves(const Diagram& d, const Blocks& b) {
  std::vector<std::pair<VMask, VMask>> out;
  for (std::size_t i = 0; i < b.size(); ++i)
    for (std::size_t j = i + 1; j < b.size(); ++j)
      if (edges_between(d, b[i], b[j]) == 2) out.push_back({b[i], b[j]});
  return out;
}

inline Blocks merged(Blocks b, VMask x, VMask y) {
  b.erase(std::remove_if(b.begin(), b.end(), [&](VMask z) { return z == x || z == y; }), b.end());
  b.push_back(x | y);
  std::sort(b.begin(), b.end());
  return b;
}

inline Blocks singletons(const Diagram& d) {
  Blocks b;
  for (int i = 0; i < d.num_internal(); ++i) b.push_back(VMask{1} << i);
  return b;
}

}  // namespace detail

// |S(d)| by dynamic programming over partitions.
inline BigInt count_extraction_sequences(const Diagram& d) {
  if (d.num_internal() == 0) return 0;
  std::map<Blocks, BigInt> memo;
  std::function<BigInt(const Blocks&)> count = [&](const Blocks& b) -> BigInt {
    if (b.size() == 1) return 1;
    auto it = memo.find(b);
    if (it != memo.end()) return it->second;
    BigInt s = 0;
    for (auto [x, y] : detail::bubble_moves(d, b)) s += count(detail::merged(b, x, y));
    memo[b] = s;
    return s;
  };
  return count(detail::singletons(d));
}

// Every extraction sequence; the list can be large, so callers cap the size.
inline std::vector<ExtractionSequence> extraction_sequences(const Diagram& d, std::size_t limit = 1000000) {
  std::vector<ExtractionSequence> out;
  if (d.num_internal() == 0) return out;
  ExtractionSequence cur;
  std::function<void(const Blocks&)> rec = [&](const Blocks& b) {
    if (b.size() == 1) {
      if (out.size() == limit) throw BudgetExceeded("extraction_sequences: too many sequences");
      out.push_back(cur);
      return;
    }
    for (auto [x, y] : detail::bubble_moves(d, b)) {
      cur.merges.push_back({x, y});
      rec(detail::merged(b, x, y));
      cur.merges.pop_back();
    }
  };
  rec(detail::singletons(d));
  return out;
}

struct NestedBubbleWitness {
  std::vector<Diagram> chain;            // Gamma_1 = d, ..., Gamma_n = star
  std::vector<std::vector<int>> bubbles;  // vertex labels of the bubble in Gamma_i
};

inline bool is_nested_bubble(const Diagram& d, NestedBubbleWitness* witness = nullptr) {
  if (d.num_internal() == 0) return false;
  // Depth-first search for one complete chain.
  std::set<Blocks> dead;
  std::vector<std::pair<VMask, VMask>> path;
  std::function<bool(const Blocks&)> rec = [&](const Blocks& b) {
    if (b.size() == 1) return true;
    if (dead.count(b)) return false;
    for (auto [x, y] : detail::bubble_moves(d, b)) {
      path.push_back({x, y});
      if (rec(detail::merged(b, x, y))) return true;
      path.pop_back();
    }
    dead.insert(b);
    return false;
  };
  if (!rec(detail::singletons(d))) return false;
  if (witness) {
    witness->chain = {d};
    witness->bubbles.clear();
    Diagram g = d;
    for (auto [x, y] : path) {
      // Each block has been contracted into its smallest label.
      int vx = labels_of(d, x).front(), vy = labels_of(d, y).front();
      witness->bubbles.push_back({std::min(vx, vy), std::max(vx, vy)});
      g = contract(g, mask_of(g, {vx, vy}));
      witness->chain.push_back(g);
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// Rooted trees, heap orderings and tree factorials

// Rooted tree as a parent array; node 0 is the root and parent[0] = -1.
struct RootedTree {
  std::vector<int> parent;

  int size() const { return static_cast<int>(parent.size()); }
  std::vector<std::vector<int>> children() const {
    std::vector<std::vector<int>> c(parent.size());
    for (int v = 1; v < size(); ++v) c[parent[v]].push_back(v);
    return c;
  }
};

// tau! = |tau| * prod over subtrees.
inline BigInt tree_factorial(const RootedTree& t) {
  auto ch = t.children();
  std::function<std::pair<int, BigInt>(int)> rec = [&](int v) -> std::pair<int, BigInt> {
    int size = 1;
    BigInt f = 1;
    for (int c : ch[v]) {
      auto [s, g] = rec(c);
      size += s;
      f *= g;
    }
    return {size, f * size};
  };
  return t.size() == 0 ? BigInt(1) : rec(0).second;
}

// |t|! / t!.
inline BigInt heap_orderings(const RootedTree& t) { return factorial(t.size()) / tree_factorial(t); }

// Count by listing every labelling: labels 1, 2, ... go to nodes whose
// descendants are all labelled (ancestors must carry larger labels).
inline BigInt heap_orderings_brute_force(const RootedTree& t) {
  auto ch = t.children();
  std::vector<int> pending(t.size());
  for (int v = 0; v < t.size(); ++v) pending[v] = static_cast<int>(ch[v].size());
  std::vector<bool> used(t.size(), false);
  long count = 0;
  std::function<void(int)> rec = [&](int placed) {
    if (placed == t.size()) {
      ++count;
      return;
    }
    for (int v = 0; v < t.size(); ++v) {
      if (used[v] || pending[v] != 0) continue;
      used[v] = true;
      if (v > 0) --pending[t.parent[v]];
      rec(placed + 1);
      if (v > 0) ++pending[t.parent[v]];
      used[v] = false;
    }
  };
  rec(0);
  return count;
}

// The inner nodes of a Hepp tree as a rooted tree.
inline RootedTree inner_tree(const HeppTree& t) {
  const auto& inner = t.inner();  // parents first
  std::map<int, int> idx;
  RootedTree r;
  for (int u : inner) {
    idx[u] = static_cast<int>(r.parent.size());
    int p = t.nodes()[u].parent;
    r.parent.push_back(p < 0 ? -1 : idx.at(p));
  }
  return r;
}

// All unlabelled rooted trees with n nodes, each once.
inline std::vector<RootedTree> rooted_trees(int n) {
  // Canonical string: "(" + sorted children strings + ")".
  std::map<int, std::vector<std::string>> by_size;
  by_size[1] = {"()"};
  for (int s = 2; s <= n; ++s) {
    std::set<std::string> shapes;
    // Children multisets with total size s - 1, built in non-increasing order.
    std::vector<std::string> cur;
    std::function<void(int, std::string)> rec = [&](int left, std::string maxs) {
      if (left == 0) {
        std::string c = "(";
        for (auto& x : cur) c += x;
        shapes.insert(c + ")");
        return;
      }
      for (int k = 1; k <= left; ++k)
        for (auto& x : by_size[k]) {
          if (!maxs.empty() && x > maxs) continue;
          cur.push_back(x);
          rec(left - k, x);
          cur.pop_back();
        }
    };
    rec(s - 1, "");
    by_size[s] = {shapes.begin(), shapes.end()};
  }
  std::vector<RootedTree> out;
  if (n < 1) return out;
  for (auto& code : by_size[n]) {
    RootedTree t;
    std::vector<int> stack;
    for (char c : code) {
      if (c == '(') {
        t.parent.push_back(stack.empty() ? -1 : stack.back());
        stack.push_back(t.size() - 1);
      } else {
        stack.pop_back();
      }
    }
    out.push_back(t);
  }
  return out;
}

// ---------------------------------------------------------------------------
// The bijection between extraction sequences and ordered contributing trees

struct OrderedTree {
  std::string tree;
  std::vector<int> order;  // step index of each inner node, in HeppTree::inner() order

  auto operator<=>(const OrderedTree&) const = default;
};

// Grafting map: each merge becomes an inner node labelled by its step.
inline OrderedTree sequence_to_tree(const Diagram& d, const ExtractionSequence& s) {
  std::map<VMask, HeppTree> forest;
  std::map<std::vector<int>, int> step_of;  // inner node leaf set -> step
  for (int i = 0; i < d.num_internal(); ++i) forest[VMask{1} << i] = HeppTree::leaf(d.internal[i]);
  int step = 0;
  for (auto [x, y] : s.merges) {
    HeppTree t = HeppTree::join(forest.at(x), forest.at(y));
    forest.erase(x);
    forest.erase(y);
    forest[x | y] = t;
    step_of[labels_of(d, x | y)] = ++step;
  }
  const HeppTree& t = forest.begin()->second;
  OrderedTree o;
  o.tree = t.str();
  for (int u : t.inner()) o.order.push_back(step_of.at(t.below(u)));
  return o;
}

struct BijectionReport {
  BigInt sequences = 0;
  BigInt ordered_trees = 0;  // sum over contributing trees of heap orderings
  bool injective = true;
  bool lands_in_contributing = true;
  bool heap_ordered = true;
  bool ok() const { return sequences == ordered_trees && injective && lands_in_contributing && heap_ordered; }
};

inline BijectionReport bijection_report(const Diagram& d) {
  BijectionReport r;
  auto trees = d.num_internal() >= 2 ? contributing_trees(d) : std::vector<HeppTree>{};
  std::set<std::string> contributing;
  for (auto& t : trees) {
    contributing.insert(t.str());
    r.ordered_trees += heap_orderings(inner_tree(t));
  }
  if (d.num_internal() == 1) r.ordered_trees = 1;  // empty tree, empty ordering
  auto seqs = extraction_sequences(d);
  r.sequences = static_cast<long>(seqs.size());
  std::set<OrderedTree> images;
  if (d.num_internal() >= 2)
    for (auto& s : seqs) {
      OrderedTree o = sequence_to_tree(d, s);
      if (!images.insert(o).second) r.injective = false;
      if (!contributing.count(o.tree)) r.lands_in_contributing = false;
      HeppTree t = parse_hepp_tree(o.tree);
      const auto& inner = t.inner();
      for (std::size_t a = 0; a < inner.size(); ++a)
        for (std::size_t b = 0; b < inner.size(); ++b)
          if (t.precedes(inner[a], inner[b]) && o.order[a] < o.order[b]) r.heap_ordered = false;
    }
  return r;
}

inline bool bijection_check(const Diagram& d) { return bijection_report(d).ok(); }

// ---------------------------------------------------------------------------
// Variance coefficients

// Connected, zero degree, nested bubble: the combinatorial description of a
// contributing pairing. The one-vertex star counts (degree 0, no edges).
inline bool is_contributing(const Diagram& d) {
  return d.legs.size() == 4 && is_connected(d) && degree(d) == 0 && classify(d) != DegreeClass::Negative &&
         is_nested_bubble(d);
}

inline SymbolicWeight sigma_gamma_squared(const Diagram& d) {
  if (!is_contributing(d)) return {};
  const int m = d.num_internal() - 1;
  return {Rational(count_extraction_sequences(d)) / Rational(factorial(m)), m};
}

struct PairCoefficient {
  int n1 = 0, n2 = 0;
  long pairings = 0;      // connected complete pairings
  long contributing = 0;
  SymbolicWeight sigma;   // sigma^2_{n1,n2}
};

// sigma^2_{n1,n2}: sum over contributing pairings of (I_n1, I_n2).
inline PairCoefficient sigma_pair(int n1, int n2) {
  PairCoefficient c;
  c.n1 = n1;
  c.n2 = n2;
  auto trees = ladder_trees({n1, n2});
  for (auto& k : enumerate_pairings(trees, PairingMode::ConnectedComplete)) {
    ++c.pairings;
    Diagram d = build_paired_diagram(trees, k);
    SymbolicWeight w = sigma_gamma_squared(d);
    if (w.is_zero()) continue;
    ++c.contributing;
    c.sigma += w;
  }
  if (c.sigma.is_zero()) c.sigma.m = (n1 + n2) / 2 - 1;
  return c;
}

struct SigmaRow {
  int n = 0;                 // sigma_eff^{2,(2n)}
  Rational C = 0;            // sum of |S|/(n-1)! over contributing pairings
  SymbolicWeight sigma_eff;  // C (8 pi^2)^{-(n-1)}
  std::vector<PairCoefficient> splits;
  BigInt expected() const { return ipow(4, static_cast<unsigned>(n - 1)); }
  bool matches() const { return C == Rational(expected()); }
};

struct SigmaTable {
  std::vector<SigmaRow> rows;
  // sigma^2_{n,m} by (n, m), including odd n + m (always zero).
  std::map<std::pair<int, int>, SymbolicWeight> pair;
};

inline constexpr int kDefaultSigmaBudget = 5;

inline SigmaTable sigma_eff_coefficients(int n_max, bool allow_six = false) {
  const int budget = allow_six ? 6 : kDefaultSigmaBudget;
  if (n_max < 1) throw std::invalid_argument("sigma_eff_coefficients: n_max must be positive");
  if (n_max > budget) throw BudgetExceeded("sigma_eff_coefficients: n_max above the enumeration budget");
  SigmaTable t;
  for (int n = 1; n <= n_max; ++n) {
    SigmaRow row;
    row.n = n;
    row.sigma_eff.m = n - 1;
    for (int n1 = 1; n1 < 2 * n; ++n1) {
      PairCoefficient c = sigma_pair(n1, 2 * n - n1);
      row.sigma_eff += c.sigma;
      t.pair[{n1, 2 * n - n1}] = c.sigma;
      row.splits.push_back(c);
    }
    row.C = row.sigma_eff.q;
    if (row.sigma_eff.is_zero()) row.sigma_eff.m = n - 1;
    t.rows.push_back(row);
  }
  // Odd total order: no complete pairing of an odd number of vertices.
  for (int s = 3; s <= 2 * n_max; s += 2)
    for (int n1 = 1; n1 < s; ++n1) t.pair[{n1, s - n1}] = SymbolicWeight{0, (s - 1) / 2};
  return t;
}

inline std::string sigma_table_csv(const SigmaTable& t) {
  std::ostringstream os;
  os << "n,C_n,sigma_eff_coeff_value,expected,match\n";
  for (auto& r : t.rows)
    os << r.n << ',' << to_string(r.C) << ',' << std::setprecision(17) << r.sigma_eff.to_double() << ','
       << r.expected().get_str() << ',' << (r.matches() ? "true" : "false") << '\n';
  return os.str();
}

enum class CouplingSign { Real, Imaginary };

inline double sigma_eff_closed_form(double lambda_hat, CouplingSign sign = CouplingSign::Real) {
  const double two_pi2 = 2 * std::numbers::pi * std::numbers::pi;
  const double l2 = lambda_hat * lambda_hat;
  if (sign == CouplingSign::Real) {
    if (l2 >= two_pi2) throw OutOfRadius("sigma_eff_closed_form: |lambda| must be below sqrt(2) pi");
    return two_pi2 / (two_pi2 - l2);
  }
  return two_pi2 / (two_pi2 + l2);
}

// Partial sums sum_{n <= N} sigma_eff^{2,(2n)} lambda^{2n-2} (alternating in
// the imaginary case) for N = 1..rows.
inline std::vector<double> sigma_eff_partial_sums(const SigmaTable& t, double lambda_hat,
                                                  CouplingSign sign = CouplingSign::Real) {
  std::vector<double> out;
  double s = 0;
  for (auto& r : t.rows) {
    double term = r.sigma_eff.to_double() * std::pow(lambda_hat, 2 * r.n - 2);
    if (sign == CouplingSign::Imaginary && (r.n - 1) % 2) term = -term;
    s += term;
    out.push_back(s);
  }
  return out;
}

}  // namespace anderson
