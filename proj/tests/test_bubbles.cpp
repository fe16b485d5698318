#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "anderson/bubbles.hpp"

using namespace anderson;

namespace {

// |S| by repeated contraction: count every choice of bubble in every
// contracted diagram along the way.
long count_by_contraction(const Diagram& g) {
  if (g.num_internal() == 1) return g.edges.empty() ? 1 : 0;
  long s = 0;
  for (std::size_t i = 0; i < g.internal.size(); ++i)
    for (std::size_t j = i + 1; j < g.internal.size(); ++j) {
      int a = g.internal[i], b = g.internal[j], between = 0;
      for (auto& e : g.edges)
        if ((e.tail == a && e.head == b) || (e.tail == b && e.head == a)) between += e.mult;
      if (between == 2) s += count_by_contraction(contract(g, mask_of(g, {a, b})));
    }
  return s;
}

std::vector<Diagram> four_leg_diagrams(int total) {
  std::vector<Diagram> out;
  for (int n1 = 1; n1 < total; ++n1) {
    auto trees = ladder_trees({n1, total - n1});
    for (auto& k : enumerate_pairings(trees, PairingMode::ConnectedComplete))
      out.push_back(build_paired_diagram(trees, k));
  }
  return out;
}

RootedTree path(int n) {
  RootedTree t;
  for (int i = 0; i < n; ++i) t.parent.push_back(i - 1);
  return t;
}

}  // namespace

TEST_CASE("nested bubbles") {
  CHECK(is_nested_bubble(named_diagram("bubble4")));
  CHECK(is_nested_bubble(named_diagram("crossed4")));
  CHECK_FALSE(is_nested_bubble(named_diagram("sunset2")));
  CHECK_FALSE(is_nested_bubble(named_diagram("k4")));

  NestedBubbleWitness w;
  Diagram n = named_diagram("nested4");
  REQUIRE(is_nested_bubble(n, &w));
  REQUIRE(w.chain.size() == 4);
  CHECK(w.bubbles.front() == std::vector<int>{1, 2});
  for (std::size_t i = 0; i < w.chain.size(); ++i) {
    CHECK(w.chain[i].num_internal() == 4 - static_cast<int>(i));
    CHECK(degree(w.chain[i]) == 0);
  }
  CHECK(is_isomorphic(w.chain.back(), named_diagram("star"), false));
}

TEST_CASE("extraction sequence counts") {
  CHECK(count_extraction_sequences(named_diagram("bubble4")) == 1);
  CHECK(count_extraction_sequences(named_diagram("nested4")) == 1);
  CHECK(count_extraction_sequences(named_diagram("parallel")) == 6);
  CHECK(count_extraction_sequences(named_diagram("star")) == 1);
  CHECK(count_extraction_sequences(named_diagram("sunset2")) == 0);
  CHECK(extraction_sequences(named_diagram("star")).size() == 1);
  CHECK(extraction_sequences(named_diagram("star"))[0].merges.empty());

  // The chain formulation agrees with repeated contraction.
  for (int total = 2; total <= 8; total += 2)
    for (auto& d : four_leg_diagrams(total)) {
      BigInt c = count_extraction_sequences(d);
      CHECK(c == count_by_contraction(d));
      CHECK(c == static_cast<long>(extraction_sequences(d).size()));
      CHECK((c > 0) == is_nested_bubble(d));
    }
}

TEST_CASE("extraction sequence structure") {
  Diagram p = named_diagram("parallel");
  for (auto& s : extraction_sequences(p)) {
    REQUIRE(s.merges.size() == 3);
    // The first subdiagram is a single bubble, and the chain increases.
    auto first = s.blocks_after(4, 1);
    REQUIRE(first.size() == 1);
    CHECK(popcount(first[0]) == 2);
    CHECK(induced_edge_count(p, first[0]) == 2);
    for (int i = 1; i < 3; ++i) CHECK(is_subset(s.support_after(4, i), s.support_after(4, i + 1)));
  }
}

TEST_CASE("tree factorials and heap orderings") {
  CHECK(tree_factorial(path(3)) == 6);
  CHECK(heap_orderings(path(3)) == 1);
  RootedTree cherry{{-1, 0, 0}};
  CHECK(tree_factorial(cherry) == 3);
  CHECK(heap_orderings(cherry) == 2);
  CHECK(tree_factorial(path(1)) == 1);
  CHECK(heap_orderings(path(1)) == 1);

  const long expected_counts[] = {0, 1, 1, 2, 4, 9, 20, 48, 115, 286};
  for (int n = 1; n <= 9; ++n) {
    auto trees = rooted_trees(n);
    CHECK(static_cast<long>(trees.size()) == expected_counts[n]);
    for (auto& t : trees) CHECK(heap_orderings(t) == heap_orderings_brute_force(t));
  }
}

TEST_CASE("bijection between sequences and ordered trees") {
  for (auto name : {"bubble4", "crossed4", "nested4", "parallel"}) {
    auto r = bijection_report(named_diagram(name));
    CHECK(r.ok());
  }
  auto p = bijection_report(named_diagram("parallel"));
  CHECK(p.sequences == 6);
  CHECK(p.ordered_trees == 6);

  long contributing = 0;
  for (int total = 2; total <= 10; total += 2)
    for (auto& d : four_leg_diagrams(total)) {
      if (!is_contributing(d)) continue;
      ++contributing;
      auto r = bijection_report(d);
      CHECK(r.injective);
      CHECK(r.lands_in_contributing);
      CHECK(r.heap_ordered);
      CHECK(r.sequences == r.ordered_trees);
    }
  CHECK(contributing > 0);
}

TEST_CASE("sigma of a diagram") {
  auto b = sigma_gamma_squared(named_diagram("bubble4"));
  CHECK(b.q == 1);
  CHECK(b.m == 1);
  CHECK(b.to_double() == doctest::Approx(1 / (8 * std::numbers::pi * std::numbers::pi)));
  auto n = sigma_gamma_squared(named_diagram("nested4"));
  CHECK(n.q == Rational(1, 6));
  CHECK(n.m == 3);
  auto p = sigma_gamma_squared(named_diagram("parallel"));
  CHECK(p.q == 1);
  CHECK(p.m == 3);
  CHECK(sigma_gamma_squared(named_diagram("sunset2")).is_zero());
  CHECK(sigma_gamma_squared(named_diagram("k4")).is_zero());
  // Exact pi to 50 digits in the rendering.
  std::ostringstream os;
  os << std::setprecision(40) << SymbolicWeight{1, 1}.value();
  CHECK(os.str().substr(0, 30) == "0.0126651479552922214304849329");
}

TEST_CASE("contributing diagrams have four legs") {
  // One tree: every complete internal pairing is negative.
  for (int n = 2; n <= 8; n += 2) {
    auto t = ladder_trees({n});
    for (auto& k : enumerate_pairings(t, PairingMode::Complete)) {
      Diagram d = build_paired_diagram(t, k);
      CHECK(classify(d) == DegreeClass::Negative);
      CHECK_FALSE(is_contributing(d));
    }
  }
  // Three trees: degree 2, never a nested bubble.
  for (auto sizes : std::vector<std::vector<int>>{{1, 1, 2}, {2, 2, 2}, {1, 2, 3}, {1, 1, 4}}) {
    auto t = ladder_trees(sizes);
    for (auto& k : enumerate_pairings(t, PairingMode::ConnectedComplete)) {
      Diagram d = build_paired_diagram(t, k);
      CHECK(degree(d) == 2);
      CHECK_FALSE(is_nested_bubble(d));
    }
  }
  // Nested bubbles never hide a negative subdiagram.
  for (int total = 2; total <= 8; total += 2)
    for (auto& d : four_leg_diagrams(total))
      if (is_nested_bubble(d)) CHECK(classify(d) != DegreeClass::Negative);
}

TEST_CASE("effective variance coefficients") {
  auto t = sigma_eff_coefficients(5);
  REQUIRE(t.rows.size() == 5);
  long expected = 1;
  for (auto& r : t.rows) {
    CHECK(r.C == expected);
    CHECK(r.matches());
    CHECK(r.sigma_eff.m == r.n - 1);
    expected *= 4;
  }
  // Four contributing pairings at order four, one extraction sequence each.
  long count = 0;
  for (auto& c : t.rows[1].splits) count += c.contributing;
  CHECK(count == 4);
  CHECK(t.rows[1].sigma_eff.to_double() == doctest::Approx(1 / (2 * std::numbers::pi * std::numbers::pi)));

  for (auto& [nm, w] : t.pair) {
    auto [n, m] = nm;
    CHECK(t.pair.at({m, n}) == w);
    if ((n + m) % 2) CHECK(w.is_zero());
  }
  CHECK_THROWS_AS(sigma_eff_coefficients(6), BudgetExceeded);
  CHECK_THROWS_AS(sigma_eff_coefficients(7, true), BudgetExceeded);

  auto csv = sigma_table_csv(t);
  CHECK(csv.rfind("n,C_n,sigma_eff_coeff_value,expected,match\n", 0) == 0);
  CHECK(csv.find("3,16,") != std::string::npos);
}

TEST_CASE("closed form") {
  CHECK(sigma_eff_closed_form(0) == doctest::Approx(1));
  CHECK(sigma_eff_closed_form(std::numbers::pi) == doctest::Approx(2));
  CHECK(sigma_eff_closed_form(std::numbers::pi, CouplingSign::Imaginary) == doctest::Approx(2.0 / 3));
  CHECK(sigma_eff_closed_form(10, CouplingSign::Imaginary) > 0);
  CHECK_THROWS_AS(sigma_eff_closed_form(std::sqrt(2.0) * std::numbers::pi), OutOfRadius);
  CHECK_THROWS_AS(sigma_eff_closed_form(-5), OutOfRadius);

  auto t = sigma_eff_coefficients(5);
  auto real = sigma_eff_partial_sums(t, std::numbers::pi);
  for (std::size_t i = 0; i < real.size(); ++i) CHECK(2 - real[i] == doctest::Approx(std::ldexp(1.0, -int(i))));
  auto imag = sigma_eff_partial_sums(t, std::numbers::pi, CouplingSign::Imaginary);
  for (std::size_t i = 1; i < imag.size(); ++i)
    CHECK(std::abs(imag[i] - 2.0 / 3) == doctest::Approx(std::abs(imag[i - 1] - 2.0 / 3) / 2));
}
