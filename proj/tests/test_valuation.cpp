#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "anderson/valuation.hpp"

using namespace anderson;

namespace {

const double kLog2Coeff = std::log(2.0) / (8 * kPi * kPi);

MCConfig small(std::size_t samples = 20000, std::uint64_t seed = 1) {
  MCConfig c;
  c.samples = samples;
  c.seed = seed;
  return c;
}

Diagram edge_diagram(bool with_legs) {
  Diagram d;
  d.internal = {1, 2};
  d.edges = {{1, 2, 1, -2}};
  if (with_legs) {
    d.leaves = {3, 4};
    d.legs = {{3, 1}, {2, 4}};
  }
  d.normalize();
  return d;
}

Diagram self_loop() {
  Diagram d;
  d.internal = {1};
  d.edges = {{1, 1, 1, -2}};
  d.normalize();
  return d;
}

Diagram positive_triangle() {
  for (auto sizes : std::vector<std::vector<int>>{{1, 2, 1}, {2, 2, 2}}) {
    auto t = ladder_trees(sizes);
    for (auto& k : enumerate_pairings(t, PairingMode::ConnectedComplete)) {
      Diagram d = build_paired_diagram(t, k);
      if (d.num_internal() == 3 && classify(d) == DegreeClass::Positive) return d;
    }
  }
  FAIL("no positive triangle");
  return {};
}

Diagram reversed(Diagram d) {
  for (auto& e : d.edges) std::swap(e.tail, e.head);
  for (auto& l : d.legs) std::swap(l.tail, l.head);
  d.normalize();
  return d;
}

bool within(const ValuationResult& r, double target, double sigmas = 3, double slack = 0) {
  return std::abs(r.estimate - target) <= sigmas * r.standard_error + slack;
}

}  // namespace

TEST_CASE("counter based streams") {
  CounterRng a(5, 0), b(5, 0), c(5, 1), d(6, 0);
  for (int i = 0; i < 100; ++i) {
    auto x = a();
    CHECK(x == b());
    CHECK(x != c());
    CHECK(x != d());
  }
  CounterRng u(1, 2);
  double mean = 0;
  for (int i = 0; i < 100000; ++i) mean += u.uniform();
  CHECK(mean / 100000 == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("dyadic epsilon") {
  CHECK(dyadic_level(0.5) == 1);
  CHECK(dyadic_level(1.0 / 1024) == 10);
  CHECK_THROWS_AS(dyadic_level(0.3), PreconditionViolated);
  CHECK_THROWS_AS(dyadic_level(1.0), PreconditionViolated);
  CHECK_THROWS_AS(dyadic_level(0), PreconditionViolated);
  CHECK(lambda_eps(2, std::exp(-4.0)) == doctest::Approx(1));
}

TEST_CASE("simple diagrams") {
  double eps = 1.0 / 32;
  auto legs = evaluate_diagram(edge_diagram(true), eps, TestFunction::one(), small());
  CHECK(within(legs, kTorusVolume, 3, 1e-3 * kTorusVolume));
  auto vac = evaluate_diagram(edge_diagram(false), eps, TestFunction::one(), small());
  CHECK(within(vac, 1, 3, 1e-3));

  auto star = evaluate_diagram(named_diagram("star"), eps);
  CHECK(star.estimate == doctest::Approx(kTorusVolume).epsilon(1e-14));
  CHECK(star.standard_error < 1e-12 * star.estimate);

  auto loop = evaluate_diagram(self_loop(), eps);
  CHECK(std::abs(loop.estimate / greens_at_zero(eps) - 1) < 1e-6);

  Diagram big;
  big.internal = {1, 2, 3, 4, 5};
  for (int i = 1; i < 5; ++i) big.edges.push_back({i, i + 1, 1, -2});
  big.normalize();
  CHECK_THROWS_AS(evaluate_diagram(big, eps), BudgetExceeded);
}

TEST_CASE("determinism and thread independence") {
  auto d = named_diagram("nested4");
  MCConfig a = small(2000, 9), b = a;
  b.threads = 3;
  auto x = evaluate_diagram(d, 1.0 / 16, TestFunction::one(), a);
  auto y = evaluate_diagram(d, 1.0 / 16, TestFunction::one(), a);
  auto z = evaluate_diagram(d, 1.0 / 16, TestFunction::one(), b);
  CHECK(x.estimate == y.estimate);
  CHECK(x.batches == z.batches);
  CHECK(x.batches.size() == 20);
  auto w = evaluate_diagram(d, 1.0 / 16, TestFunction::one(), small(2000, 10));
  CHECK(w.estimate != x.estimate);
}

TEST_CASE("stratified and plain sampling agree") {
  auto d = named_diagram("bubble4");
  MCConfig plain = small(20000);
  plain.stratification = Stratification::None;
  auto s = evaluate_diagram(d, 1.0 / 32, TestFunction::one(), small(20000));
  auto p = evaluate_diagram(d, 1.0 / 32, TestFunction::one(), plain);
  CHECK(std::abs(s.estimate - p.estimate) <= 3 * std::hypot(s.standard_error, p.standard_error));
  CHECK(s.standard_error < p.standard_error);
}

TEST_CASE("product test functions") {
  double eps = 1.0 / 16;
  Kernel k(eps);
  CHECK(k.fourier(0) == 1);
  // The multiplier tends to 1/(1+|k|^2) as eps -> 0.
  CHECK(k.fourier(1) == doctest::Approx(0.5).epsilon(1e-3));
  CHECK(k.fourier(1) < 0.5);

  auto tri = positive_triangle();
  auto one = evaluate_diagram(tri, eps, TestFunction::one(), small(4000));
  auto flat = evaluate_diagram(tri, eps, TestFunction::product_bump({}, BumpParams{0, {}}), small(4000));
  INFO(one.estimate, " +- ", one.standard_error, " vs ", flat.estimate, " +- ", flat.standard_error);
  CHECK(std::abs(flat.estimate - one.estimate) <= 3 * std::hypot(one.standard_error, flat.standard_error));
  auto bump = evaluate_diagram(tri, eps, TestFunction::product_bump(), small(4000));
  CHECK(std::isfinite(bump.estimate));
  CHECK(bump.estimate > 0);

  // <cc1> with flat bumps is the torus volume; bumps of positive amplitude
  // centred together raise it.
  CHECK(star_limit(TestFunction::product_bump({}, BumpParams{0, {}})) == doctest::Approx(kTorusVolume));
  CHECK(star_limit(TestFunction::product_bump()) > kTorusVolume);
}

TEST_CASE("renormalised valuations") {
  double eps = 1.0 / 32;
  auto tad = evaluate_renormalised(named_diagram("tadpole"), eps);
  CHECK(tad.estimate == 0);
  CHECK(tad.standard_error == 0);

  // cc4 = sunset with two legs: Pi cc4 - Pi(sunset) Pi(star); both terms are
  // the same integral for phi = 1 and cancel under common random numbers.
  auto fs = reduce(zimmermann(named_diagram("sunset2")));
  auto v = evaluate_formal_sum_detailed(fs, eps, TestFunction::one(), small(4000));
  REQUIRE(v.terms.size() == 2);
  double scale = std::abs(v.terms[0].value);
  CHECK(scale > 100);
  CHECK(std::abs(v.total.estimate) < 1e-9 * scale);
  auto b = evaluate_formal_sum_detailed(fs, eps, TestFunction::product_bump(), small(4000));
  CHECK(b.terms.size() == 2);
  CHECK(std::abs(b.total.estimate) < std::abs(b.terms[0].value));

  auto tri = positive_triangle();
  auto hat = evaluate_renormalised(tri, eps, TestFunction::one(), small(2000));
  auto raw = evaluate_diagram(tri, eps, TestFunction::one(), small(2000));
  CHECK(hat.estimate == doctest::Approx(raw.estimate).epsilon(1e-12));
}

TEST_CASE("linearity under common random numbers") {
  double eps = 1.0 / 16;
  auto f1 = reduce(zimmermann(named_diagram("sunset2")));
  FormalSum f2;
  f2.terms.push_back({Rational(1), {{named_diagram("nested4")}}});
  Rational a(3, 2), b(-2);
  auto cfg = small(2000);
  auto phi = TestFunction::product_bump();
  double lhs = evaluate_formal_sum(a * f1 + b * f2, eps, phi, cfg).estimate;
  double rhs = a.get_d() * evaluate_formal_sum(f1, eps, phi, cfg).estimate +
               b.get_d() * evaluate_formal_sum(f2, eps, phi, cfg).estimate;
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("vacuum pinning and edge directions") {
  // A vacuum triangle with a doubled edge, from the forest formula of the
  // two-sunset chain.
  Diagram v;
  v.internal = {1, 2, 3};
  v.edges = {{1, 3, 1, -2}, {2, 3, 1, -2}, {3, 2, 2, -2}};
  v.normalize();
  auto cfg = small(8000);
  auto first = evaluate_diagram(v, 1.0 / 16, TestFunction::one(), cfg);
  cfg.pin = 2;
  auto last = evaluate_diagram(v, 1.0 / 16, TestFunction::one(), cfg);
  CHECK(std::abs(first.estimate - last.estimate) <= 3 * std::hypot(first.standard_error, last.standard_error));

  for (auto name : {"bubble4", "nested4", "sunset2"}) {
    Diagram d = named_diagram(name);
    auto x = evaluate_diagram(d, 1.0 / 16, TestFunction::product_bump(), small(1000));
    auto y = evaluate_diagram(reversed(d), 1.0 / 16, TestFunction::product_bump(), small(1000));
    CHECK(x.estimate == doctest::Approx(y.estimate).epsilon(1e-12));
  }
}

TEST_CASE("shell integrals") {
  double eps = 1.0 / 256;
  int N = dyadic_level(eps);
  CHECK_THROWS_AS(shell_integral(-1, eps), PreconditionViolated);
  CHECK_THROWS_AS(shell_integral(N, eps), PreconditionViolated);

  double sum = 0;
  std::vector<double> dev;
  for (int n = 0; n < N; ++n) {
    auto r = shell_integral(n, eps, small(4000));
    sum += r.estimate;
    dev.push_back(std::abs(r.estimate - kLog2Coeff));
  }
  // Mid-range shells sit close to log(2)/(8 pi^2); n = 0 is dominated by the
  // 2^-n term.
  CHECK(dev[N / 2] < 0.2 * kLog2Coeff);
  CHECK(dev[0] > 5 * dev[N / 2]);
  for (int n = 1; n < N - 1; ++n) CHECK(dev[n + 1] < dev[n]);
  // Telescoping: the sum is N log 2 / (8 pi^2) + O(1).
  CHECK(std::abs(sum - N * kLog2Coeff) < 0.05);
}

TEST_CASE("weak coupling scan") {
  auto t = weak_coupling_scan(named_diagram("bubble4"), TestFunction::one(), 1.0, {1.0 / 16, 1.0 / 32, 1.0 / 64},
                              small(4000));
  REQUIRE(t.rows.size() == 3);
  CHECK(t.contributing);
  CHECK(t.edges == 2);
  double prediction = kTorusVolume / (8 * kPi * kPi);
  for (auto& r : t.rows) {
    CHECK(r.prediction == doctest::Approx(prediction));
    CHECK(r.lambda_eps == doctest::Approx(1 / std::sqrt(std::log(1 / r.eps))));
  }
  REQUIRE(t.rows[1].difference);
  REQUIRE(t.rows[2].difference);
  CHECK(*t.rows[2].difference == doctest::Approx(kTorusVolume * kLog2Coeff).epsilon(0.15));
  REQUIRE(t.fitted_limit);
  CHECK(*t.fitted_limit == doctest::Approx(prediction).epsilon(0.25));
  auto csv = scan_csv(t);
  CHECK(csv.rfind("epsilon,N_eps,estimate,stderr,lambda_eps,prediction,deviation\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);

  // Positive diagrams: the scaled value decreases towards 0.
  auto p = weak_coupling_scan(positive_triangle(), TestFunction::one(), 1.0, {1.0 / 8, 1.0 / 16, 1.0 / 32},
                              small(2000));
  CHECK_FALSE(p.contributing);
  CHECK(p.rows[0].estimate > p.rows[1].estimate);
  CHECK(p.rows[1].estimate > p.rows[2].estimate);
  CHECK_THROWS_AS(weak_coupling_scan(named_diagram("bubble4"), TestFunction::one(), 1.0, {0.1}), PreconditionViolated);
}

TEST_CASE("sector integrals") {
  double eps = 1.0 / 64;
  Diagram bubble;
  bubble.internal = {1, 2};
  bubble.edges = {{1, 2, 2, -2}};
  bubble.normalize();
  auto t = parse_hepp_tree("(1,2)");
  for (int n : {2, 4}) {
    ScaleAssignment s{{t.root(), n}};
    auto a = sector_integral(bubble, t, s, eps, small(4000));
    auto b = shell_integral(n, eps, small(4000));
    CHECK(std::abs(a.estimate - b.estimate) <= 3 * std::hypot(a.standard_error, b.standard_error));
  }

  Diagram nested = named_diagram("nested4");
  auto comb = parse_hepp_tree("(((1,2),3),4)");
  REQUIRE(null_count(comb, nested).null == 3);
  ScaleAssignment bad;
  int k = 3;
  for (int u : comb.inner()) bad[u] = k--;
  CHECK_THROWS_AS(sector_integral(nested, comb, bad, eps), PreconditionViolated);
  CHECK_THROWS_AS(sector_integral(nested, t, {{t.root(), 1}}, eps), PreconditionViolated);

  // Every node of the comb has vanishing degree, so deep sectors are nearly
  // scale invariant; this is what makes the capped sum grow like N^3.
  auto at = [&](int n) {
    ScaleAssignment s;
    for (int u : comb.inner()) s[u] = n;
    return sector_integral(nested, comb, s, 1.0 / 1024, small(4000));
  };
  auto s6 = at(6), s7 = at(7);
  CHECK(s7.estimate / s6.estimate == doctest::Approx(1).epsilon(0.3));
}
