#pragma once

// Monte Carlo valuation of small diagrams, shell integrals and weak coupling
// scans. Every estimate is a mean over 20 batches; batch b draws from the
// counter-based stream keyed by (seed, b), so results do not depend on the
// number of threads.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "anderson/bphz.hpp"
#include "anderson/bubbles.hpp"
#include "anderson/greens.hpp"
#include "anderson/hepp.hpp"

namespace anderson {

inline constexpr double kTorusVolume = kTwoPi * kTwoPi * kTwoPi * kTwoPi;

// ---------------------------------------------------------------------------
// Random numbers

inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Output i of stream k is a hash of (k, i).
class CounterRng {
 public:
  using result_type = std::uint64_t;
  CounterRng(std::uint64_t seed, std::uint64_t stream) : key_(splitmix64(splitmix64(seed) ^ (stream * 0xd1b54a32d192ed03ULL))) {}
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }
  result_type operator()() { return splitmix64(key_ + 0x9e3779b97f4a7c15ULL * counter_++); }
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

inline Vec4 random_unit_vector(CounterRng& rng) {
  for (;;) {
    // Box-Muller pairs; rejection of the zero vector only.
    Vec4 v;
    for (int i = 0; i < 4; i += 2) {
      double u1 = 1 - rng.uniform(), u2 = rng.uniform();
      double r = std::sqrt(-2 * std::log(u1));
      v[i] = r * std::cos(kTwoPi * u2);
      v[i + 1] = r * std::sin(kTwoPi * u2);
    }
    double n = norm(v);
    if (n > 0) return (1 / n) * v;
  }
}

inline Vec4 random_in_cell(CounterRng& rng) {
  return {kTwoPi * rng.uniform() - kPi, kTwoPi * rng.uniform() - kPi, kTwoPi * rng.uniform() - kPi,
          kTwoPi * rng.uniform() - kPi};
}

inline bool in_cell(const Vec4& z) {
  for (double c : z)
    if (std::abs(c) > kPi) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Configuration and results

// N_eps = k for eps = 2^-k.
inline int dyadic_level(double eps) {
  int e = 0;
  double m = std::frexp(eps, &e);
  if (!(eps > 0) || m != 0.5 || e > 0) throw PreconditionViolated("epsilon must be 2^-k with k >= 1");
  return 1 - e;
}

enum class TestKind { ConstantOne, ProductBump };

// phi_l(x) = prod_i (1 + a cos(x_i - c_i)) for each leaf, keyed by tag.
struct BumpParams {
  double amplitude = 0.5;
  Vec4 center{0, 0, 0, 0};
};

struct TestFunction {
  TestKind kind = TestKind::ConstantOne;
  std::map<std::string, BumpParams> leaves;
  BumpParams fallback;

  static TestFunction one() { return {}; }
  static TestFunction product_bump(std::map<std::string, BumpParams> p = {}, BumpParams fallback = {}) {
    return {TestKind::ProductBump, std::move(p), fallback};
  }
  BumpParams params(const std::string& tag) const {
    auto it = leaves.find(tag);
    return it == leaves.end() ? fallback : it->second;
  }
};

enum class Stratification { None, DyadicShells };

struct MCConfig {
  std::size_t samples = 100000;
  std::uint64_t seed = 1;
  int batches = 20;
  Stratification stratification = Stratification::DyadicShells;
  KernelMode mode = KernelMode::ExactTorus;
  int pin = -1;     // index into the internal vertices; -1 is the first
  int threads = 0;  // 0: hardware concurrency

  std::size_t chunk_size() const { return (samples + batches - 1) / batches; }
};

struct ValuationResult {
  double estimate = 0;
  double standard_error = 0;
  std::size_t samples = 0;
  double eps = 0;
  std::optional<double> lambda_hat;
  std::optional<double> lambda_eps;
  std::vector<double> batches;
};

inline double lambda_eps(double lambda_hat, double eps) { return lambda_hat / std::sqrt(std::log(1 / eps)); }

namespace detail {

inline ValuationResult summarize(std::vector<double> b, double eps, std::size_t samples) {
  ValuationResult r;
  r.eps = eps;
  r.samples = samples;
  double n = static_cast<double>(b.size()), mean = 0;
  for (double v : b) mean += v;
  mean /= n;
  double var = 0;
  for (double v : b) var += (v - mean) * (v - mean);
  r.estimate = mean;
  r.standard_error = b.size() > 1 ? std::sqrt(var / (n - 1) / n) : 0;
  r.batches = std::move(b);
  return r;
}

// Runs f(batch, rng) for every batch, in parallel, and returns the batch
// values in batch order.
template <class F>
std::vector<double> run_batches(const MCConfig& cfg, F f) {
  if (cfg.batches < 2) throw PreconditionViolated("need at least two batches");
  std::vector<double> out(cfg.batches);
  int threads = cfg.threads > 0 ? cfg.threads : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  threads = std::min(threads, cfg.batches);
  auto work = [&](int t) {
    for (int b = t; b < cfg.batches; b += threads) {
      CounterRng rng(cfg.seed, static_cast<std::uint64_t>(b));
      out[b] = f(b, rng);
    }
  };
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(work, t);
    for (auto& th : pool) th.join();
  }
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Kernel

// G_eps with its value at the origin cached and the Fourier multipliers needed
// for product test functions.
class Kernel {
 public:
  Kernel(double eps, KernelMode mode = KernelMode::ExactTorus) : eval_{mode}, rho_(eps) {
    if (mode == KernelMode::ExactTorus) fast_.emplace(eps);
    at_zero_ = eval_.mollified({0, 0, 0, 0}, rho_);
    for (int j = 0; j <= 4; ++j) multiplier_[j] = fourier(std::sqrt(double(j)));
  }

  double eps() const { return rho_.eps(); }
  KernelMode mode() const { return eval_.mode; }
  double at_zero() const { return at_zero_; }

  double operator()(const Vec4& z) const {
    Vec4 y = reduce(z);
    if (y[0] == 0 && y[1] == 0 && y[2] == 0 && y[3] == 0) return at_zero_;
    return fast_ ? (*fast_)(y) : eval_.mollified(y, rho_);
  }

  // Fourier coefficient of G_eps at |k| = q.
  double fourier(double q) const {
    if (q == 0) return 1;
    double e = rho_.eps();
    double rhohat = Mollifier::radial_integral([&](double s) {
      double a = q * e * s;
      return a < 1e-6 ? 1 - a * a / 8 : 2 * boost::math::cyl_bessel_j(1, a) / a;
    });
    return rhohat / (1 + q * q);
  }

  // (G_eps * phi_l)(x) for a product bump.
  double smeared_bump(const Vec4& x, const BumpParams& p) const { return smeared(x, p, multiplier_); }

  // Same with the unmollified kernel.
  static double smeared_bump_limit(const Vec4& x, const BumpParams& p) {
    std::array<double, 5> m{1, 0.5, 1.0 / 3, 0.25, 0.2};
    return smeared(x, p, m);
  }

 private:
  static double smeared(const Vec4& x, const BumpParams& p, const std::array<double, 5>& m) {
    std::array<double, 4> c;
    for (int i = 0; i < 4; ++i) c[i] = p.amplitude * std::cos(x[i] - p.center[i]);
    double s = 0;
    for (int mask = 0; mask < 16; ++mask) {
      double term = 1;
      for (int i = 0; i < 4; ++i)
        if (mask >> i & 1) term *= c[i];
      s += m[std::popcount(static_cast<unsigned>(mask))] * term;
    }
    return s;
  }

  GreensEvaluator eval_;
  Mollifier rho_;
  std::optional<MollifiedGreens> fast_;
  double at_zero_ = 0;
  std::array<double, 5> multiplier_{};
};

// ---------------------------------------------------------------------------
// Radial stratification

struct Stratum {
  double r_in = 0, r_out = 0;  // r_in = 0 marks the inner ball
  double weight = 0;
};

// Dyadic shells 2 pi 2^{-n-1} < r <= 2 pi 2^{-n} for n = 0..K, each cut into
// `sub` log-equal pieces, and the ball inside. The prior weight is volume
// times (r_out + eps)^-4; stratified_integral replaces it by a pilot estimate
// of each stratum's spread.
inline std::vector<Stratum> dyadic_strata(double eps, int sub = 4) {
  int K = static_cast<int>(std::ceil(std::log2(kTwoPi / eps))) + 2;
  std::vector<Stratum> s;
  auto add = [&](double in, double out) {
    double vol = kPi * kPi / 2 * (std::pow(out, 4) - std::pow(in, 4));
    s.push_back({in, out, vol * std::pow(out + eps, -4)});
  };
  for (int n = 0; n <= K; ++n) {
    double out = kTwoPi * std::ldexp(1.0, -n);
    for (int j = 0; j < sub; ++j) add(out * std::exp2(-double(j + 1) / sub), out * std::exp2(-double(j) / sub));
  }
  add(0, kTwoPi * std::ldexp(1.0, -K - 1));
  return s;
}

// One-sample estimate of the integral of f over {z in cell : r_in < |z| <= r_out}.
// Shells use log-uniform radii, the ball uniform volume.
template <class F>
double stratum_draw(const Stratum& s, F& f, CounterRng& rng) {
  Vec4 u = random_unit_vector(rng);
  if (s.r_in == 0) {
    double r = s.r_out * std::pow(rng.uniform(), 0.25);
    return f(r * u) * kPi * kPi / 2 * std::pow(s.r_out, 4);
  }
  double r = s.r_in * std::exp(rng.uniform() * std::log(s.r_out / s.r_in));
  if (r <= s.r_in) return 0;
  Vec4 z = r * u;
  if (!in_cell(z)) return 0;
  return f(z) * 2 * kPi * kPi * std::pow(r, 4) * std::log(s.r_out / s.r_in);
}

// Sample counts per stratum: proportional to the pilot standard deviation,
// falling back to the prior weight where the pilot sees no spread.
inline constexpr std::uint64_t kPilotStream = 1ULL << 40;

template <class F>
std::vector<std::size_t> allocate_strata(const std::vector<Stratum>& strata, std::size_t per_batch, F& f,
                                         std::uint64_t seed, int pilot = 32) {
  CounterRng rng(seed, kPilotStream);
  std::vector<double> sd(strata.size());
  double total_sd = 0, total_w = 0;
  for (std::size_t i = 0; i < strata.size(); ++i) {
    double a = 0, b = 0;
    for (int k = 0; k < pilot; ++k) {
      double v = stratum_draw(strata[i], f, rng);
      a += v, b += v * v;
    }
    double m = a / pilot;
    sd[i] = std::sqrt(std::max(0.0, b / pilot - m * m));
    total_sd += sd[i];
    total_w += strata[i].weight;
  }
  std::vector<std::size_t> n(strata.size());
  for (std::size_t i = 0; i < strata.size(); ++i) {
    double share = total_sd > 0 ? sd[i] / total_sd : strata[i].weight / total_w;
    n[i] = std::max<std::size_t>(2, static_cast<std::size_t>(std::llround(per_batch * share)));
  }
  return n;
}

template <class F>
double stratified_batch(const std::vector<Stratum>& strata, const std::vector<std::size_t>& alloc, F& f,
                        CounterRng& rng) {
  double sum = 0;
  for (std::size_t i = 0; i < strata.size(); ++i) {
    double acc = 0;
    for (std::size_t k = 0; k < alloc[i]; ++k) acc += stratum_draw(strata[i], f, rng);
    sum += acc / static_cast<double>(alloc[i]);
  }
  return sum;
}

// Integral of G_eps^2 over the shell 2 pi 2^{-n-1} < |x| <= 2 pi 2^{-n}.
inline ValuationResult shell_integral(int n, double eps, const MCConfig& cfg = {}) {
  int N = dyadic_level(eps);
  if (n < 0 || n > N - 1) throw PreconditionViolated("shell index must lie in [0, N_eps - 1]");
  Kernel k(eps, cfg.mode);
  double out = kTwoPi * std::ldexp(1.0, -n);
  Stratum s{out / 2, out, 1};  // G_eps^2 r^4 is nearly flat here
  auto f = [&](const Vec4& z) {
    double g = k(z);
    return g * g;
  };
  std::size_t per = cfg.chunk_size();
  auto b = detail::run_batches(cfg, [&](int, CounterRng& rng) {
    double acc = 0;
    for (std::size_t i = 0; i < per; ++i) acc += stratum_draw(s, f, rng);
    return acc / static_cast<double>(per);
  });
  return detail::summarize(std::move(b), eps, per * cfg.batches);
}

// ---------------------------------------------------------------------------
// Diagrams

namespace detail {

inline void check_kernel_types(const Diagram& d) {
  for (auto& e : d.edges)
    if (e.type != Rational(-2)) throw PreconditionViolated("valuation supports kernels of type -2 only");
}

// Leaf -> internal vertex, one leg per leaf.
inline std::map<int, int> leg_anchors(const Diagram& d) {
  std::map<int, int> out;
  for (auto& l : d.legs) {
    int leaf = d.is_leaf(l.tail) ? l.tail : l.head;
    int v = leaf == l.tail ? l.head : l.tail;
    if (!out.emplace(leaf, v).second) throw PreconditionViolated("a leaf carries more than one leg");
  }
  return out;
}

// Sub-diagram on the component m, keeping its legs.
inline Diagram component_diagram(const Diagram& d, VMask m) {
  Diagram s = induced_subdiagram(d, m);
  for (auto& l : d.legs) {
    int leaf = d.is_leaf(l.tail) ? l.tail : l.head;
    int v = leaf == l.tail ? l.head : l.tail;
    if (!in_mask(d, m, v)) continue;
    s.legs.push_back(l);
    s.leaves.push_back(leaf);
    s.tags[leaf] = d.tag_of(leaf);
  }
  s.normalize();
  return s;
}

// Displacement proposal: a mixture of the uniform cell, the uniform eps-ball
// and log-uniform radii on [eps, pi].
struct Proposal {
  double eps;
  static constexpr double p_cell = 0.1, p_ball = 0.2, p_log = 0.7;

  Vec4 draw(CounterRng& rng) const {
    double c = rng.uniform();
    if (c < p_cell) return random_in_cell(rng);
    Vec4 u = random_unit_vector(rng);
    if (c < p_cell + p_ball) return (eps * std::pow(rng.uniform(), 0.25)) * u;
    return (eps * std::exp(rng.uniform() * std::log(kPi / eps))) * u;
  }

  double density(const Vec4& z) const {
    double r = norm(z);
    double q = p_cell / kTorusVolume;
    if (r < eps) q += p_ball / (kPi * kPi / 2 * std::pow(eps, 4));
    if (r >= eps && r <= kPi) q += p_log / (2 * kPi * kPi * std::pow(r, 4) * std::log(kPi / eps));
    return q;
  }
};

inline double leg_product(const Diagram& d, const std::map<int, int>& anchors, const std::map<int, Vec4>& x,
                          const Kernel& k, const TestFunction& phi) {
  if (phi.kind == TestKind::ConstantOne) return 1;
  double p = 1;
  for (auto& [leaf, v] : anchors) p *= k.smeared_bump(x.at(v), phi.params(d.tag_of(leaf)));
  return p;
}

inline ValuationResult evaluate_connected(const Diagram& d, const Kernel& k, const TestFunction& phi,
                                          const MCConfig& cfg) {
  const double eps = k.eps();
  const bool vacuum = d.is_vacuum();
  const bool flat = phi.kind == TestKind::ConstantOne || vacuum;
  if (phi.kind == TestKind::ProductBump && k.mode() != KernelMode::ExactTorus)
    throw PreconditionViolated("product test functions need the exact kernel");
  auto anchors = leg_anchors(d);
  const std::size_t per = cfg.chunk_size();

  double loops = 1;
  for (auto& e : d.edges)
    if (e.tail == e.head) loops *= std::pow(k.at_zero(), e.mult);
  // Legs integrate to one against phi = 1, leaving the torus volume.
  const double volume = vacuum ? 1 : kTorusVolume;

  int pin_index = cfg.pin < 0 ? 0 : cfg.pin;
  if (pin_index >= d.num_internal()) throw PreconditionViolated("pin index out of range");
  int root = d.internal[pin_index];

  if (d.num_internal() == 1 && flat) {
    std::vector<double> b(cfg.batches, volume * loops);
    return summarize(std::move(b), eps, 0);
  }

  if (d.num_internal() == 2 && flat && cfg.stratification == Stratification::DyadicShells) {
    int m = 0;
    for (auto& e : d.edges)
      if (e.tail != e.head) m += e.mult;
    auto strata = dyadic_strata(eps);
    auto f = [&](const Vec4& z) { return std::pow(k(z), m); };
    auto alloc = allocate_strata(strata, per, f, cfg.seed);
    auto b = run_batches(cfg, [&](int, CounterRng& rng) { return volume * loops * stratified_batch(strata, alloc, f, rng); });
    return summarize(std::move(b), eps, per * cfg.batches);
  }

  // Spanning tree from the pinned vertex. Edge directions do not enter, since
  // the kernel is even.
  std::map<int, std::set<int>> adj;
  for (auto& e : d.edges)
    if (e.tail != e.head) adj[e.tail].insert(e.head), adj[e.head].insert(e.tail);
  std::vector<std::pair<int, int>> tree;  // parent, child
  std::set<int> seen{root};
  std::vector<int> queue{root};
  for (std::size_t i = 0; i < queue.size(); ++i)
    for (int b : adj[queue[i]]) {
      if (!seen.insert(b).second) continue;
      queue.push_back(b);
      tree.push_back({queue[i], b});
    }

  Proposal q{eps};
  auto b = run_batches(cfg, [&](int, CounterRng& rng) {
    double acc = 0;
    std::map<int, Vec4> x;
    for (std::size_t s = 0; s < per; ++s) {
      double w = 1;
      x[root] = flat ? Vec4{0, 0, 0, 0} : random_in_cell(rng);
      for (auto& [p, c] : tree) {
        Vec4 z = q.draw(rng);
        w /= q.density(z);
        x[c] = reduce(x[p] + z);
      }
      for (auto& e : d.edges)
        if (e.tail != e.head) w *= std::pow(k(x[e.tail] - x[e.head]), e.mult);
      w *= leg_product(d, anchors, x, k, phi);
      acc += w;
    }
    return volume * loops * acc / static_cast<double>(per);
  });
  return summarize(std::move(b), eps, per * cfg.batches);
}

// Exact identity of a factor (labels, legs and tags), for reuse within a sum.
inline std::string identity_key(const Diagram& d) {
  std::ostringstream os;
  for (int v : d.internal) os << v << ",";
  os << "|";
  for (auto& e : d.edges) os << e.tail << ">" << e.head << "x" << e.mult << ";";
  os << "|";
  for (auto& l : d.legs) os << l.tail << ">" << l.head << "=" << d.tag_of(d.is_leaf(l.tail) ? l.tail : l.head) << ";";
  return os.str();
}

inline ValuationResult product_of(const std::vector<ValuationResult>& parts, double eps) {
  std::vector<double> b(parts.front().batches.size(), 1.0);
  double est = 1;
  std::size_t samples = 0;
  for (auto& p : parts) {
    est *= p.estimate;
    samples += p.samples;
    for (std::size_t i = 0; i < b.size(); ++i) b[i] *= p.batches[i];
  }
  ValuationResult r = summarize(std::move(b), eps, samples);
  r.estimate = est;
  return r;
}

}  // namespace detail

inline constexpr int kMaxValuationVertices = 4;

// Pi_eps Gamma (phi). Disconnected diagrams give the product over components.
inline ValuationResult evaluate_diagram(const Diagram& d, double eps, const TestFunction& phi = TestFunction::one(),
                                        const MCConfig& cfg = {}) {
  if (d.num_internal() > kMaxValuationVertices)
    throw BudgetExceeded("evaluate_diagram: more than " + std::to_string(kMaxValuationVertices) + " internal vertices");
  if (d.num_internal() == 0) throw PreconditionViolated("evaluate_diagram: empty diagram");
  detail::check_kernel_types(d);
  Kernel k(eps, cfg.mode);
  auto comps = components(d, full_mask(d));
  if (comps.size() == 1) return detail::evaluate_connected(d, k, phi, cfg);
  std::vector<ValuationResult> parts;
  MCConfig sub = cfg;
  sub.pin = -1;
  for (VMask c : comps) parts.push_back(detail::evaluate_connected(detail::component_diagram(d, c), k, phi, sub));
  return detail::product_of(parts, eps);
}

struct TermValuation {
  Rational coeff;
  std::vector<ValuationResult> factors;
  double value = 0;
};

struct FormalSumValuation {
  ValuationResult total;
  std::vector<TermValuation> terms;
};

// Sum of coeff * product of factor valuations. Every factor uses the same seed,
// so the terms share random numbers and cancellations are not drowned in noise.
inline FormalSumValuation evaluate_formal_sum_detailed(const FormalSum& fs, double eps,
                                                       const TestFunction& phi = TestFunction::one(),
                                                       const MCConfig& cfg = {}) {
  for (auto& t : fs.terms)
    for (auto& f : t.product.factors)
      if (f.num_internal() > kMaxValuationVertices) throw BudgetExceeded("evaluate_formal_sum: factor too large");
  FormalSumValuation out;
  std::vector<double> b(cfg.batches, 0.0);
  double est = 0;
  std::size_t samples = 0;
  if (is_formally_zero(fs)) {
    out.total = detail::summarize(b, eps, 0);
    return out;
  }
  std::map<std::string, ValuationResult> cache;
  for (auto& t : fs.terms) {
    TermValuation tv{t.coeff, {}, 0};
    double c = t.coeff.get_d();
    std::vector<double> tb(cfg.batches, c);
    double value = c;
    for (auto& f : t.product.factors) {
      std::string key = detail::identity_key(f);
      auto it = cache.find(key);
      if (it == cache.end()) it = cache.emplace(key, evaluate_diagram(f, eps, phi, cfg)).first;
      const ValuationResult& r = it->second;
      value *= r.estimate;
      samples += r.samples;
      for (int i = 0; i < cfg.batches; ++i) tb[i] *= r.batches[i];
      tv.factors.push_back(r);
    }
    tv.value = value;
    est += value;
    for (int i = 0; i < cfg.batches; ++i) b[i] += tb[i];
    out.terms.push_back(std::move(tv));
  }
  out.total = detail::summarize(std::move(b), eps, samples);
  out.total.estimate = est;
  return out;
}

inline ValuationResult evaluate_formal_sum(const FormalSum& fs, double eps, const TestFunction& phi = TestFunction::one(),
                                           const MCConfig& cfg = {}) {
  return evaluate_formal_sum_detailed(fs, eps, phi, cfg).total;
}

// Pi-hat_eps Gamma = Pi_eps of the forest formula.
inline ValuationResult evaluate_renormalised(const Diagram& d, double eps, const TestFunction& phi = TestFunction::one(),
                                             const MCConfig& cfg = {}) {
  return evaluate_formal_sum(reduce(zimmermann(d)), eps, phi, cfg);
}

// <cc1>(phi): the star with the unmollified kernel on each leg.
inline double star_limit(const TestFunction& phi, int legs = 4) {
  if (phi.kind == TestKind::ConstantOne) return kTorusVolume;
  // Each leg is a trigonometric polynomial of degree one per coordinate, so an
  // 8-point grid integrates the product of four legs exactly.
  std::vector<BumpParams> p;
  for (auto& [tag, b] : phi.leaves) p.push_back(b);
  while (static_cast<int>(p.size()) < legs) p.push_back(phi.fallback);
  const int n = 8;
  double h = kTwoPi / n, sum = 0;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        for (int e = 0; e < n; ++e) {
          Vec4 x{a * h, b * h, c * h, e * h};
          double v = 1;
          for (int l = 0; l < legs; ++l) v *= Kernel::smeared_bump_limit(x, p[l]);
          sum += v;
        }
  return sum * h * h * h * h;
}

// ---------------------------------------------------------------------------
// Weak coupling scans

struct ScanRow {
  double eps = 0;
  int N_eps = 0;
  double raw = 0, raw_stderr = 0;  // Pi-hat
  double estimate = 0, stderr_scaled = 0;  // lambda_eps^{|E*|} Pi-hat
  double lambda_eps = 0;
  double prediction = 0;
  double deviation = 0;
  std::optional<double> difference;  // Pi-hat(eps) - Pi-hat(2 eps)
};

struct ScanTable {
  std::vector<ScanRow> rows;
  double lambda_hat = 0;
  int edges = 0;
  bool contributing = false;
  std::optional<double> fitted_limit;
};

// Least squares raw = c L^m + b L^{m-1} with L = log(1/eps); the limit of
// lambda_eps^{2m} Pi-hat is lambda_hat^{2m} c.
inline std::optional<double> fit_log_power(const std::vector<ScanRow>& rows, int m) {
  if (rows.size() < 2 || m < 1) return std::nullopt;
  double s11 = 0, s12 = 0, s22 = 0, t1 = 0, t2 = 0;
  for (auto& r : rows) {
    double L = std::log(1 / r.eps), a = std::pow(L, m), b = std::pow(L, m - 1);
    s11 += a * a, s12 += a * b, s22 += b * b, t1 += a * r.raw, t2 += b * r.raw;
  }
  double det = s11 * s22 - s12 * s12;
  if (det == 0) return std::nullopt;
  return (t1 * s22 - t2 * s12) / det;
}

inline ScanTable weak_coupling_scan(const Diagram& d, const TestFunction& phi, double lambda_hat,
                                    std::vector<double> eps_list, const MCConfig& cfg = {}) {
  for (double e : eps_list) dyadic_level(e);
  std::sort(eps_list.begin(), eps_list.end(), std::greater<>());
  ScanTable t;
  t.lambda_hat = lambda_hat;
  t.edges = d.internal_edge_count();
  t.contributing = is_contributing(d);
  double pred = 0;
  if (t.contributing) {
    auto s = sigma_gamma_squared(d);
    pred = s.to_double() * std::pow(lambda_hat, 2 * (d.num_internal() - 1)) * star_limit(phi, int(d.legs.size()));
  }
  FormalSum fs = reduce(zimmermann(d));
  for (double e : eps_list) {
    auto v = evaluate_formal_sum(fs, e, phi, cfg);
    ScanRow r;
    r.eps = e;
    r.N_eps = dyadic_level(e);
    r.raw = v.estimate;
    r.raw_stderr = v.standard_error;
    r.lambda_eps = lambda_eps(lambda_hat, e);
    double scale = std::pow(r.lambda_eps, t.edges);
    r.estimate = scale * v.estimate;
    r.stderr_scaled = scale * v.standard_error;
    r.prediction = pred;
    r.deviation = r.estimate - pred;
    if (!t.rows.empty() && t.rows.back().eps == 2 * e) r.difference = r.raw - t.rows.back().raw;
    t.rows.push_back(r);
  }
  if (t.edges % 2 == 0)
    if (auto c = fit_log_power(t.rows, t.edges / 2)) t.fitted_limit = std::pow(lambda_hat, t.edges) * *c;
  return t;
}

inline std::string scan_csv(const ScanTable& t) {
  std::ostringstream os;
  os.precision(10);
  os << "epsilon,N_eps,estimate,stderr,lambda_eps,prediction,deviation\n";
  for (auto& r : t.rows)
    os << r.eps << "," << r.N_eps << "," << r.estimate << "," << r.stderr_scaled << "," << r.lambda_eps << ","
       << r.prediction << "," << r.deviation << "\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// Sectors

inline double shell_volume(int n) {
  double out = kTwoPi * std::ldexp(1.0, -n), in = out / 2;
  return kPi * kPi / 2 * (std::pow(out, 4) - std::pow(in, 4));
}

// Integral of |W_eps Gamma| over the sector D_(T,n), with the first internal
// vertex pinned. Leaves of T are the internal vertices of d. Positions are
// proposed down the tree, each split offset drawn uniformly from its shell,
// and kept if every pair lands in its shell.
inline constexpr double kMinSectorAcceptance = 1e-4;

inline ValuationResult sector_integral(const Diagram& d, const HeppTree& t, const ScaleAssignment& n, double eps,
                                       const MCConfig& cfg = {}) {
  detail::check_kernel_types(d);
  if (t.labels() != d.internal) throw PreconditionViolated("sector_integral: tree leaves differ from the vertices");
  for (int u : t.inner())
    if (!n.count(u)) throw PreconditionViolated("sector_integral: scale map misses an inner node");
  if (!is_compatible(t, n)) throw PreconditionViolated("sector_integral: scales are not compatible");
  Kernel k(eps, cfg.mode);
  const auto& labels = d.internal;
  double volume = 1;
  for (int u : t.inner()) volume *= shell_volume(n.at(u));

  std::map<int, int> index;
  for (std::size_t i = 0; i < labels.size(); ++i) index[labels[i]] = static_cast<int>(i);

  const std::size_t per = cfg.chunk_size();
  std::vector<std::size_t> accepted(cfg.batches, 0);
  auto b = detail::run_batches(cfg, [&](int batch, CounterRng& rng) {
    double acc = 0;
    std::vector<Point> x(labels.size(), Point(4, 0.0));
    for (std::size_t s = 0; s < per; ++s) {
      bool ok = true;
      std::fill(x[0].begin(), x[0].end(), 0.0);
      // Parents precede children in inner().
      for (int u : t.inner()) {
        const auto& node = t.nodes()[u];
        int a = t.below(node.left)[0], c = t.below(node.right)[0];
        int from = index[std::min(a, c)], to = index[std::max(a, c)];
        double out = kTwoPi * std::ldexp(1.0, -n.at(u)), in = out / 2;
        double r = std::pow(std::pow(in, 4) + rng.uniform() * (std::pow(out, 4) - std::pow(in, 4)), 0.25);
        Vec4 z = r * random_unit_vector(rng);
        if (!in_cell(z)) ok = false;
        for (int i = 0; i < 4; ++i) x[to][i] = wrap_angle(x[from][i] + z[i]);
      }
      if (!ok || !in_sector(t, n, x, 4)) continue;
      ++accepted[batch];
      double w = 1;
      for (auto& e : d.edges) {
        const Point &p = x[index[e.tail]], &q = x[index[e.head]];
        w *= std::pow(std::abs(k(Vec4{p[0] - q[0], p[1] - q[1], p[2] - q[2], p[3] - q[3]})), e.mult);
      }
      acc += w;
    }
    return volume * acc / static_cast<double>(per);
  });
  std::size_t total = 0;
  for (auto a : accepted) total += a;
  if (static_cast<double>(total) < kMinSectorAcceptance * static_cast<double>(per * cfg.batches))
    throw EmptySector("sector_integral: acceptance below 1e-4");
  return detail::summarize(std::move(b), eps, per * cfg.batches);
}

// Sum of sector integrals over compatible scale maps with values <= cap.
inline ValuationResult sector_sum(const Diagram& d, const HeppTree& t, int cap, double eps, const MCConfig& cfg = {}) {
  std::vector<double> b(cfg.batches, 0.0);
  std::size_t samples = 0;
  for (auto& n : enumerate_compatible_scales(t, cap)) {
    ValuationResult r;
    try {
      r = sector_integral(d, t, n, eps, cfg);
    } catch (const EmptySector&) {
      continue;
    }
    samples += r.samples;
    for (int i = 0; i < cfg.batches; ++i) b[i] += r.batches[i];
  }
  return detail::summarize(std::move(b), eps, samples);
}

}  // namespace anderson
