#pragma once

// Periodic massive Green's function on T^4 = (R / 2piZ)^4, its mollification
// and the first order Taylor remainder kernel.
//
// G solves (1 - Delta) G = delta_0. We write G = G4 + H on the cell
// [-pi, pi]^4, where G4(r) = K_1(r) / (4 pi^2 r) is the whole space kernel and
// H is smooth there. H solves (1 - Delta) H = 0 away from the nonzero lattice
// points, so its mean over a sphere of radius a is H(x) * Phi(a) with
// Phi(a) = 2 I_1(a) / a. This turns every mollification into a radial
// integral.

#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/bessel.hpp>

#include "anderson/errors.hpp"

namespace anderson {

using Vec4 = std::array<double, 4>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2 * std::numbers::pi;
inline constexpr double kLeadingCoeff = 1 / (4 * kPi * kPi);
inline constexpr double kLogCoeff = 1 / (8 * kPi * kPi);

enum class KernelMode { ExactTorus, LeadingLocal };

inline double wrap_angle(double a) { return std::remainder(a, kTwoPi); }

inline Vec4 reduce(const Vec4& x) {
  return {wrap_angle(x[0]), wrap_angle(x[1]), wrap_angle(x[2]), wrap_angle(x[3])};
}

inline double norm(const Vec4& x) { return std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + x[3] * x[3]); }

inline double torus_norm(const Vec4& x) { return norm(reduce(x)); }

inline Vec4 operator-(const Vec4& a, const Vec4& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2], a[3] - b[3]}; }
inline Vec4 operator+(const Vec4& a, const Vec4& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]}; }
inline Vec4 operator*(double s, const Vec4& a) { return {s * a[0], s * a[1], s * a[2], s * a[3]}; }

// Leading local behaviour 1/(4 pi^2 r^2) + log(r)/(8 pi^2).
inline double leading_local(double r) { return kLeadingCoeff / (r * r) + kLogCoeff * std::log(r); }

inline double whole_space_greens(double r) {
  return boost::math::cyl_bessel_k(1, r) * kLeadingCoeff / r;
}

// Spherical mean factor for solutions of (1 - Delta) u = 0 in four dimensions.
inline double helmholtz_mean(double a) {
  if (a < 1e-4) return 1 + a * a / 8 + a * a * a * a / 192;
  return 2 * boost::math::cyl_bessel_i(1, a) / a;
}

namespace detail {

struct Nodes {
  std::vector<double> t, w;
};

template <int N>
void add_panel(Nodes& q, double a, double b) {
  using G = boost::math::quadrature::gauss<double, N>;
  const auto& x = G::abscissa();
  const auto& w = G::weights();
  double mid = (a + b) / 2, half = (b - a) / 2;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] == 0) {
      q.t.push_back(mid);
      q.w.push_back(half * w[i]);
      continue;
    }
    q.t.push_back(mid - half * x[i]);
    q.w.push_back(half * w[i]);
    q.t.push_back(mid + half * x[i]);
    q.w.push_back(half * w[i]);
  }
}

// Time nodes on [0,1], geometrically refined towards 0. Below t = 1/32 every
// image lies at distance >= pi and contributes less than e^-78.
inline const Nodes& small_time_nodes() {
  static const Nodes q = [] {
    Nodes n;
    double edges[] = {1.0 / 32, 1.0 / 16, 1.0 / 8, 1.0 / 4, 1.0 / 2, 1};
    for (int i = 0; i + 1 < 6; ++i) add_panel<10>(n, edges[i], edges[i + 1]);
    return n;
  }();
  return q;
}

// Time nodes on [1,40]; the tail beyond is below e^-40.
inline const Nodes& large_time_nodes() {
  static const Nodes q = [] {
    Nodes n;
    double edges[] = {1, 2, 4, 8, 16, 28, 40};
    for (int i = 0; i + 1 < 7; ++i) add_panel<10>(n, edges[i], edges[i + 1]);
    return n;
  }();
  return q;
}

inline double smooth_step(double u) {
  if (u <= 0) return 0;
  if (u >= 1) return 1;
  double a = std::exp(-1 / u), b = std::exp(-1 / (1 - u));
  return a / (a + b);
}

template <class F>
double integrate(F f, double a, double b, double tol = 1e-12) {
  if (b <= a) return 0;
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 15, tol);
}

}  // namespace detail

// H = G - G4 on the reduced cell. Heat kernel split at t = 1: images with
// |m| <= 3 per coordinate for t <= 1, Fourier modes |k| <= 6 for t >= 1.
inline double greens_smooth_part(const Vec4& x_in) {
  Vec4 x = reduce(x_in);
  double r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + x[3] * x[3];
  double h = 0;

  const auto& small = detail::small_time_nodes();
  for (std::size_t q = 0; q < small.t.size(); ++q) {
    double t = small.t[q], c = 1 / std::sqrt(4 * kPi * t);
    std::array<double, 4> g{}, d{};
    for (int i = 0; i < 4; ++i) {
      g[i] = c * std::exp(-x[i] * x[i] / (4 * t));
      double s = 0;
      for (int m = 1; m <= 3; ++m) {
        double a = x[i] + kTwoPi * m, b = x[i] - kTwoPi * m;
        s += std::exp(-a * a / (4 * t)) + std::exp(-b * b / (4 * t));
      }
      d[i] = c * s;
    }
    // prod(g + d) - prod(g), telescoped so that no cancellation occurs.
    double bracket = 0, left = 1;
    for (int j = 0; j < 4; ++j) {
      double right = 1;
      for (int i = j + 1; i < 4; ++i) right *= g[i];
      bracket += left * d[j] * right;
      left *= g[j] + d[j];
    }
    h += small.w[q] * std::exp(-t) * bracket;
  }

  const auto& large = detail::large_time_nodes();
  static const std::vector<std::array<double, 7>> decay = [] {
    std::vector<std::array<double, 7>> out;
    for (double t : detail::large_time_nodes().t) {
      std::array<double, 7> e{};
      for (int k = 1; k <= 6; ++k) e[k] = 2 * std::exp(-t * k * k);
      out.push_back(e);
    }
    return out;
  }();
  std::array<std::array<double, 7>, 4> cosines{};
  for (int i = 0; i < 4; ++i)
    for (int k = 1; k <= 6; ++k) cosines[i][k] = std::cos(k * x[i]);
  for (std::size_t q = 0; q < large.t.size(); ++q) {
    double t = large.t[q], p = 1;
    for (int i = 0; i < 4; ++i) {
      double s = 1;
      for (int k = 1; k <= 6; ++k) s += decay[q][k] * cosines[i][k];
      p *= s / kTwoPi;
    }
    double free = std::exp(-r2 / (4 * t)) / (16 * kPi * kPi * t * t);
    h += large.w[q] * std::exp(-t) * (p - free);
  }
  return h;
}

// G(x) for x != 0 on the torus.
inline double greens(const Vec4& x) {
  Vec4 y = reduce(x);
  double r = norm(y);
  if (r == 0) throw SingularPoint("greens: x = 0");
  return whole_space_greens(r) + greens_smooth_part(y);
}

// rho(x) = c exp(-1/(1-|x|^2)) on the unit ball, normalized in R^4.
class Mollifier {
 public:
  explicit Mollifier(double eps) : eps_(eps) {
    if (!(eps > 0 && eps < 1)) throw PreconditionViolated("mollifier radius must lie in (0,1)");
    mass_ = radial_integral([&](double s) { return helmholtz_mean(eps_ * s); });
  }

  double eps() const { return eps_; }

  static double profile(double s) {
    if (s >= 1) return 0;
    return std::exp(-1 / (1 - s * s));
  }

  static double normalization() {
    static const double c = 1 / (2 * kPi * kPi *
                                 detail::integrate([](double s) { return s * s * s * profile(s); }, 0, 1, 1e-15));
    return c;
  }

  // Radial density of |y| / eps under rho_eps; integrates to 1 on [0,1].
  static double radial_weight(double s) { return 2 * kPi * kPi * normalization() * s * s * s * profile(s); }

  double density(const Vec4& y) const {
    double s = norm(y) / eps_;
    return normalization() * profile(s) / std::pow(eps_, 4);
  }

  // Integral of radial_weight(s) f(s) over [a,b] within [0,1].
  template <class F>
  static double radial_integral(F f, double a = 0, double b = 1) {
    return detail::integrate([&](double s) { return radial_weight(s) * f(s); }, a, b);
  }

  // Mean of Phi(eps |y|) under rho_eps: the factor by which mollification
  // scales any local solution of (1 - Delta) u = 0.
  double mass_factor() const { return mass_; }

 private:
  double eps_;
  double mass_ = 1;
};

// rho_eps * G4 at radius r, from the spherical mean G4(max) Phi(min).
inline double whole_space_mollified(double r, const Mollifier& rho) {
  double eps = rho.eps();
  if (r >= eps) return rho.mass_factor() * whole_space_greens(r);
  double s0 = r / eps;
  double inner = r == 0 ? 0 : whole_space_greens(r) * Mollifier::radial_integral([&](double s) { return helmholtz_mean(eps * s); }, 0, s0);
  double outer = helmholtz_mean(r) * Mollifier::radial_integral([&](double s) { return whole_space_greens(eps * s); }, s0, 1);
  return inner + outer;
}

inline double greens_mollified(const Vec4& x, const Mollifier& rho) {
  if (rho.eps() > 0.25) throw PreconditionViolated("greens_mollified needs eps <= 1/4");
  Vec4 y = reduce(x);
  return whole_space_mollified(norm(y), rho) + rho.mass_factor() * greens_smooth_part(y);
}

inline double greens_mollified(const Vec4& x, double eps) { return greens_mollified(x, Mollifier(eps)); }

inline double greens_at_zero(double eps) { return greens_mollified(Vec4{0, 0, 0, 0}, eps); }

// G_eps with the radial profile inside the support tabulated once, for Monte
// Carlo loops. Inside |x| < eps the profile of rho_eps * G4 is interpolated by
// a clamped cubic spline on 257 nodes.
class MollifiedGreens {
 public:
  explicit MollifiedGreens(double eps, int nodes = 257) : rho_(eps) {
    if (eps > 0.25) throw PreconditionViolated("MollifiedGreens needs eps <= 1/4");
    std::vector<double> v(nodes);
    h_ = eps / (nodes - 1);
    for (int i = 0; i < nodes; ++i) v[i] = whole_space_mollified(i * h_, rho_);
    double k0 = boost::math::cyl_bessel_k(0, eps), k1 = boost::math::cyl_bessel_k(1, eps);
    double slope = rho_.mass_factor() * (-eps * k0 - 2 * k1) * kLeadingCoeff / (eps * eps);
    spline_ = boost::math::interpolators::cardinal_cubic_b_spline<double>(v.begin(), v.end(), 0.0, h_, 0.0, slope);
  }

  const Mollifier& mollifier() const { return rho_; }
  double eps() const { return rho_.eps(); }

  double whole_space_part(double r) const {
    if (r >= rho_.eps()) return rho_.mass_factor() * whole_space_greens(r);
    return spline_(r);
  }

  double operator()(const Vec4& x) const {
    Vec4 y = reduce(x);
    return whole_space_part(norm(y)) + rho_.mass_factor() * greens_smooth_part(y);
  }

 private:
  Mollifier rho_;
  double h_ = 0;
  boost::math::interpolators::cardinal_cubic_b_spline<double> spline_;
};

// Leading local kernel, blended smoothly on [1/4, 1/2] to its value at 1/2.
inline double greens_local_radial(double r) {
  double tail = leading_local(0.5);
  if (r >= 0.5) return tail;
  double b = detail::smooth_step((r - 0.25) / 0.25);
  return (1 - b) * leading_local(r) + b * tail;
}

inline double greens_local(const Vec4& x) {
  double r = torus_norm(x);
  if (r == 0) throw SingularPoint("greens_local: x = 0");
  return greens_local_radial(r);
}

// rho_eps * G_loc. The 1/r^2 part uses Newton's theorem, the rest is averaged
// over spheres by Gauss-Legendre in the polar angle.
inline double greens_local_mollified(const Vec4& x, const Mollifier& rho) {
  double r = torus_norm(x), eps = rho.eps();
  auto rest = [](double p) { return p == 0 ? 0.0 : greens_local_radial(p) - kLeadingCoeff / (p * p); };
  auto sphere_mean = [&](double a) {
    if (r == 0 || a == 0) return rest(std::max(r, a));
    using G = boost::math::quadrature::gauss<double, 30>;
    // Mean over S^3 has density (2/pi) sin^2(theta) on [0, pi].
    auto f = [&](double th) {
      double s = std::sin(th);
      return rest(std::sqrt(std::max(0.0, r * r + a * a - 2 * r * a * std::cos(th)))) * s * s;
    };
    return 2 / kPi * G::integrate(f, 0.0, kPi);
  };
  double newton = Mollifier::radial_integral([&](double s) {
    double m = std::max(r, eps * s);
    return kLeadingCoeff / (m * m);
  });
  double other = Mollifier::radial_integral([&](double s) { return sphere_mean(eps * s); });
  return newton + other;
}

struct GreensEvaluator {
  KernelMode mode = KernelMode::ExactTorus;
  int image_radius = 3;
  int fourier_cutoff = 6;
  double split_time = 1.0;
  double error_budget = 1e-6;

  double operator()(const Vec4& x) const { return mode == KernelMode::ExactTorus ? greens(x) : greens_local(x); }

  double mollified(const Vec4& x, const Mollifier& rho) const {
    return mode == KernelMode::ExactTorus ? greens_mollified(x, rho) : greens_local_mollified(x, rho);
  }
};

// H G_eps(x, y | x*) with central differences at step eps/16.
inline double taylor_remainder(const Vec4& x, const Vec4& y, const Vec4& xs, double eps, int order = 1,
                               KernelMode mode = KernelMode::ExactTorus) {
  if (order != 1) throw PreconditionViolated("taylor_remainder: only order 1 is implemented");
  Vec4 dx = reduce(x - xs);
  double delta = norm(dx);
  if (!(delta < std::min(torus_norm(x - y), torus_norm(xs - y))))
    throw PreconditionViolated("taylor_remainder: |x - x*| must be below min(|x - y|, |x* - y|)");
  if (delta == 0) return 0;
  GreensEvaluator g{mode};
  Mollifier rho(eps);
  Vec4 z = xs - y;
  double h = eps / 16;
  double linear = 0;
  for (int i = 0; i < 4; ++i) {
    Vec4 e{};
    e[i] = h;
    linear += dx[i] * (g.mollified(z + e, rho) - g.mollified(z - e, rho)) / (2 * h);
  }
  return g.mollified(xs + dx - y, rho) - g.mollified(z, rho) - linear;
}

// Integral over T^4 of a kernel whose only singularity is radial at 0. The
// part k(r) chi(r) is integrated in polar form, the smooth periodic rest by
// the midpoint rule on an n^4 grid.
inline double torus_integral(const std::function<double(const Vec4&)>& f, const std::function<double(double)>& radial,
                             int n = 16, double kink = 0) {
  auto chi = [](double r) { return 1 - detail::smooth_step((r - 1) / 1.5); };
  auto polar = [&](double r) { return 2 * kPi * kPi * r * r * r * radial(r) * chi(r); };
  double ball = 0;
  if (kink > 0 && kink < 2.5) ball = detail::integrate(polar, 0, kink, 1e-11) + detail::integrate(polar, kink, 2.5, 1e-11);
  else ball = detail::integrate(polar, 0, 2.5, 1e-11);
  double h = kTwoPi / n, sum = 0;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        for (int d = 0; d < n; ++d) {
          Vec4 x{-kPi + (a + 0.5) * h, -kPi + (b + 0.5) * h, -kPi + (c + 0.5) * h, -kPi + (d + 0.5) * h};
          double r = norm(x);
          sum += f(x) - radial(r) * chi(r);
        }
  return ball + sum * h * h * h * h;
}

inline double integral_of_greens(int n = 16) {
  return torus_integral([](const Vec4& x) { return greens(x); }, whole_space_greens, n);
}

inline double integral_of_mollified_greens(double eps, int n = 16) {
  Mollifier rho(eps);
  return torus_integral([&](const Vec4& x) { return greens_mollified(x, rho); },
                        [&](double r) { return whole_space_mollified(r, rho); }, n, eps);
}

// Least squares slope of log G_eps(0) against log eps.
inline double at_zero_slope(const std::vector<double>& eps) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0, n = static_cast<double>(eps.size());
  for (double e : eps) {
    double lx = std::log(e), ly = std::log(greens_at_zero(e));
    sx += lx, sy += ly, sxx += lx * lx, sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace anderson
