// Samples the Green's function bounds and writes data/greens_constants.json.
// Each constant is the sampled maximum times a safety factor of 1.5.
//
//   calibrate_greens [--seed N] [--samples N] [--out PATH]

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <random>

#include "anderson/greens.hpp"

using namespace anderson;

namespace {

Vec4 random_direction(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Vec4 v{n(rng), n(rng), n(rng), n(rng)};
  return (1 / norm(v)) * v;
}

double log_uniform(std::mt19937_64& rng, double a, double b) {
  return std::exp(std::uniform_real_distribution<double>(std::log(a), std::log(b))(rng));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Calibrate Green's function bound constants"};
  unsigned long seed = 20240601;
  int samples = 400;
  std::string out = "data/greens_constants.json";
  app.add_option("--seed", seed);
  app.add_option("--samples", samples);
  app.add_option("--out", out);
  CLI11_PARSE(app, argc, argv);

  std::mt19937_64 rng(seed);
  const double safety = 1.5;
  const double eps_list[] = {1.0 / 8, 1.0 / 16, 1.0 / 32, 1.0 / 64, 1.0 / 128};

  double remainder = 0, upper = 0, two_sided = 0, taylor = 0;
  for (int i = 0; i < samples; ++i) {
    double r = log_uniform(rng, 1e-3, kPi);
    Vec4 x = r * random_direction(rng);
    remainder = std::max(remainder, std::abs(greens(x) - leading_local(torus_norm(x))));

    double eps = eps_list[i % 5];
    Mollifier rho(eps);
    double s = log_uniform(rng, eps / 100, kPi);
    Vec4 z = s * random_direction(rng);
    double rz = torus_norm(z);
    double g = greens_mollified(z, rho);
    upper = std::max(upper, std::abs(g) * (rz * rz + eps * eps));
    if (rz >= 2 * eps) {
      double lo = kLeadingCoeff / ((rz + eps) * (rz + eps)) + kLogCoeff * std::log(rz);
      double hi = kLeadingCoeff / ((rz - eps) * (rz - eps)) + kLogCoeff * std::log(rz);
      two_sided = std::max({two_sided, lo - g, g - hi});
    }

    double rs = log_uniform(rng, 2 * eps, 2.0);
    Vec4 xs = rs * random_direction(rng);
    double delta = rs * std::uniform_real_distribution<double>(0.02, 0.5)(rng);
    Vec4 xx = xs + delta * random_direction(rng);
    Vec4 y{0, 0, 0, 0};
    double h = taylor_remainder(xx, y, xs, eps);
    double rx = torus_norm(xx), m = std::min(rx, rs);
    double bound = delta * delta / ((rx + eps) * (rx + eps) * (m + eps) * (m + eps));
    taylor = std::max(taylor, std::abs(h) / bound);
  }

  nlohmann::json j;
  j["seed"] = seed;
  j["samples"] = samples;
  j["safety_factor"] = safety;
  j["constants"] = {
      {"asymptotic_remainder", safety * remainder},
      {"mollified_upper", safety * upper},
      {"mollified_two_sided", safety * std::max(two_sided, 1e-3)},
      {"taylor_first_order", safety * taylor},
  };
  std::ofstream(out) << j.dump(2) << "\n";
  std::cout << j.dump(2) << "\n";
}
