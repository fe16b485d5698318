// Fits the envelope constant C in
//   |I_n - log(2)/(8 pi^2)| <= C (2^-n + 2^-(N-n-1))
// on coarse cutoffs and writes data/valuation_constants.json. The constant is
// the largest observed ratio times a safety factor of 1.5.
//
//   calibrate_shells [--seed N] [--samples N] [--out PATH]

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>

#include "anderson/valuation.hpp"

using namespace anderson;

int main(int argc, char** argv) {
  CLI::App app{"Calibrate the shell integral envelope"};
  unsigned long seed = 20240602;
  std::size_t samples = 100000;
  std::string out = "data/valuation_constants.json";
  app.add_option("--seed", seed);
  app.add_option("--samples", samples);
  app.add_option("--out", out);
  CLI11_PARSE(app, argc, argv);

  const double safety = 1.5;
  const double target = std::log(2.0) / (8 * kPi * kPi);
  double worst = 0;
  nlohmann::json rows = nlohmann::json::array();
  for (int N : {6, 7, 8}) {
    double eps = std::ldexp(1.0, -N);
    for (int n = 0; n < N; ++n) {
      MCConfig cfg;
      cfg.samples = samples;
      cfg.seed = seed;
      auto r = shell_integral(n, eps, cfg);
      double envelope = std::ldexp(1.0, -n) + std::ldexp(1.0, -(N - n - 1));
      double ratio = std::abs(r.estimate - target) / envelope;
      worst = std::max(worst, ratio);
      rows.push_back({{"N", N}, {"n", n}, {"estimate", r.estimate}, {"stderr", r.standard_error}, {"ratio", ratio}});
      std::cerr << N << " " << n << " " << r.estimate << " +- " << r.standard_error << " ratio " << ratio << "\n";
    }
  }

  nlohmann::json j;
  j["seed"] = seed;
  j["samples"] = samples;
  j["safety_factor"] = safety;
  j["constants"] = {{"shell_envelope", safety * worst}};
  j["observations"] = rows;
  std::ofstream(out) << j.dump(2) << "\n";
  std::cout << j["constants"].dump(2) << "\n";
}
