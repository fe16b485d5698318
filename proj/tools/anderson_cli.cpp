// anderson verify {identities|sectors|renorm|numeric} [budget flags]
// anderson report {sigma-table|scan|classify|renorm} [flags]
//
// Exit status: 0 success, 1 a check failed, 2 configuration or budget error.

#include <CLI11.hpp>

#include "anderson/cli.hpp"

#ifndef ANDERSON_DATA_DIR
#define ANDERSON_DATA_DIR "data"
#endif

using namespace anderson;

namespace {

void add_common(CLI::App* c, cli::Options& o) {
  c->add_option("--trees", o.trees, "tree sizes n1,n2,...");
  c->add_option("--nmax", o.nmax, "order bound");
  c->add_option("--eps", o.eps, "cutoff 2^-k, or a range 2^-a..2^-b for scans");
  c->add_option("--samples", o.samples, "Monte Carlo samples, e.g. 10^6");
  c->add_option("--seed", o.seed, "random seed");
  c->add_option("--kernel-mode", o.kernel_mode, "exact or local");
  c->add_option("--out", o.out, "root directory for run outputs");
  c->add_option("--diagram", o.diagram, "built-in diagram name or JSON file");
  c->add_option("--lambda", o.lambda, "rescaled coupling");
  c->add_option("--phi", o.phi, "test function: one or bump");
  c->add_option("--constants", o.constants_dir, "directory of frozen constants");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Diagram calculus for the Anderson Hamiltonian in four dimensions"};
  app.require_subcommand(1);
  cli::Options o;
  o.constants_dir = ANDERSON_DATA_DIR;
  for (int i = 0; i < argc; ++i) o.argv.push_back(argv[i]);

  auto* verify = app.add_subcommand("verify", "run an acceptance suite");
  verify->add_option("suite", o.suite_or_kind, "identities, sectors, renorm or numeric")->required();
  add_common(verify, o);

  auto* report = app.add_subcommand("report", "write a table or listing");
  report->add_option("kind", o.suite_or_kind, "sigma-table, scan, classify or renorm")->required();
  add_common(report, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? cli::kExitOk : cli::kExitConfig;
  }

  return cli::guarded(
      [&] { return verify->parsed() ? cli::cmd_verify(o, std::cout) : cli::cmd_report(o, std::cout); }, std::cerr);
}
