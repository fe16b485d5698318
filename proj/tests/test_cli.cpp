#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <sys/wait.h>

#include "anderson/cli.hpp"

using namespace anderson;
using namespace anderson::cli;

namespace {

struct ScratchDir {
  fs::path path = fs::temp_directory_path() / ("anderson_cli_test_" + std::to_string(::getpid()));
  ScratchDir() {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~ScratchDir() { fs::remove_all(path); }
};

fs::path scratch_root() {
  static ScratchDir dir;
  return dir.path;
}

struct Result {
  int code;
  std::string out;
};

// Runs the binary with outputs under `out`; stdout and stderr are captured.
Result run(const std::string& args, const fs::path& out) {
  fs::path log = out.string() + ".log";
  std::string cmd = std::string(ANDERSON_CLI) + " " + args + " --out " + out.string() + " > " + log.string() + " 2>&1";
  int status = std::system(cmd.c_str());
  std::ifstream in(log);
  std::stringstream ss;
  ss << in.rdbuf();
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, ss.str()};
}

std::vector<fs::path> runs_in(const fs::path& root) {
  std::vector<fs::path> out;
  if (fs::exists(root))
    for (auto& e : fs::directory_iterator(root))
      if (e.is_directory()) out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("flag parsing") {
  CHECK(parse_eps("2^-10") == std::ldexp(1.0, -10));
  CHECK_THROWS_AS(parse_eps("0.001"), ConfigError);
  CHECK_THROWS_AS(parse_eps("2^-0"), ConfigError);
  CHECK_THROWS_AS(parse_eps("2^10"), ConfigError);
  CHECK(parse_eps_list("2^-4..2^-8").size() == 5);
  CHECK(parse_eps_list("2^-8..2^-4").front() == 1.0 / 16);
  CHECK(parse_eps_list("2^-3,2^-5") == std::vector<double>{1.0 / 8, 1.0 / 32});
  CHECK(parse_count("10^6") == 1000000);
  CHECK(parse_count("1e5") == 100000);
  CHECK(parse_count("250") == 250);
  CHECK_THROWS_AS(parse_count("lots"), ConfigError);
  CHECK_THROWS_AS(parse_count("0"), ConfigError);
  CHECK(parse_sizes("2,2") == std::vector<int>{2, 2});
  CHECK_THROWS_AS(parse_sizes("2,,2"), ConfigError);
  CHECK(parse_kernel_mode("local") == KernelMode::LeadingLocal);
  CHECK_THROWS_AS(parse_kernel_mode("fast"), ConfigError);
  CHECK(parse_suite("Identities") == Suite::Identities);
  CHECK(parse_suite("numeric") == Suite::Numeric);
  CHECK_THROWS_AS(parse_suite("all"), ConfigError);
  CHECK_THROWS_AS(load_diagram("no_such_diagram"), ConfigError);
  CHECK(load_diagram("bubble4").num_internal() == 2);
}

TEST_CASE("classification listing") {
  Json j = classify_json({2, 2});
  REQUIRE(j.size() == 3);
  CHECK(j[0]["class"] == "Negative");
  CHECK(j[1]["class"] == "ZeroDegree");
  CHECK(j[2]["class"] == "ZeroDegree");
  CHECK(is_isomorphic(diagram_from_json(j[1]["diagram"]), named_diagram("bubble4"), false));
}

TEST_CASE("classify through the binary") {
  fs::path out = scratch_root() / "classify";
  auto r = run("report classify --trees 2,2", out);
  CHECK(r.code == 0);
  auto dirs = runs_in(out);
  REQUIRE(dirs.size() == 1);
  Json listing = read_json_file((dirs[0] / "classify.json").string());
  REQUIRE(listing.size() == 3);
  CHECK(listing[0]["class"] == "Negative");
  Json m = read_json_file((dirs[0] / "manifest.json").string());
  CHECK(m["schema"] == "v1");
  CHECK(m["command"] == "classify");
  CHECK(m["parameters"]["trees"] == "2,2");
  CHECK(m["exit_code"] == 0);
  CHECK(m["constants"]["valuation_constants.json"] != "missing");
  CHECK(m["outputs"].size() == 1);

  // Runs are append-only.
  CHECK(run("report classify --trees 2,2", out).code == 0);
  CHECK(runs_in(out).size() == 2);
  CHECK(fs::exists(dirs[0] / "classify.json"));
}

TEST_CASE("sigma table") {
  fs::path out = scratch_root() / "sigma";
  REQUIRE(run("report sigma-table --nmax 5", out).code == 0);
  auto csv = slurp(runs_in(out)[0] / "sigma_table.csv");
  CHECK(csv.rfind("n,C_n,", 0) == 0);
  CHECK(csv.find("\n5,256,") != std::string::npos);
  CHECK(csv.find("false") == std::string::npos);
  CHECK(run("report sigma-table --nmax 7", out).code == 2);
}

TEST_CASE("verify suites") {
  fs::path out = scratch_root() / "verify";
  auto r = run("verify identities --nmax 4", out);
  CHECK(r.code == 0);
  CHECK(r.out.find("PASS [1]") != std::string::npos);
  CHECK(r.out.find("C_n = 1 4 16 64") != std::string::npos);
  CHECK(r.out.find("FAIL") == std::string::npos);

  r = run("verify Renorm --nmax 6", out);
  CHECK(r.code == 0);
  CHECK(r.out.find("PASS [3]") != std::string::npos);

  // Budget errors still leave a manifest behind.
  fs::path big = scratch_root() / "budget";
  r = run("verify identities --nmax 7", big);
  CHECK(r.code == 2);
  auto dirs = runs_in(big);
  REQUIRE(dirs.size() == 1);
  CHECK(read_json_file((dirs[0] / "manifest.json").string())["exit_code"] == 2);
}

TEST_CASE("configuration errors exit with 2") {
  fs::path out = scratch_root() / "errors";
  CHECK(run("report classify --trees 2,2 --bogus 1", out).code == 2);
  CHECK(run("report scan --diagram bubble4 --eps 0.01", out).code == 2);
  CHECK(run("report scan --diagram nowhere", out).code == 2);
  CHECK(run("report scan --diagram bubble4 --kernel-mode fast", out).code == 2);
  CHECK(run("report histogram", out).code == 2);
  CHECK(run("verify everything", out).code == 2);
  CHECK(run("report classify", out).code == 2);
  CHECK(run("", out).code == 2);
  CHECK(runs_in(out).empty());
}

TEST_CASE("scans are reproducible from the manifest seed") {
  fs::path a = scratch_root() / "scan_a", b = scratch_root() / "scan_b";
  std::string args = "report scan --diagram bubble4 --lambda 1.0 --eps 2^-4..2^-6 --samples 4000 --seed 11";
  REQUIRE(run(args, a).code == 0);
  REQUIRE(run(args, b).code == 0);
  auto da = runs_in(a)[0], db = runs_in(b)[0];
  auto csv = slurp(da / "scan.csv");
  CHECK(csv == slurp(db / "scan.csv"));
  CHECK(csv.rfind("epsilon,N_eps,estimate,stderr,lambda_eps,prediction,deviation\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
  auto diffs = slurp(da / "differences.csv");
  CHECK(std::count(diffs.begin(), diffs.end(), '\n') == 3);
  Json m = read_json_file((da / "manifest.json").string());
  CHECK(m["seed"] == 11);
  CHECK(m["parameters"]["eps"] == "2^-4..2^-6");

  // A diagram can also come from a JSON file.
  fs::path file = scratch_root() / "bubble.json";
  write_json_file(file.string(), to_json(named_diagram("bubble4")));
  fs::path c = scratch_root() / "scan_c";
  REQUIRE(run("report scan --diagram " + file.string() + " --lambda 1.0 --eps 2^-4..2^-6 --samples 4000 --seed 11", c)
              .code == 0);
  CHECK(slurp(runs_in(c)[0] / "scan.csv") == csv);
}

TEST_CASE("renormalised sums") {
  fs::path out = scratch_root() / "renorm";
  REQUIRE(run("report renorm --diagram sunset2", out).code == 0);
  Json j = read_json_file((runs_in(out)[0] / "renormalised.json").string());
  CHECK(j == read_json_file(ANDERSON_SOURCE_DIR "/data/fixtures/sunset2_renormalised.json"));
  REQUIRE(run("report renorm --diagram tadpole", out).code == 0);
}
