#pragma once

// Command implementations behind the `anderson` executable. Each command
// writes into a fresh run directory and leaves a manifest next to its
// outputs; nothing already on disk is overwritten.

#include <chrono>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <regex>

#include "anderson/acceptance.hpp"

namespace anderson::cli {

namespace fs = std::filesystem;

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;

// Bad flag values, unknown names and similar.
struct ConfigError : Error { using Error::Error; };

// "2^-k" -> 2^-k. Nothing else is accepted, so every cutoff is dyadic.
inline double parse_eps(const std::string& s) {
  static const std::regex re(R"(\s*2\^-(\d+)\s*)");
  std::smatch m;
  if (!std::regex_match(s, m, re)) throw ConfigError("epsilon must be written 2^-k, got '" + s + "'");
  int k = std::stoi(m[1]);
  if (k < 1 || k > 40) throw ConfigError("epsilon exponent out of range: " + s);
  return std::ldexp(1.0, -k);
}

// "2^-a..2^-b" (every power in between) or a comma list of tokens.
inline std::vector<double> parse_eps_list(const std::string& s) {
  auto dots = s.find("..");
  std::vector<double> out;
  if (dots != std::string::npos) {
    int a = dyadic_level(parse_eps(s.substr(0, dots))), b = dyadic_level(parse_eps(s.substr(dots + 2)));
    if (a > b) std::swap(a, b);
    for (int k = a; k <= b; ++k) out.push_back(std::ldexp(1.0, -k));
    return out;
  }
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(parse_eps(tok));
  if (out.empty()) throw ConfigError("empty epsilon list");
  return out;
}

// "1000000", "10^6" or "1e6".
inline std::size_t parse_count(const std::string& s) {
  static const std::regex power(R"(\s*(\d+)\^(\d+)\s*)"), plain(R"(\s*(\d+)(e(\d+))?\s*)");
  std::smatch m;
  double v;
  if (std::regex_match(s, m, power))
    v = std::pow(std::stod(m[1]), std::stod(m[2]));
  else if (std::regex_match(s, m, plain))
    v = std::stod(m[1]) * (m[3].matched ? std::pow(10.0, std::stod(m[3])) : 1.0);
  else
    throw ConfigError("not a count: '" + s + "'");
  if (v < 1 || v > 1e12) throw ConfigError("count out of range: " + s);
  return static_cast<std::size_t>(std::llround(v));
}

inline std::vector<int> parse_sizes(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty() || tok.find_first_not_of("0123456789") != std::string::npos)
      throw ConfigError("tree sizes must be a comma list of integers, got '" + s + "'");
    out.push_back(std::stoi(tok));
  }
  if (out.empty()) throw ConfigError("no tree sizes");
  return out;
}

inline KernelMode parse_kernel_mode(const std::string& s) {
  if (s == "exact") return KernelMode::ExactTorus;
  if (s == "local") return KernelMode::LeadingLocal;
  throw ConfigError("kernel mode must be exact or local, got '" + s + "'");
}

inline std::string to_string(KernelMode m) { return m == KernelMode::ExactTorus ? "exact" : "local"; }

inline Suite parse_suite(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "identities") return Suite::Identities;
  if (s == "renorm") return Suite::Renorm;
  if (s == "sectors") return Suite::Sectors;
  if (s == "numeric") return Suite::Numeric;
  throw ConfigError("unknown suite '" + s + "' (identities, sectors, renorm, numeric)");
}

// A named diagram or a path to a diagram JSON file.
inline Diagram load_diagram(const std::string& s) {
  auto names = named_diagram_list();
  if (std::find(names.begin(), names.end(), s) != names.end()) return named_diagram(s);
  if (fs::exists(s)) return diagram_from_json(read_json_file(s));
  throw ConfigError("unknown diagram '" + s + "' (not a built-in name or a file)");
}

inline std::string hex64(std::uint64_t x) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << x;
  return os.str();
}

// FNV-1a of the file contents, as a version stamp for frozen constants.
inline std::string file_digest(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) return "missing";
  std::uint64_t h = 1469598103934665603ull;
  char c;
  while (in.get(c)) h = (h ^ static_cast<unsigned char>(c)) * 1099511628211ull;
  return hex64(h);
}

inline std::string utc_stamp() {
  auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y%m%dT%H%M%SZ");
  return os.str();
}

// A new directory under `root`; a numeric suffix keeps runs within the same
// second apart.
inline fs::path make_run_dir(const fs::path& root, const std::string& command) {
  fs::create_directories(root);
  std::string base = command + "-" + utc_stamp();
  for (int k = 0;; ++k) {
    fs::path p = root / (k ? base + "-" + std::to_string(k) : base);
    if (fs::create_directory(p)) return p;
  }
}

struct RunManifest {
  std::string command;
  Json parameters = Json::object();
  std::uint64_t seed = 0;
  std::vector<std::string> outputs;
  std::vector<std::string> argv;
  int exit_code = 0;

  Json to_json(const fs::path& constants_dir) const {
    Json j;
    j["schema"] = "v1";
    j["command"] = command;
    j["argv"] = argv;
    j["parameters"] = parameters;
    j["seed"] = seed;
    Json c = Json::object();
    for (auto name : {"greens_constants.json", "valuation_constants.json"})
      c[name] = file_digest(constants_dir / name);
    j["constants"] = c;
    j["outputs"] = outputs;
    j["exit_code"] = exit_code;
    j["created"] = utc_stamp();
    return j;
  }
};

struct Options {
  std::string suite_or_kind;
  std::optional<std::string> trees, nmax, eps, samples, diagram, lambda;
  std::uint64_t seed = 20240603;
  std::string kernel_mode = "exact";
  std::string phi = "one";
  std::string out = "runs";
  std::string constants_dir;
  std::vector<std::string> argv;
};

class Run {
 public:
  Run(const Options& o, std::string command) : opts_(o) {
    m_.command = std::move(command);
    m_.seed = o.seed;
    m_.argv = o.argv;
    dir_ = make_run_dir(o.out, m_.command);
  }

  fs::path write(const std::string& name, const std::string& text) {
    fs::path p = dir_ / name;
    std::ofstream(p) << text;
    m_.outputs.push_back(p.string());
    return p;
  }

  Json& parameters() { return m_.parameters; }
  const fs::path& dir() const { return dir_; }

  int finish(int code) {
    m_.exit_code = code;
    write_json_file((dir_ / "manifest.json").string(), m_.to_json(opts_.constants_dir));
    return code;
  }

 private:
  const Options& opts_;
  RunManifest m_;
  fs::path dir_;
};

inline void record_common(Run& run, const Options& o) {
  auto& p = run.parameters();
  if (o.trees) p["trees"] = *o.trees;
  if (o.nmax) p["nmax"] = *o.nmax;
  if (o.eps) p["eps"] = *o.eps;
  if (o.samples) p["samples"] = *o.samples;
  if (o.diagram) p["diagram"] = *o.diagram;
  if (o.lambda) p["lambda"] = *o.lambda;
  p["kernel_mode"] = o.kernel_mode;
  p["phi"] = o.phi;
}

inline CheckBudget budget_from(const Options& o) {
  CheckBudget b;
  if (o.nmax) b.nmax = static_cast<int>(parse_count(*o.nmax));
  if (o.eps) b.eps = parse_eps(*o.eps);
  if (o.samples) b.samples = parse_count(*o.samples);
  b.seed = o.seed;
  b.mode = parse_kernel_mode(o.kernel_mode);
  b.constants_dir = o.constants_dir;
  return b;
}

inline int cmd_verify(const Options& o, std::ostream& out) {
  Suite s = parse_suite(o.suite_or_kind);
  CheckBudget b = budget_from(o);
  Run run(o, "verify-" + o.suite_or_kind);
  record_common(run, o);
  run.parameters()["suite"] = o.suite_or_kind;
  Json report = Json::array();
  bool all = true;
  std::string text;
  try {
    for (int id : suite_criteria(s)) {
      CheckResult r = run_check(id, b);
      out << r.line() << std::endl;
      text += r.line() + "\n";
      report.push_back(to_json(r));
      all = all && r.pass;
    }
  } catch (...) {
    run.write("report.txt", text);
    run.finish(kExitConfig);
    throw;
  }
  run.write("report.json", report.dump(2) + "\n");
  run.write("report.txt", text);
  out << "run directory: " << run.dir().string() << std::endl;
  return run.finish(all ? kExitOk : kExitFailure);
}

inline Json classify_json(const std::vector<int>& sizes) {
  auto trees = ladder_trees(sizes);
  Json out = Json::array();
  for (auto& k : enumerate_pairings(trees, PairingMode::Complete)) {
    Diagram d = build_paired_diagram(trees, k);
    Json pairs = Json::array();
    for (auto& [a, b] : k.pairs) pairs.push_back({{a.tree + 1, a.pos}, {b.tree + 1, b.pos}});
    Json e;
    e["pairing"] = pairs;
    e["class"] = to_string(classify(d));
    e["degree"] = rational_token(degree(d));
    e["diagram"] = to_json(d);
    out.push_back(e);
  }
  return out;
}

inline int cmd_report(const Options& o, std::ostream& out) {
  std::string kind = o.suite_or_kind;
  if (kind == "sigma-table") {
    int nmax = o.nmax ? static_cast<int>(parse_count(*o.nmax)) : 5;
    auto t = sigma_eff_coefficients(nmax);
    Run run(o, "sigma-table");
    record_common(run, o);
    auto p = run.write("sigma_table.csv", sigma_table_csv(t));
    out << "wrote " << p.string() << std::endl;
    return run.finish(kExitOk);
  }
  if (kind == "classify") {
    if (!o.trees) throw ConfigError("classify needs --trees");
    Json j = classify_json(parse_sizes(*o.trees));
    Run run(o, "classify");
    record_common(run, o);
    auto p = run.write("classify.json", j.dump(2) + "\n");
    for (auto& e : j) out << e["class"].get<std::string>() << "\n";
    out << "wrote " << p.string() << std::endl;
    return run.finish(kExitOk);
  }
  if (kind == "renorm") {
    if (!o.diagram) throw ConfigError("renorm needs --diagram");
    Diagram d = load_diagram(*o.diagram);
    Json j = to_json(reduce(zimmermann(d)));
    Run run(o, "renorm");
    record_common(run, o);
    auto p = run.write("renormalised.json", j.dump(2) + "\n");
    out << j.size() << " terms\nwrote " << p.string() << std::endl;
    return run.finish(kExitOk);
  }
  if (kind == "scan") {
    if (!o.diagram) throw ConfigError("scan needs --diagram");
    Diagram d = load_diagram(*o.diagram);
    double lambda = 1;
    if (o.lambda) {
      try {
        lambda = std::stod(*o.lambda);
      } catch (const std::exception&) {
        throw ConfigError("--lambda must be a number");
      }
    }
    auto eps = parse_eps_list(o.eps.value_or("2^-4..2^-8"));
    MCConfig cfg;
    cfg.samples = o.samples ? parse_count(*o.samples) : 100000;
    cfg.seed = o.seed;
    cfg.mode = parse_kernel_mode(o.kernel_mode);
    TestFunction phi;
    if (o.phi == "one")
      phi = TestFunction::one();
    else if (o.phi == "bump")
      phi = TestFunction::product_bump();
    else
      throw ConfigError("--phi must be one or bump");
    auto table = weak_coupling_scan(d, phi, lambda, eps, cfg);
    Run run(o, "scan");
    record_common(run, o);
    std::string csv = scan_csv(table);
    auto p = run.write("scan.csv", csv);
    std::ostringstream diffs;
    diffs << "epsilon,difference\n" << std::setprecision(10);
    for (auto& r : table.rows)
      if (r.difference) diffs << r.eps << "," << *r.difference << "\n";
    run.write("differences.csv", diffs.str());
    out << csv << "wrote " << p.string() << std::endl;
    return run.finish(kExitOk);
  }
  throw ConfigError("unknown report kind '" + kind + "' (sigma-table, scan, classify, renorm)");
}

// Maps library errors to exit codes: budget and configuration problems are 2.
template <class F>
int guarded(F&& f, std::ostream& err) {
  try {
    return f();
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << std::endl;
  } catch (const BudgetExceeded& e) {
    err << "budget exceeded: " << e.what() << std::endl;
  } catch (const PreconditionViolated& e) {
    err << "invalid input: " << e.what() << std::endl;
  } catch (const MalformedJson& e) {
    err << "malformed input: " << e.what() << std::endl;
  } catch (const std::invalid_argument& e) {
    err << "invalid input: " << e.what() << std::endl;
  } catch (const fs::filesystem_error& e) {
    err << "file system error: " << e.what() << std::endl;
  }
  return kExitConfig;
}

}  // namespace anderson::cli
