// latcorr: latent correlation estimation for mixed continuous / binary / truncated data.
//
// Exit codes: 0 success, 1 usage, 2 I/O or numerical failure, 3 missing grid,
// 4 degenerate column.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "latcorr/dataset.hpp"
#include "latcorr/estimator.hpp"
#include "latcorr/interp.hpp"
#include "latcorr/optimize.hpp"
#include "latcorr/synth.hpp"

namespace fs = std::filesystem;
using namespace latcorr;

namespace {

enum Exit : int { kOk = 0, kUsage = 1, kFailure = 2, kMissingGrid = 3, kDegenerate = 4 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string default_grid_dir() {
  if (const char* env = std::getenv("LATCORR_GRID_DIR"); env && *env) return env;
  if (const char* xdg = std::getenv("XDG_DATA_HOME"); xdg && *xdg) {
    return (fs::path(xdg) / "latcorr" / "grids").string();
  }
  if (const char* home = std::getenv("HOME"); home && *home) {
    return (fs::path(home) / ".local" / "share" / "latcorr" / "grids").string();
  }
  return "grids";
}

std::vector<CaseKind> parse_cases(const std::vector<std::string>& names) {
  std::vector<CaseKind> out;
  for (const auto& n : names) {
    if (n == "all") {
      out.assign(std::begin(kAllCases), std::end(kAllCases));
      return out;
    }
    try {
      out.push_back(parse_case_kind(n));
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }
  return out;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  return out;
}

void close_output(std::ofstream& out, const std::string& path) {
  out.close();
  if (!out) throw std::runtime_error("error writing '" + path + "'");
}

GridSet load_grids(const std::string& dir) {
  return GridSet::load_directory(dir, kAllCases);
}

// ---------------------------------------------------------------------------

struct PrecomputeArgs {
  std::vector<std::string> cases{"all"};
  std::string out_dir;
  unsigned threads = 1;
  bool quiet = false;
  bool skip_existing = false;
};

int cmd_precompute(const PrecomputeArgs& a) {
  std::error_code ec;
  fs::create_directories(a.out_dir, ec);
  if (ec) throw std::runtime_error("cannot create '" + a.out_dir + "': " + ec.message());
  for (CaseKind c : parse_cases(a.cases)) {
    if (c == CaseKind::CC) {
      std::cerr << "cc: closed-form inverse, no grid needed\n";
      continue;
    }
    const std::string path = (fs::path(a.out_dir) / (to_string(c) + ".lcg")).string();
    if (a.skip_existing && fs::exists(path)) {
      try {
        (void)load_grid(path);
        std::cerr << "kept " << path << "\n";
        continue;
      } catch (const FormatError& e) {
        std::cerr << "rebuilding " << path << ": " << e.what() << "\n";
      }
    }
    PrecomputeOptions opt;
    opt.threads = a.threads;
    if (!a.quiet) {
      opt.progress = [c](std::size_t done, std::size_t total) {
        if (done == total || done % 50 == 0) {
          std::cerr << "\r" << to_string(c) << ": " << done << "/" << total << std::flush;
        }
      };
    }
    const InterpolationGrid g = precompute_grid(c, opt);
    save_grid(g, path);
    if (!a.quiet) std::cerr << "\n";
    std::cerr << "wrote " << path << "\n";
  }
  return kOk;
}

// ---------------------------------------------------------------------------

struct EstimateArgs {
  std::string input, types, output, grid_dir;
  bool infer = false;
  std::string method = "mlbd";
  double boundary = 0.9;
  unsigned threads = 1;
  std::string on_error = "abort";
};

int cmd_estimate(const EstimateArgs& a) {
  const DataMatrix data = read_dataset_file(a.input);
  const std::vector<VariableType> types =
      a.types.empty() ? infer_types(data) : read_type_spec_file(a.types, data.names());

  MatrixOptions opt;
  opt.estimate.method = parse_estimation_method(a.method);
  opt.estimate.boundary.constant = a.boundary;
  opt.threads = a.threads;
  opt.on_error = a.on_error == "skip" ? ErrorPolicy::skip : ErrorPolicy::abort;

  GridSet grids;
  if (opt.estimate.method != EstimationMethod::org) grids = load_grids(a.grid_dir);

  const LatentCorrelationMatrix m = estimate_matrix(data, types, opt, grids);

  auto out = open_output(a.output);
  write_matrix_csv(out, m);
  close_output(out, a.output);

  fs::path side(a.output);
  side.replace_filename(side.stem().string() + ".provenance.csv");
  auto prov = open_output(side.string());
  write_provenance_csv(prov, m);
  close_output(prov, side.string());
  return kOk;
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::string kind, output, grid_dir;
  double r = 0.5, pi0 = 0.5;
  std::optional<double> pi0b;
  std::size_t n = 100, reps = 100;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  bool sweep = false;
};

int cmd_simulate(const SimulateArgs& a) {
  const CaseKind kind = parse_cases({a.kind}).at(0);
  if (kind == CaseKind::CC) throw UsageError("simulate: cc has a closed-form inverse");
  ScenarioSpec spec{kind, a.r, a.pi0, a.pi0b, a.n, a.reps, a.seed};
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const GridSet grids = load_grids(a.grid_dir);
  if (!grids.find(kind)) throw MissingGridError(kind);

  std::vector<AccuracyCell> cells;
  if (a.sweep) {
    const auto rs = default_sweep_r();
    const auto ps = default_sweep_pi0();
    cells = run_accuracy_sweep(kind, rs, ps, a.n, a.reps, a.seed, grids, a.threads);
  } else {
    cells.push_back(run_accuracy_experiment(spec, grids, a.threads));
  }
  auto out = open_output(a.output);
  write_accuracy_csv(out, cells, a.seed, a.n, a.reps);
  close_output(out, a.output);
  return kOk;
}

// ---------------------------------------------------------------------------

struct BenchArgs {
  std::vector<std::string> cases;
  std::string output, grid_dir;
  std::size_t n = 100, reps = 200;
  std::uint64_t seed = 1;
};

int cmd_bench(const BenchArgs& a) {
  if (a.cases.empty()) throw UsageError("bench: empty case list");
  const std::vector<CaseKind> cases = parse_cases(a.cases);
  const GridSet grids = load_grids(a.grid_dir);
  for (CaseKind c : cases) {
    if (c != CaseKind::CC && !grids.find(c)) throw MissingGridError(c);
  }
  const auto rows = run_timing_benchmark(cases, a.n, a.reps, grids, a.seed);
  auto out = open_output(a.output);
  write_timing_csv(out, rows);
  close_output(out, a.output);
  return kOk;
}

// Maps an exception to the documented exit codes.
int report(const std::exception_ptr& ep) {
  try {
    std::rethrow_exception(ep);
  } catch (const PairError& e) {
    std::cerr << "error: " << e.what() << "\n";
    try {
      std::rethrow_exception(e.cause());
    } catch (const MissingGridError&) {
      return kMissingGrid;
    } catch (const DegenerateVariableError&) {
      return kDegenerate;
    } catch (...) {
      return kFailure;
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const MissingGridError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kMissingGrid;
  } catch (const DegenerateVariableError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDegenerate;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Latent Gaussian copula correlation estimation for mixed data"};
  app.require_subcommand(1);
  const std::string grid_default = default_grid_dir();

  PrecomputeArgs pre;
  pre.out_dir = grid_default;
  auto* sp = app.add_subcommand("precompute", "Build interpolation grid files (<case>.lcg)");
  sp->add_option("--case", pre.cases, "cc, bc, bb, tc, tt, tb or all")->delimiter(',')
      ->capture_default_str();
  sp->add_option("--out-dir", pre.out_dir, "Directory for grid files")->capture_default_str();
  sp->add_option("--threads", pre.threads, "Worker threads")->check(CLI::PositiveNumber);
  sp->add_flag("--quiet", pre.quiet, "No progress output");
  sp->add_flag("--skip-existing", pre.skip_existing, "Keep grid files that already load cleanly");

  EstimateArgs est;
  est.grid_dir = grid_default;
  auto* se = app.add_subcommand("estimate", "Estimate the latent correlation matrix of a CSV dataset");
  se->add_option("--input", est.input, "Dataset CSV (header row of names)")->required()
      ->check(CLI::ExistingFile);
  auto* types_opt =
      se->add_option("--types", est.types, "Type spec: lines '<name>,<continuous|binary|truncated>'")
          ->check(CLI::ExistingFile);
  se->add_flag("--infer-types", est.infer, "Infer column types from the data (default)")
      ->excludes(types_opt);
  se->add_option("--method", est.method, "org, ml or mlbd")
      ->check(CLI::IsMember({"org", "ml", "mlbd"}))->capture_default_str();
  se->add_option("--grid-dir", est.grid_dir, "Directory with <case>.lcg files (env LATCORR_GRID_DIR)")
      ->capture_default_str();
  se->add_option("--output", est.output, "Correlation matrix CSV")->required();
  se->add_option("--boundary-constant", est.boundary, "MLBD interpolates when |tau| <= c * ABD")
      ->check(CLI::PositiveNumber)->capture_default_str();
  se->add_option("--threads", est.threads, "Worker threads")->check(CLI::PositiveNumber);
  se->add_option("--on-error", est.on_error, "abort, or skip failing pairs and mark them missing")
      ->check(CLI::IsMember({"abort", "skip"}))->capture_default_str();

  SimulateArgs sim;
  sim.grid_dir = grid_default;
  auto* ss = app.add_subcommand("simulate", "Accuracy of ML and MLBD against ORG on synthetic data");
  ss->add_option("--case", sim.kind, "bc, bb, tc, tt or tb")->required();
  ss->add_option("--r", sim.r, "Latent correlation")->capture_default_str();
  ss->add_option("--pi0", sim.pi0, "Zero proportion of the first variable")->capture_default_str();
  ss->add_option("--pi0b", sim.pi0b, "Zero proportion of the second variable (default: --pi0)");
  ss->add_option("--n", sim.n, "Sample size")->capture_default_str();
  ss->add_option("--reps", sim.reps, "Replications")->check(CLI::PositiveNumber)->capture_default_str();
  ss->add_option("--seed", sim.seed, "Generator seed")->capture_default_str();
  ss->add_option("--output", sim.output, "Report CSV")->required();
  ss->add_option("--grid-dir", sim.grid_dir, "Directory with <case>.lcg files")->capture_default_str();
  ss->add_option("--threads", sim.threads, "Worker threads")->check(CLI::PositiveNumber);
  ss->add_flag("--sweep", sim.sweep,
               "Run the 9 x 11 grid r = 0.05..0.91, pi0 = 0.03..0.95 instead of one cell");

  BenchArgs bench;
  bench.grid_dir = grid_default;
  auto* sb = app.add_subcommand("bench", "Median per-pair runtime of ORG, ML and MLBD");
  sb->add_option("--cases", bench.cases, "Comma-separated case list")->required()->delimiter(',');
  sb->add_option("--n", bench.n, "Sample size")->check(CLI::PositiveNumber)->capture_default_str();
  sb->add_option("--reps", bench.reps, "Replications")->check(CLI::PositiveNumber)
      ->capture_default_str();
  sb->add_option("--seed", bench.seed, "Generator seed")->capture_default_str();
  sb->add_option("--output", bench.output, "Timing CSV")->required();
  sb->add_option("--grid-dir", bench.grid_dir, "Directory with <case>.lcg files")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (sp->parsed()) return cmd_precompute(pre);
    if (se->parsed()) return cmd_estimate(est);
    if (ss->parsed()) return cmd_simulate(sim);
    if (sb->parsed()) return cmd_bench(bench);
  } catch (...) {
    return report(std::current_exception());
  }
  return kUsage;
}
