#pragma once

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lmsf/montecarlo.hpp"
#include "lmsf/report.hpp"

namespace lmsf {

class config_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised instead of printing when --help is requested, so parsing stays
/// side-effect free and testable.
struct help_requested {
  std::string text;
};

inline constexpr int exit_ok = 0;
inline constexpr int exit_failure = 1;
inline constexpr int exit_config = 2;
inline constexpr int exit_all_diverged = 3;
inline constexpr int exit_io = 4;

struct CliOptions {
  std::string command;  // run | sweep | penalty-curve
  ExperimentSpec spec;
  std::filesystem::path out_dir{"out"};
  unsigned threads{0};  // 0 = all available cores
  std::string sweep_parameter;
  std::vector<double> sweep_values;
  double epsilon{20.0};
  double delta{0.05};
  std::size_t grid{401};
};

/// Parses the argument list (without argv[0]) into fully resolved options.
/// Precedence: flags > config file > built-in defaults. Throws config_error
/// with a message naming the offending field, or help_requested.
inline CliOptions parse_cli(const std::vector<std::string>& args) {
  std::size_t n_taps = 128;
  std::size_t n_nonzero = 4;
  double snr_db = 10.0;
  double mu = 0.005;
  double phi = 0.8;
  double lambda_za = 4e-5;
  double lambda_rza = 4e-3;
  double lambda_rl1 = 4e-5;
  double epsilon = 20.0;
  double delta = 0.05;
  std::size_t n_runs = 200;
  std::size_t n_iters = 2000;
  std::uint64_t seed = 42;
  unsigned threads = 0;
  std::vector<std::string> algos{"lmsf", "za", "rza", "rl1"};
  std::string out_dir = "out";
  std::string sweep_param;
  std::vector<double> sweep_values;
  std::size_t grid = 401;

  CLI::App app{"Sparse adaptive channel estimation benchmarks (LMS/F family)"};
  app.name("lmsf-sim");
  app.set_config("--config", "", "flat key=value file mirroring the long flag names");
  constexpr auto size_max = std::numeric_limits<std::size_t>::max();
  app.add_option("--N", n_taps, "channel length (taps)")
      ->check(CLI::Range(std::size_t{1}, size_max))
      ->capture_default_str();
  app.add_option("--K", n_nonzero, "number of nonzero taps")
      ->check(CLI::Range(std::size_t{1}, size_max))
      ->capture_default_str();
  app.add_option("--snr-db", snr_db, "signal-to-noise ratio in dB")->capture_default_str();
  app.add_option("--mu", mu, "step size")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--phi", phi, "LMS/F threshold")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--lambda-za", lambda_za, "ZA regularization weight")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  app.add_option("--lambda-rza", lambda_rza, "RZA regularization weight")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  app.add_option("--lambda-rl1", lambda_rl1, "RL1 regularization weight")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  app.add_option("--epsilon", epsilon, "RZA reweight factor")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--delta", delta, "RL1 reweight offset")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--runs", n_runs, "Monte-Carlo runs")
      ->check(CLI::Range(std::size_t{1}, size_max))
      ->capture_default_str();
  app.add_option("--iters", n_iters, "iterations per run")
      ->check(CLI::Range(std::size_t{1}, size_max))
      ->capture_default_str();
  app.add_option("--seed", seed, "base seed")->capture_default_str();
  app.add_option("--threads", threads, "worker threads (0 = all cores)")->capture_default_str();
  app.add_option("--algos", algos, "comma-separated algorithms: lmsf,za,rza,rl1")
      ->delimiter(',')
      ->capture_default_str();
  app.add_option("--out", out_dir, "output directory")->capture_default_str();

  CLI::App* run_cmd = app.add_subcommand("run", "run one experiment");
  run_cmd->fallthrough();
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "rerun the experiment across parameter values");
  sweep_cmd->fallthrough();
  sweep_cmd->add_option("--param", sweep_param, "swept parameter: phi, K or snr_db")->required();
  sweep_cmd->add_option("--values", sweep_values, "comma-separated sweep values")
      ->required()
      ->delimiter(',');
  CLI::App* penalty_cmd =
      app.add_subcommand("penalty-curve", "tabulate the attractor curves over w in [-1, 1]");
  penalty_cmd->fallthrough();
  penalty_cmd->add_option("--grid", grid, "grid points")
      ->check(CLI::Range(std::size_t{2}, size_max))
      ->capture_default_str();
  app.require_subcommand(1);

  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("lmsf-sim");
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    throw help_requested{app.help()};
  } catch (const CLI::CallForAllHelp&) {
    throw help_requested{app.help("", CLI::AppFormatMode::All)};
  } catch (const CLI::ParseError& e) {
    throw config_error(e.what());
  }

  CliOptions opt;
  opt.out_dir = out_dir;
  opt.threads = threads;
  opt.epsilon = epsilon;
  opt.delta = delta;
  opt.grid = grid;

  if (n_nonzero > n_taps)
    throw config_error("K: must not exceed N (K=" + std::to_string(n_nonzero) +
                       ", N=" + std::to_string(n_taps) + ")");

  opt.spec.channel = SparseChannelSpec{n_taps, n_nonzero, 1.0 / static_cast<double>(n_nonzero)};
  opt.spec.noise = NoiseSpec::from_snr_db(snr_db, 1.0);
  opt.spec.n_runs = n_runs;
  opt.spec.n_iterations = n_iters;
  opt.spec.base_seed = seed;
  opt.spec.algorithms.clear();
  std::set<std::string> seen;
  for (const std::string& token : algos) {
    if (!seen.insert(token).second) throw config_error("algos: duplicate algorithm '" + token + "'");
    const std::optional<EstimatorKind> kind = kind_from_string(token);
    if (!kind)
      throw config_error("algos: unknown algorithm '" + token + "' (expected lmsf, za, rza, rl1)");
    EstimatorConfig cfg;
    cfg.kind = *kind;
    cfg.mu = mu;
    cfg.phi = phi;
    cfg.epsilon = epsilon;
    cfg.delta = delta;
    switch (*kind) {
      case EstimatorKind::LMSF: cfg.lambda = 0.0; break;
      case EstimatorKind::ZA: cfg.lambda = lambda_za; break;
      case EstimatorKind::RZA: cfg.lambda = lambda_rza; break;
      case EstimatorKind::RL1: cfg.lambda = lambda_rl1; break;
    }
    opt.spec.algorithms.push_back({token, cfg});
  }

  if (sweep_cmd->parsed()) {
    opt.command = "sweep";
    if (sweep_param == "snr-db") sweep_param = "snr_db";
    if (sweep_param != "phi" && sweep_param != "K" && sweep_param != "snr_db")
      throw config_error("param: unknown sweep parameter '" + sweep_param +
                         "' (expected phi, K or snr_db)");
    if (sweep_param == "K")
      for (const double v : sweep_values) {
        const auto k = static_cast<std::size_t>(v);
        if (static_cast<double>(k) != v || k == 0 || k > n_taps)
          throw config_error("values: K sweep values must be integers in [1, N]");
      }
    opt.sweep_parameter = sweep_param;
    opt.sweep_values = sweep_values;
  } else if (run_cmd->parsed()) {
    opt.command = "run";
  } else {
    opt.command = "penalty-curve";
  }

  if (opt.command != "penalty-curve") {
    try {
      opt.spec.validate();
    } catch (const std::invalid_argument& e) {
      throw config_error(e.what());
    }
  }
  return opt;
}

namespace detail {

inline std::vector<MseTrace> sweep_columns(const RunManifest& manifest,
                                           std::span<const ExperimentResult> cells) {
  std::vector<MseTrace> columns;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    for (const MseTrace& trace : cells[c].traces) {
      MseTrace column = trace;
      if (manifest.command == "sweep")
        column.label = trace.label + "@" + manifest.sweep_parameter + "=" +
                       format_double(manifest.sweep_values[c]);
      columns.push_back(std::move(column));
    }
  }
  return columns;
}

}  // namespace detail

/// Full CLI entry point; maps failures onto the documented exit codes.
inline int run_cli(int argc, const char* const* argv) {
  CliOptions opt;
  try {
    opt = parse_cli(std::vector<std::string>(argv + 1, argv + argc));
  } catch (const help_requested& h) {
    std::cout << h.text;
    return exit_ok;
  } catch (const config_error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return exit_config;
  }

  try {
    std::error_code ec;
    std::filesystem::create_directories(opt.out_dir, ec);
    if (ec || !std::filesystem::is_directory(opt.out_dir))
      throw io_error("cannot create output directory " + opt.out_dir.string() +
                     (ec ? ": " + ec.message() : ""));

    RunManifest manifest;
    manifest.command = opt.command;
    manifest.created_utc = utc_timestamp();

    if (opt.command == "penalty-curve") {
      manifest.penalty_epsilon = opt.epsilon;
      manifest.penalty_delta = opt.delta;
      manifest.penalty_grid = opt.grid;
      emit_penalty_csv(opt.epsilon, opt.delta, opt.grid, opt.out_dir / "penalty.csv");
      emit_manifest_json(manifest, opt.out_dir / "manifest.json");
      std::cout << "wrote " << (opt.out_dir / "penalty.csv").string() << '\n';
      return exit_ok;
    }

    manifest.spec = opt.spec;
    std::vector<ExperimentResult> cells;
    if (opt.command == "run") {
      cells.push_back(run_experiment(opt.spec, opt.threads));
    } else {
      manifest.sweep_parameter = opt.sweep_parameter;
      manifest.sweep_values = opt.sweep_values;
      SweepResult result = sweep(opt.spec, opt.sweep_parameter, opt.sweep_values, opt.threads);
      cells = std::move(result.cells);
    }
    for (const ExperimentResult& cell : cells) manifest.diverged_runs.push_back(cell.diverged_runs);

    emit_mse_csv(detail::sweep_columns(manifest, cells), opt.out_dir / "mse.csv");
    emit_summary_json(manifest, cells, opt.out_dir / "summary.json");
    emit_manifest_json(manifest, opt.out_dir / "manifest.json");
    std::cout << "wrote " << (opt.out_dir / "mse.csv").string() << ", summary.json, manifest.json\n";
    return exit_ok;
  } catch (const empty_trace_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_all_diverged;
  } catch (const io_error& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return exit_io;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return exit_io;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return exit_config;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_failure;
  }
}

}  // namespace lmsf
