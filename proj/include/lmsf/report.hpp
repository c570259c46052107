#pragma once

#include <charconv>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "lmsf/montecarlo.hpp"
#include "lmsf/version.hpp"

namespace lmsf {

class io_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shortest decimal form that parses back to the identical double.
inline std::string format_double(double v) {
  char buf[32];
  const std::to_chars_result res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view text) {
  double v = 0.0;
  const std::from_chars_result res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size())
    throw std::invalid_argument("parse_double: bad number '" + std::string(text) + "'");
  return v;
}

/// Writes `iteration,<label>,...` rows, one per iteration, full round-trip
/// precision. Rerunning the same traces yields a byte-identical file.
inline void emit_mse_csv(std::span<const MseTrace> traces, const std::filesystem::path& path) {
  if (traces.empty()) throw std::invalid_argument("emit_mse_csv: no traces");
  const std::size_t n = traces.front().values.size();
  for (const MseTrace& t : traces) {
    if (t.values.size() != n) throw std::invalid_argument("emit_mse_csv: traces must have equal length");
    if (t.label.empty() || t.label.find_first_of(",\n") != std::string::npos)
      throw std::invalid_argument("emit_mse_csv: bad label '" + t.label + "'");
  }
  std::ofstream out(path);
  if (!out) throw io_error("cannot open for writing: " + path.string());
  out << "iteration";
  for (const MseTrace& t : traces) out << ',' << t.label;
  out << '\n';
  for (std::size_t k = 0; k < n; ++k) {
    out << k;
    for (const MseTrace& t : traces) out << ',' << format_double(t.values[k]);
    out << '\n';
  }
  out.flush();
  if (!out) throw io_error("write failed: " + path.string());
}

/// Reads a file produced by emit_mse_csv back into traces (n_runs_used is not
/// stored in the file and is left at 0).
inline std::vector<MseTrace> read_mse_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open for reading: " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw io_error("empty csv: " + path.string());

  std::vector<MseTrace> traces;
  std::size_t start = line.find(',');
  while (start != std::string::npos) {
    const std::size_t end = line.find(',', start + 1);
    MseTrace t;
    t.label = line.substr(start + 1, end == std::string::npos ? end : end - start - 1);
    traces.push_back(std::move(t));
    start = end;
  }
  if (traces.empty()) throw io_error("no trace columns in: " + path.string());

  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::size_t col = 0;
    std::size_t from = line.find(',');
    while (from != std::string::npos) {
      const std::size_t to = line.find(',', from + 1);
      const std::string_view cell =
          std::string_view(line).substr(from + 1, to == std::string::npos ? to : to - from - 1);
      if (col >= traces.size()) throw io_error("row wider than header in: " + path.string());
      traces[col].values.push_back(parse_double(cell));
      ++col;
      from = to;
    }
    if (col != traces.size()) throw io_error("row narrower than header in: " + path.string());
  }
  return traces;
}

/// Tabulates the three attractor curves over a uniform grid of w in [-1, 1]
/// (the reweighted-l1 curve is evaluated at w_prev = w_curr = w).
inline void emit_penalty_csv(double epsilon, double delta, std::size_t grid_size,
                             const std::filesystem::path& path) {
  if (grid_size < 2) throw std::invalid_argument("emit_penalty_csv: grid size must be >= 2");
  if (!(epsilon > 0.0)) throw std::invalid_argument("emit_penalty_csv: epsilon must be > 0");
  if (!(delta > 0.0)) throw std::invalid_argument("emit_penalty_csv: delta must be > 0");
  std::vector<double> grid(grid_size);
  for (std::size_t j = 0; j < grid_size; ++j)
    grid[j] = -1.0 + 2.0 * static_cast<double>(j) / static_cast<double>(grid_size - 1);
  const std::vector<double> za = penalty_za(grid);
  const std::vector<double> rza = penalty_rza(grid, epsilon);
  const std::vector<double> rl1 = penalty_rl1(grid, grid, delta);

  std::ofstream out(path);
  if (!out) throw io_error("cannot open for writing: " + path.string());
  out << "w,zeta_za,zeta_rza,zeta_rl1\n";
  for (std::size_t j = 0; j < grid_size; ++j)
    out << format_double(grid[j]) << ',' << format_double(za[j]) << ',' << format_double(rza[j])
        << ',' << format_double(rl1[j]) << '\n';
  out.flush();
  if (!out) throw io_error("write failed: " + path.string());
}

inline std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Everything needed to regenerate a CLI invocation's outputs, plus the
/// observed diverged-run counts.
struct RunManifest {
  std::string command;  // run | sweep | penalty-curve
  std::string created_utc;
  ExperimentSpec spec;                                  // run and sweep
  std::string sweep_parameter;                          // sweep only
  std::vector<double> sweep_values;                     // sweep only
  double penalty_epsilon{0.0};                          // penalty-curve only
  double penalty_delta{0.0};                            // penalty-curve only
  std::size_t penalty_grid{0};                          // penalty-curve only
  std::vector<std::vector<std::size_t>> diverged_runs;  // per cell, per algorithm
};

inline nlohmann::json to_json(const EstimatorConfig& cfg) {
  return nlohmann::json{{"kind", std::string(to_string(cfg.kind))}, {"mu", cfg.mu},
                        {"phi", cfg.phi},                           {"lambda", cfg.lambda},
                        {"epsilon", cfg.epsilon},                   {"delta", cfg.delta}};
}

inline nlohmann::json to_json(const ExperimentSpec& spec) {
  nlohmann::json algorithms = nlohmann::json::array();
  for (const AlgorithmSpec& a : spec.algorithms) {
    nlohmann::json j = to_json(a.config);
    j["label"] = a.label;
    algorithms.push_back(std::move(j));
  }
  return nlohmann::json{
      {"channel",
       {{"n_taps", spec.channel.n_taps},
        {"n_nonzero", spec.channel.n_nonzero},
        {"tap_variance", spec.channel.tap_variance}}},
      {"noise", {{"sigma_n", spec.noise.sigma_n}, {"snr_db", spec.noise.snr_db}, {"es", spec.noise.es}}},
      {"algorithms", std::move(algorithms)},
      {"n_iterations", spec.n_iterations},
      {"n_runs", spec.n_runs},
      {"base_seed", spec.base_seed}};
}

namespace detail {

inline void write_json_file(const nlohmann::json& j, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot open for writing: " + path.string());
  out << j.dump(2) << '\n';
  out.flush();
  if (!out) throw io_error("write failed: " + path.string());
}

}  // namespace detail

inline void emit_manifest_json(const RunManifest& manifest, const std::filesystem::path& path) {
  nlohmann::json j{{"tool", "lmsf-sim"},
                   {"version", std::string(k_version)},
                   {"created_utc", manifest.created_utc},
                   {"command", manifest.command}};
  if (manifest.command == "penalty-curve") {
    j["penalty"] = {{"epsilon", manifest.penalty_epsilon},
                    {"delta", manifest.penalty_delta},
                    {"grid", manifest.penalty_grid}};
  } else {
    j["spec"] = to_json(manifest.spec);
    j["base_seed"] = manifest.spec.base_seed;
    if (manifest.command == "sweep")
      j["sweep"] = {{"parameter", manifest.sweep_parameter}, {"values", manifest.sweep_values}};
    nlohmann::json diverged = nlohmann::json::array();
    for (const auto& cell : manifest.diverged_runs) diverged.push_back(cell);
    j["diverged_runs"] = std::move(diverged);
  }
  detail::write_json_file(j, path);
}

/// Machine-readable summary: per cell and per algorithm the steady-state MSE
/// (when the trace is long enough to define one), run accounting, the
/// zero-support shrinkage level, and the resulting steady-state ordering.
/// Contains no timestamp, so regenerating it from the same spec is
/// byte-identical.
inline void emit_summary_json(const RunManifest& manifest, std::span<const ExperimentResult> cells,
                              const std::filesystem::path& path) {
  nlohmann::json cells_json = nlohmann::json::array();
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const ExperimentResult& cell = cells[c];
    nlohmann::json entry;
    if (manifest.command == "sweep") {
      entry["parameter"] = manifest.sweep_parameter;
      entry["value"] = manifest.sweep_values[c];
    } else {
      entry["parameter"] = nullptr;
      entry["value"] = nullptr;
    }
    nlohmann::json algos = nlohmann::json::array();
    std::vector<std::pair<double, std::string>> order;
    bool have_all_ss = true;
    for (std::size_t a = 0; a < cell.traces.size(); ++a) {
      const MseTrace& trace = cell.traces[a];
      nlohmann::json aj{{"algorithm", trace.label},
                        {"n_runs_used", trace.n_runs_used},
                        {"diverged_runs", cell.diverged_runs[a]},
                        {"zero_support_mean_abs", cell.zero_support_mean_abs[a]}};
      if (trace.values.size() >= 10) {
        const double ss = steady_state_mse(trace);
        aj["steady_state_mse"] = ss;
        order.emplace_back(ss, trace.label);
      } else {
        aj["steady_state_mse"] = nullptr;
        have_all_ss = false;
      }
      algos.push_back(std::move(aj));
    }
    entry["algorithms"] = std::move(algos);
    if (have_all_ss) {
      std::stable_sort(order.begin(), order.end(),
                       [](const auto& lhs, const auto& rhs) { return lhs.first < rhs.first; });
      nlohmann::json ranking = nlohmann::json::array();
      for (const auto& [ss, label] : order) ranking.push_back(label);
      entry["steady_state_ordering"] = std::move(ranking);
    } else {
      entry["steady_state_ordering"] = nullptr;
    }
    cells_json.push_back(std::move(entry));
  }

  nlohmann::json j{{"command", manifest.command}, {"spec", to_json(manifest.spec)}};
  if (manifest.command == "sweep")
    j["sweep"] = {{"parameter", manifest.sweep_parameter}, {"values", manifest.sweep_values}};
  j["cells"] = std::move(cells_json);
  detail::write_json_file(j, path);
}

}  // namespace lmsf
