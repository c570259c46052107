#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "lmsf/channel.hpp"
#include "lmsf/estimator.hpp"
#include "lmsf/rng.hpp"

namespace lmsf {

struct AlgorithmSpec {
  std::string label;
  EstimatorConfig config;
};

/// Complete description of one Monte-Carlo experiment. Every output is a pure
/// function of this struct, base_seed included.
struct ExperimentSpec {
  SparseChannelSpec channel{SparseChannelSpec::unit_energy(128, 4)};
  NoiseSpec noise{NoiseSpec::from_snr_db(10.0)};
  std::vector<AlgorithmSpec> algorithms;
  std::size_t n_iterations{2000};
  std::size_t n_runs{200};
  std::uint64_t base_seed{42};

  void validate() const {
    channel.validate();
    if (algorithms.empty()) throw std::invalid_argument("experiment spec: need at least one algorithm");
    for (const AlgorithmSpec& a : algorithms) a.config.validate();
    if (n_iterations == 0) throw std::invalid_argument("experiment spec: n_iterations must be >= 1");
    if (n_runs == 0) throw std::invalid_argument("experiment spec: n_runs must be >= 1");
  }
};

/// The four standard estimator setups with their benchmark regularization
/// weights.
inline std::vector<AlgorithmSpec> default_algorithms(double mu = 0.005, double phi = 0.8) {
  std::vector<AlgorithmSpec> out;
  EstimatorConfig base;
  base.mu = mu;
  base.phi = phi;

  EstimatorConfig lmsf = base;
  lmsf.kind = EstimatorKind::LMSF;
  out.push_back({"lmsf", lmsf});

  EstimatorConfig za = base;
  za.kind = EstimatorKind::ZA;
  za.lambda = 4e-5;
  out.push_back({"za", za});

  EstimatorConfig rza = base;
  rza.kind = EstimatorKind::RZA;
  rza.lambda = 4e-3;
  rza.epsilon = 20.0;
  out.push_back({"rza", rza});

  EstimatorConfig rl1 = base;
  rl1.kind = EstimatorKind::RL1;
  rl1.lambda = 4e-5;
  rl1.delta = 0.05;
  out.push_back({"rl1", rl1});

  return out;
}

inline ExperimentSpec default_experiment() {
  ExperimentSpec spec;
  spec.algorithms = default_algorithms();
  return spec;
}

/// Mean squared estimation error per iteration, averaged over the runs that
/// completed without divergence.
struct MseTrace {
  std::string label;
  std::vector<double> values;
  std::size_t n_runs_used{0};
};

/// The shared realization of one run: the channel and the (symbol,
/// observation) stream every algorithm is trained on.
struct TrialData {
  std::vector<double> channel;
  std::vector<double> symbols;
  std::vector<double> observations;
};

/// Deterministically builds one run's data from its seed. Draw order: channel
/// first, then per iteration one symbol and one noise sample.
inline TrialData make_trial_data(const SparseChannelSpec& channel, const NoiseSpec& noise,
                                 std::size_t n_iterations, std::uint64_t seed) {
  RandomStream rng(seed);
  TrialData data;
  data.channel = generate_channel(channel, rng);
  data.symbols.reserve(n_iterations);
  data.observations.reserve(n_iterations);
  RegressorWindow window(channel.n_taps);
  for (std::size_t k = 0; k < n_iterations; ++k) {
    const double symbol = training_symbol(rng);
    window.push(symbol);
    data.symbols.push_back(symbol);
    data.observations.push_back(observe(data.channel, window, noise, rng));
  }
  return data;
}

struct TrialResult {
  struct PerAlgorithm {
    std::vector<double> squared_error;  // ||w - w_hat(k)||^2; truncated at divergence
    bool diverged{false};
    std::uint64_t diverged_at{0};
    double zero_support_mean_abs{0.0};  // mean |w_hat_i| over the true zero support,
                                        // averaged over the final-10% window
  };
  std::vector<double> channel;
  std::vector<PerAlgorithm> per_algorithm;
};

/// Runs every algorithm of `spec` over the identical data realization of run
/// `run_index` and records the squared estimation error after each step.
/// A diverging estimator only flags its own slot; the other algorithms and
/// the experiment continue.
inline TrialResult run_trial(const ExperimentSpec& spec, std::size_t run_index) {
  spec.validate();
  const std::uint64_t seed = derive_run_seed(spec.base_seed, run_index);
  const TrialData data = make_trial_data(spec.channel, spec.noise, spec.n_iterations, seed);
  const std::size_t n_taps = spec.channel.n_taps;
  const std::size_t n_algos = spec.algorithms.size();
  const std::size_t window_len = std::max<std::size_t>(1, spec.n_iterations / 10);
  const std::size_t window_start = spec.n_iterations - window_len;

  std::vector<std::size_t> zero_support;
  for (std::size_t i = 0; i < n_taps; ++i)
    if (data.channel[i] == 0.0) zero_support.push_back(i);

  TrialResult result;
  result.channel = data.channel;
  result.per_algorithm.resize(n_algos);
  for (TrialResult::PerAlgorithm& pa : result.per_algorithm)
    pa.squared_error.reserve(spec.n_iterations);

  std::vector<EstimatorState> states(n_algos, EstimatorState(n_taps));
  std::vector<double> zero_abs_acc(n_algos, 0.0);
  RegressorWindow window(n_taps);

  for (std::size_t k = 0; k < spec.n_iterations; ++k) {
    window.push(data.symbols[k]);
    const double d = data.observations[k];
    for (std::size_t a = 0; a < n_algos; ++a) {
      TrialResult::PerAlgorithm& pa = result.per_algorithm[a];
      if (pa.diverged) continue;
      try {
        advance(states[a], window, d, spec.algorithms[a].config);
      } catch (const divergence_error& err) {
        pa.diverged = true;
        pa.diverged_at = err.iteration();
        continue;
      }
      double sq = 0.0;
      for (std::size_t i = 0; i < n_taps; ++i) {
        const double diff = data.channel[i] - states[a].w_curr[i];
        sq += diff * diff;
      }
      pa.squared_error.push_back(sq);
      if (k >= window_start)
        for (const std::size_t i : zero_support) zero_abs_acc[a] += std::abs(states[a].w_curr[i]);
    }
  }

  for (std::size_t a = 0; a < n_algos; ++a) {
    TrialResult::PerAlgorithm& pa = result.per_algorithm[a];
    if (!pa.diverged && !zero_support.empty())
      pa.zero_support_mean_abs =
          zero_abs_acc[a] / (static_cast<double>(window_len) * static_cast<double>(zero_support.size()));
  }
  return result;
}

/// Thrown when every run of an algorithm diverged and no trace can be formed.
class empty_trace_error : public std::runtime_error {
 public:
  explicit empty_trace_error(std::string label)
      : std::runtime_error("all runs diverged for algorithm '" + label + "'"), label_(std::move(label)) {}

  const std::string& label() const noexcept { return label_; }

 private:
  std::string label_;
};

struct ExperimentResult {
  std::vector<MseTrace> traces;                // one per algorithm, spec order
  std::vector<std::size_t> diverged_runs;      // per algorithm
  std::vector<double> zero_support_mean_abs;   // per algorithm, mean over used runs
};

/// Runs spec.n_runs independent trials and averages them. Trials are
/// distributed over `n_threads` workers (0 = all available cores), but the
/// per-run results are folded serially in run order, so the aggregate is
/// identical for every worker count.
inline ExperimentResult run_experiment(const ExperimentSpec& spec, unsigned n_threads = 0) {
  spec.validate();
  const std::size_t n_runs = spec.n_runs;
  const std::size_t n_algos = spec.algorithms.size();

  std::vector<TrialResult> trials(n_runs);
  unsigned workers = n_threads != 0 ? n_threads : std::thread::hardware_concurrency();
  if (workers == 0) workers = 1;
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, n_runs));

  if (workers <= 1) {
    for (std::size_t r = 0; r < n_runs; ++r) trials[r] = run_trial(spec, r);
  } else {
    std::atomic<std::size_t> next_run{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto body = [&] {
      try {
        for (;;) {
          const std::size_t r = next_run.fetch_add(1);
          if (r >= n_runs) return;
          trials[r] = run_trial(spec, r);
        }
      } catch (...) {
        const std::scoped_lock lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned t = 0; t < workers; ++t) pool.emplace_back(body);
    for (std::thread& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
  }

  ExperimentResult out;
  out.traces.resize(n_algos);
  out.diverged_runs.assign(n_algos, 0);
  out.zero_support_mean_abs.assign(n_algos, 0.0);
  for (std::size_t a = 0; a < n_algos; ++a) {
    std::vector<double> sums(spec.n_iterations, 0.0);
    double zero_abs_sum = 0.0;
    std::size_t used = 0;
    for (std::size_t r = 0; r < n_runs; ++r) {
      const TrialResult::PerAlgorithm& pa = trials[r].per_algorithm[a];
      if (pa.diverged) continue;
      for (std::size_t k = 0; k < spec.n_iterations; ++k) sums[k] += pa.squared_error[k];
      zero_abs_sum += pa.zero_support_mean_abs;
      ++used;
    }
    if (used == 0) throw empty_trace_error(spec.algorithms[a].label);
    MseTrace& trace = out.traces[a];
    trace.label = spec.algorithms[a].label;
    trace.n_runs_used = used;
    trace.values.resize(spec.n_iterations);
    for (std::size_t k = 0; k < spec.n_iterations; ++k)
      trace.values[k] = sums[k] / static_cast<double>(used);
    out.diverged_runs[a] = n_runs - used;
    out.zero_support_mean_abs[a] = zero_abs_sum / static_cast<double>(used);
  }
  return out;
}

struct SweepResult {
  std::string parameter;
  std::vector<double> values;
  std::vector<ExperimentResult> cells;  // one per value, same order
};

/// Reruns the experiment once per parameter value, holding everything else
/// fixed, seeds included. Supported parameters: "phi" (every algorithm's
/// threshold), "K" (nonzero tap count; tap variance is rescaled to 1/K to
/// keep unit expected channel energy) and "snr_db".
inline SweepResult sweep(const ExperimentSpec& base, std::string_view parameter,
                         std::span<const double> values, unsigned n_threads = 0) {
  if (values.empty()) throw std::invalid_argument("sweep: values must be nonempty");
  SweepResult out;
  out.parameter = std::string(parameter);
  out.values.assign(values.begin(), values.end());
  out.cells.reserve(values.size());
  for (const double v : values) {
    ExperimentSpec spec = base;
    if (parameter == "phi") {
      for (AlgorithmSpec& a : spec.algorithms) a.config.phi = v;
    } else if (parameter == "K") {
      const auto k = static_cast<std::size_t>(v);
      if (static_cast<double>(k) != v || k == 0)
        throw std::invalid_argument("sweep: K values must be positive integers");
      spec.channel.n_nonzero = k;
      spec.channel.tap_variance = 1.0 / static_cast<double>(k);
    } else if (parameter == "snr_db") {
      spec.noise = NoiseSpec::from_snr_db(v, spec.noise.es);
    } else {
      throw std::invalid_argument("sweep: unknown parameter '" + std::string(parameter) +
                                  "' (expected phi, K or snr_db)");
    }
    out.cells.push_back(run_experiment(spec, n_threads));
  }
  return out;
}

/// Mean of the final 10% of a trace (at least one value). Needs length >= 10.
inline double steady_state_mse(const MseTrace& trace) {
  const std::size_t n = trace.values.size();
  if (n < 10) throw std::invalid_argument("steady_state_mse: trace shorter than 10 samples");
  const std::size_t window = n / 10;
  double acc = 0.0;
  for (std::size_t k = n - window; k < n; ++k) acc += trace.values[k];
  return acc / static_cast<double>(window);
}

/// First iteration whose trace value is at or below `threshold`; returns the
/// trace length if the threshold is never reached.
inline std::size_t iterations_to_threshold(const MseTrace& trace, double threshold) {
  for (std::size_t k = 0; k < trace.values.size(); ++k)
    if (trace.values[k] <= threshold) return k;
  return trace.values.size();
}

}  // namespace lmsf
