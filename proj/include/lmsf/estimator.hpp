#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lmsf/channel.hpp"

namespace lmsf {

enum class EstimatorKind { LMSF, ZA, RZA, RL1 };

inline std::string_view to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::LMSF: return "lmsf";
    case EstimatorKind::ZA: return "za";
    case EstimatorKind::RZA: return "rza";
    case EstimatorKind::RL1: return "rl1";
  }
  return "?";
}

inline std::optional<EstimatorKind> kind_from_string(std::string_view name) {
  if (name == "lmsf") return EstimatorKind::LMSF;
  if (name == "za") return EstimatorKind::ZA;
  if (name == "rza") return EstimatorKind::RZA;
  if (name == "rl1") return EstimatorKind::RL1;
  return std::nullopt;
}

/// Scalars of one estimator. `lambda` is the regularization weight of the
/// configured kind; lambda = 0 turns every kind into plain LMS/F.
struct EstimatorConfig {
  EstimatorKind kind{EstimatorKind::LMSF};
  double mu{0.005};      // gradient step size
  double phi{0.8};       // LMS/F threshold
  double lambda{0.0};    // sparsity regularization weight
  double epsilon{20.0};  // RZA reweight factor
  double delta{0.05};    // RL1 reweight offset

  void validate() const {
    if (!(mu > 0.0)) throw std::invalid_argument("estimator config: mu must be > 0");
    if (!(phi > 0.0)) throw std::invalid_argument("estimator config: phi must be > 0");
    if (!(lambda >= 0.0)) throw std::invalid_argument("estimator config: lambda must be >= 0");
    if (kind == EstimatorKind::RZA && !(epsilon > 0.0))
      throw std::invalid_argument("estimator config: epsilon must be > 0");
    if (kind == EstimatorKind::RL1 && !(delta > 0.0))
      throw std::invalid_argument("estimator config: delta must be > 0");
  }
};

/// Current estimate w(k), previous estimate w(k-1) (the RL1 reweight source)
/// and the iteration count. Fresh states start at zero.
struct EstimatorState {
  std::vector<double> w_curr;
  std::vector<double> w_prev;
  std::uint64_t iteration{0};

  explicit EstimatorState(std::size_t n_taps) : w_curr(n_taps, 0.0), w_prev(n_taps, 0.0) {}
};

/// Thrown when an update produces a non-finite tap. Carries the iteration at
/// which the estimate blew up; the state is unspecified afterwards.
class divergence_error : public std::runtime_error {
 public:
  explicit divergence_error(std::uint64_t iteration)
      : std::runtime_error("estimate diverged at iteration " + std::to_string(iteration)),
        iteration_(iteration) {}

  std::uint64_t iteration() const noexcept { return iteration_; }

 private:
  std::uint64_t iteration_;
};

/// sgn with sgn(0) = 0.
inline double sign_of(double v) { return static_cast<double>((v > 0.0) - (v < 0.0)); }

/// A priori estimation error e(k) = d(k) - w(k)' x(k).
inline double innovation_error(const EstimatorState& state, const RegressorWindow& x, double d) {
  return d - dot(state.w_curr, x.samples());
}

/// LMS/F gain read as a variable step size: mu e^2 / (e^2 + phi).
inline double lmsf_gain(double e, double mu, double phi) {
  return mu * e * e / (e * e + phi);
}

/// Uniform zero attractor: elementwise sgn(w_i).
inline std::vector<double> penalty_za(std::span<const double> w) {
  std::vector<double> out(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) out[i] = sign_of(w[i]);
  return out;
}

/// Reweighted zero attractor: sgn(w_i) / (1 + epsilon |w_i|).
inline std::vector<double> penalty_rza(std::span<const double> w, double epsilon) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("penalty_rza: epsilon must be > 0");
  std::vector<double> out(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) out[i] = sign_of(w[i]) / (1.0 + epsilon * std::abs(w[i]));
  return out;
}

/// Reweighted-l1 attractor: sgn(w_curr_i) / (delta + |w_prev_i|). The sign
/// comes from the current estimate, the weight from the previous one.
inline std::vector<double> penalty_rl1(std::span<const double> w_prev, std::span<const double> w_curr,
                                       double delta) {
  if (!(delta > 0.0)) throw std::invalid_argument("penalty_rl1: delta must be > 0");
  if (w_prev.size() != w_curr.size()) throw std::invalid_argument("penalty_rl1: length mismatch");
  std::vector<double> out(w_curr.size());
  for (std::size_t i = 0; i < w_curr.size(); ++i)
    out[i] = sign_of(w_curr[i]) / (delta + std::abs(w_prev[i]));
  return out;
}

namespace detail {

/// Step-size-scaled shrink intensity rho of each kind.
inline double shrink_intensity(const EstimatorConfig& cfg) {
  switch (cfg.kind) {
    case EstimatorKind::LMSF: return 0.0;
    case EstimatorKind::ZA: return cfg.mu * cfg.lambda;
    case EstimatorKind::RZA: return cfg.mu * cfg.lambda / cfg.epsilon;
    case EstimatorKind::RL1: return cfg.mu * cfg.lambda;
  }
  return 0.0;
}

}  // namespace detail

/// One in-place update from the sample (x, d):
///   w(k+1) = w(k) + mu e^3(k) x(k) / (e^2(k) + phi) - rho * attractor(w(k), w(k-1))
/// With lambda = 0 the shrink term is skipped entirely, so every kind reduces
/// to plain LMS/F bit for bit. Throws divergence_error if any tap goes
/// non-finite; the state is then unspecified and the trial should be dropped.
inline void advance(EstimatorState& state, const RegressorWindow& x, double d, const EstimatorConfig& cfg) {
  cfg.validate();
  const std::size_t n = state.w_curr.size();
  if (x.size() != n || state.w_prev.size() != n)
    throw std::invalid_argument("advance: dimension mismatch");
  const double e = innovation_error(state, x, d);
  const double error_gain = cfg.mu * e * e * e / (e * e + cfg.phi);
  const double rho = detail::shrink_intensity(cfg);
  const std::span<const double> xs = x.samples();

  // w(k+1) is written into the w_prev buffer, then swapped in
  std::vector<double>& next = state.w_prev;
  const std::vector<double>& curr = state.w_curr;
  bool finite = true;
  for (std::size_t i = 0; i < n; ++i) {
    const double prev_i = next[i];  // w(k-1); read before overwriting
    double v = curr[i] + error_gain * xs[i];
    if (rho != 0.0) {
      switch (cfg.kind) {
        case EstimatorKind::LMSF: break;
        case EstimatorKind::ZA: v -= rho * sign_of(curr[i]); break;
        case EstimatorKind::RZA:
          v -= rho * sign_of(curr[i]) / (1.0 + cfg.epsilon * std::abs(curr[i]));
          break;
        case EstimatorKind::RL1:
          v -= rho * sign_of(curr[i]) / (cfg.delta + std::abs(prev_i));
          break;
      }
    }
    finite = finite && std::isfinite(v);
    next[i] = v;
  }
  if (!finite) throw divergence_error(state.iteration);
  std::swap(state.w_curr, state.w_prev);
  ++state.iteration;
}

/// Pure step: copies the state and advances the copy.
inline EstimatorState step(const EstimatorState& state, const RegressorWindow& x, double d,
                           const EstimatorConfig& cfg) {
  EstimatorState out = state;
  advance(out, x, d, cfg);
  return out;
}

}  // namespace lmsf
