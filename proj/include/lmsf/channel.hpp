#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "lmsf/rng.hpp"

namespace lmsf {

inline double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: length mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

/// Hoyer sparseness of a tap vector:
///   N / (N - sqrt(N)) * (1 - ||w||_1 / (sqrt(N) ||w||_2))
/// 0 for uniform-magnitude vectors, 1 for a single nonzero tap. The quotient
/// is arranged so both boundary cases land on 0.0 and 1.0 by arithmetic
/// alone, with no clipping. Undefined for the zero vector and for N < 2.
inline double sparseness(std::span<const double> taps) {
  const std::size_t n = taps.size();
  if (n < 2) throw std::invalid_argument("sparseness: need at least 2 taps");
  double l1 = 0.0;
  double sumsq = 0.0;
  for (const double t : taps) {
    l1 += std::abs(t);
    sumsq += t * t;
  }
  if (l1 == 0.0) throw std::domain_error("sparseness: undefined for the zero vector");
  if (!std::isfinite(l1) || !std::isfinite(sumsq)) throw std::invalid_argument("sparseness: non-finite tap");
  const double nd = static_cast<double>(n);
  const double root_n = std::sqrt(nd);
  const double l2 = std::sqrt(sumsq);
  return (nd * l2 - root_n * l1) / ((nd - root_n) * l2);
}

/// Sparse FIR channel description: N taps of which exactly K are nonzero,
/// each nonzero tap zero-mean Gaussian with variance tap_variance.
struct SparseChannelSpec {
  std::size_t n_taps{128};    // N
  std::size_t n_nonzero{4};   // K
  double tap_variance{0.25};  // variance of each nonzero tap

  /// K nonzero taps of variance 1/K, so the expected channel energy is 1.
  static SparseChannelSpec unit_energy(std::size_t n_taps, std::size_t n_nonzero) {
    return SparseChannelSpec{n_taps, n_nonzero, 1.0 / static_cast<double>(n_nonzero)};
  }

  void validate() const {
    if (n_taps == 0) throw std::invalid_argument("channel spec: N must be >= 1");
    if (n_nonzero == 0) throw std::invalid_argument("channel spec: K must be >= 1");
    if (n_nonzero > n_taps) throw std::invalid_argument("channel spec: K must not exceed N");
    if (!(tap_variance > 0.0)) throw std::invalid_argument("channel spec: tap_variance must be > 0");
  }
};

/// Additive observation noise. sigma_n is canonical; snr_db/es record how it
/// was derived via snr_db = 10 log10(es / sigma_n^2).
struct NoiseSpec {
  double sigma_n{0.0};
  double snr_db{std::numeric_limits<double>::infinity()};
  double es{1.0};

  static NoiseSpec from_snr_db(double snr_db, double es = 1.0) {
    if (!(es > 0.0)) throw std::invalid_argument("noise spec: es must be > 0");
    return NoiseSpec{std::sqrt(es / std::pow(10.0, snr_db / 10.0)), snr_db, es};
  }

  static NoiseSpec noiseless(double es = 1.0) {
    return NoiseSpec{0.0, std::numeric_limits<double>::infinity(), es};
  }
};

/// Draws a channel with exactly K nonzero taps: support positions chosen
/// uniformly without replacement, values zero-mean Gaussian.
inline std::vector<double> generate_channel(const SparseChannelSpec& spec, RandomStream& rng) {
  spec.validate();
  std::vector<double> taps(spec.n_taps, 0.0);
  std::vector<std::size_t> positions(spec.n_taps);
  std::iota(positions.begin(), positions.end(), std::size_t{0});
  // partial Fisher-Yates; the first K entries become the support
  for (std::size_t j = 0; j < spec.n_nonzero; ++j) {
    const std::size_t other = j + static_cast<std::size_t>(rng.bounded(spec.n_taps - j));
    std::swap(positions[j], positions[other]);
  }
  const double sd = std::sqrt(spec.tap_variance);
  for (std::size_t j = 0; j < spec.n_nonzero; ++j) {
    double value = 0.0;
    do {
      value = sd * rng.gaussian();
    } while (value == 0.0);  // an exactly-zero draw would break the K-nonzero contract
    taps[positions[j]] = value;
  }
  return taps;
}

/// Training symbol: +1 or -1 with equal probability (unit symbol energy).
inline double training_symbol(RandomStream& rng) {
  return (rng.next_u64() >> 63) != 0 ? 1.0 : -1.0;
}

/// Sliding input window, newest sample first: [x(k), x(k-1), ..., x(k-N+1)].
/// Starts zero-filled, so early iterations see a zero-padded history.
class RegressorWindow {
 public:
  explicit RegressorWindow(std::size_t n_taps) : samples_(n_taps, 0.0) {
    if (n_taps == 0) throw std::invalid_argument("regressor window: need at least one tap");
  }

  void push(double sample) {
    std::copy_backward(samples_.begin(), samples_.end() - 1, samples_.end());
    samples_.front() = sample;
  }

  std::span<const double> samples() const { return samples_; }
  std::size_t size() const { return samples_.size(); }

 private:
  std::vector<double> samples_;
};

/// One observation d(k) = w' x(k) + z(k) with z ~ N(0, sigma_n^2). Always
/// consumes one Gaussian draw so the stream layout is independent of sigma_n.
inline double observe(std::span<const double> taps, const RegressorWindow& x, const NoiseSpec& noise,
                      RandomStream& rng) {
  if (taps.size() != x.size()) throw std::invalid_argument("observe: channel/regressor length mismatch");
  return dot(taps, x.samples()) + noise.sigma_n * rng.gaussian();
}

}  // namespace lmsf
