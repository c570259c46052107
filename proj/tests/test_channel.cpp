#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "lmsf/channel.hpp"

using namespace lmsf;
using Catch::Approx;

namespace {

std::vector<double> equal_magnitude_channel(std::size_t n, std::size_t k, double value = 1.0) {
  std::vector<double> w(n, 0.0);
  for (std::size_t i = 0; i < k; ++i) w[i] = value;
  return w;
}

}  // namespace

TEST_CASE("sparseness hits the boundary values exactly", "[channel]") {
  for (const std::size_t n : {std::size_t{2}, std::size_t{5}, std::size_t{10}, std::size_t{128}}) {
    std::vector<double> spike(n, 0.0);
    spike[0] = 1.0;
    CHECK(sparseness(spike) == 1.0);
    const std::vector<double> uniform(n, 1.0);
    CHECK(sparseness(uniform) == 0.0);
  }
}

TEST_CASE("sparseness matches the reference table for 5 equal taps", "[channel]") {
  // 5 equal-magnitude nonzero taps at N = 10 / 50; closed form gives
  // N/(N - sqrt(N)) * (1 - sqrt(K/N))
  CHECK(sparseness(equal_magnitude_channel(10, 5)) == Approx(0.4283).margin(5e-5));
  CHECK(sparseness(equal_magnitude_channel(50, 5)) == Approx(0.7964).margin(5e-5));
  // N = 100 value from direct evaluation of the formula
  CHECK(sparseness(equal_magnitude_channel(100, 5)) == Approx(0.8627).margin(5e-5));
}

TEST_CASE("sparseness rejects degenerate inputs", "[channel]") {
  CHECK_THROWS_AS(sparseness(std::vector<double>{0.0, 0.0, 0.0}), std::domain_error);
  CHECK_THROWS_AS(sparseness(std::vector<double>{1.0}), std::invalid_argument);
  CHECK_THROWS_AS(sparseness(std::vector<double>{}), std::invalid_argument);
  const std::vector<double> bad{1.0, std::numeric_limits<double>::infinity()};
  CHECK_THROWS_AS(sparseness(bad), std::invalid_argument);
}

TEST_CASE("sparseness is scale and permutation invariant", "[channel]") {
  RandomStream rng(991);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> w(16);
    for (double& t : w) t = rng.gaussian();
    const double base = sparseness(w);

    for (const double c : {3.0, -3.0, 1e-6, 1e6}) {
      std::vector<double> scaled = w;
      for (double& t : scaled) t *= c;
      CHECK(sparseness(scaled) == Approx(base).margin(1e-12));
    }

    std::vector<double> shuffled = w;
    for (std::size_t i = shuffled.size() - 1; i > 0; --i)
      std::swap(shuffled[i], shuffled[rng.bounded(i + 1)]);
    CHECK(sparseness(shuffled) == Approx(base).margin(1e-12));
  }
}

TEST_CASE("sparseness of a fixed support grows with channel length", "[channel]") {
  const double s10 = sparseness(equal_magnitude_channel(10, 5));
  const double s50 = sparseness(equal_magnitude_channel(50, 5));
  const double s100 = sparseness(equal_magnitude_channel(100, 5));
  CHECK(s10 < s50);
  CHECK(s50 < s100);
}

TEST_CASE("generate_channel places exactly K nonzero taps", "[channel]") {
  const SparseChannelSpec spec = SparseChannelSpec::unit_energy(128, 4);
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    RandomStream rng(seed);
    const std::vector<double> w = generate_channel(spec, rng);
    REQUIRE(w.size() == 128);
    const auto zeros = static_cast<std::size_t>(std::count(w.begin(), w.end(), 0.0));
    CHECK(zeros == 124);
  }
}

TEST_CASE("generate_channel with K = N leaves no forced zeros", "[channel]") {
  RandomStream rng(7);
  const std::vector<double> w = generate_channel(SparseChannelSpec::unit_energy(8, 8), rng);
  CHECK(std::count(w.begin(), w.end(), 0.0) == 0);
}

TEST_CASE("generate_channel rejects K > N", "[channel]") {
  RandomStream rng(1);
  CHECK_THROWS_AS(generate_channel(SparseChannelSpec{4, 5, 0.2}, rng), std::invalid_argument);
  CHECK_THROWS_AS(generate_channel(SparseChannelSpec{4, 2, 0.0}, rng), std::invalid_argument);
}

TEST_CASE("generated channels have unit energy in expectation", "[channel]") {
  // Monte-Carlo check over the generator itself; 1e4 realizations concentrate
  // the mean of ||w||^2 well inside +-0.05 of 1
  const SparseChannelSpec spec = SparseChannelSpec::unit_energy(128, 4);
  RandomStream rng(2024);
  double acc = 0.0;
  const int realizations = 10000;
  for (int i = 0; i < realizations; ++i) {
    const std::vector<double> w = generate_channel(spec, rng);
    acc += dot(w, w);
  }
  CHECK(acc / realizations == Approx(1.0).margin(0.05));
}

TEST_CASE("training symbols are unit-power equiprobable signs", "[channel]") {
  RandomStream rng(5);
  double sum = 0.0;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) {
    const double s = training_symbol(rng);
    REQUIRE((s == 1.0 || s == -1.0));
    REQUIRE(s * s == 1.0);
    sum += s;
  }
  CHECK(sum / draws == Approx(0.0).margin(0.02));
}

TEST_CASE("observe reduces to the dot product without noise", "[channel]") {
  RandomStream rng(11);

  RegressorWindow x(2);
  x.push(7.0);
  x.push(3.0);  // window is now [3, 7]
  const std::vector<double> selector{1.0, 0.0};
  CHECK(observe(selector, x, NoiseSpec::noiseless(), rng) == 3.0);

  const std::vector<double> zero_channel(2, 0.0);
  CHECK(observe(zero_channel, x, NoiseSpec::noiseless(), rng) == 0.0);

  for (int trial = 0; trial < 30; ++trial) {
    std::vector<double> w(9);
    for (double& t : w) t = rng.gaussian();
    RegressorWindow window(9);
    for (int k = 0; k < 9; ++k) window.push(training_symbol(rng));
    const double expected = dot(w, window.samples());
    CHECK(observe(w, window, NoiseSpec::noiseless(), rng) == Approx(expected).margin(1e-12));
  }
}

TEST_CASE("observe rejects mismatched lengths", "[channel]") {
  RandomStream rng(3);
  RegressorWindow x(3);
  CHECK_THROWS_AS(observe(std::vector<double>{1.0, 2.0}, x, NoiseSpec::noiseless(), rng),
                  std::invalid_argument);
}

TEST_CASE("noise spec derives sigma from the SNR definition", "[channel]") {
  const NoiseSpec noise = NoiseSpec::from_snr_db(10.0, 1.0);
  CHECK(noise.sigma_n * noise.sigma_n == Approx(0.1).margin(1e-12));
  CHECK(noise.es == 1.0);
  // round-trip: 10 log10(es / sigma^2) recovers the requested SNR
  CHECK(10.0 * std::log10(noise.es / (noise.sigma_n * noise.sigma_n)) == Approx(10.0).margin(1e-9));
  CHECK(NoiseSpec::noiseless().sigma_n == 0.0);
}

TEST_CASE("regressor window keeps newest-first order with zero padding", "[channel]") {
  RegressorWindow x(4);
  const std::span<const double> s = x.samples();
  CHECK(std::all_of(s.begin(), s.end(), [](double v) { return v == 0.0; }));
  x.push(1.0);
  x.push(2.0);
  CHECK(s[0] == 2.0);
  CHECK(s[1] == 1.0);
  CHECK(s[2] == 0.0);
  CHECK(s[3] == 0.0);
}
