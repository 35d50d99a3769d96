#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace plc {

enum class IncrementKind { normal, uniform };

struct GibratConfig {
  std::size_t n_units = 1;
  std::size_t horizon = 0;  // steps T
  double drift = 0.0;       // u, mean of r per step
  double volatility = 0.0;  // omega, standard deviation of r per step
  std::uint64_t seed = 0;
  double initial_size = 1.0;  // y0
  IncrementKind increment = IncrementKind::normal;

  void validate() const;
};

struct GibratSample {
  std::vector<double> sizes;  // indexed by unit id
  // Draws with 1 + r <= 0 that were rejected and redrawn.
  std::size_t resampled = 0;
};

// y <- y (1 + r) for `horizon` steps on every unit. Unit i draws from its
// own generator seeded by (seed, i), so the result does not depend on the
// number of worker threads.
GibratSample gibrat_simulate(const GibratConfig& cfg, unsigned threads = 0);

// Density of y after t steps: lognormal with location ln y0 + u t and
// log-variance omega^2 t.
double lognormal_pdf(double y, double t, const GibratConfig& cfg);

struct NormalityReport {
  std::size_t n = 0;
  double mean_log = 0.0;
  double variance_log = 0.0;
  double skewness = 0.0;
  double excess_kurtosis = 0.0;
  double ks_distance = 0.0;
  double ks_critical_95 = 0.0;  // 1.36 / sqrt(n)
  bool degenerate = false;      // zero variance of ln y

  bool passes_ks() const { return !degenerate && ks_distance < ks_critical_95; }
};

// Moments of ln y and the Kolmogorov-Smirnov distance of ln y against the
// normal with the sample mean and variance. Needs at least 1000 positive sizes.
NormalityReport normality_test(const std::vector<double>& sizes);

}  // namespace plc
