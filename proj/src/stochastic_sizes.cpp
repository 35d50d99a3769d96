#include "plc/stochastic_sizes.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <thread>

#include <boost/math/distributions/normal.hpp>

#include "plc/error.hpp"

namespace plc {

void GibratConfig::validate() const {
  if (n_units < 1) throw InvalidParameterError("gibrat needs at least one unit");
  if (!(volatility >= 0.0) || !std::isfinite(volatility)) throw InvalidParameterError("volatility omega must be >= 0");
  if (!std::isfinite(drift)) throw InvalidParameterError("drift u must be finite");
  if (!(initial_size > 0.0) || !std::isfinite(initial_size)) throw InvalidParameterError("initial size y0 must be positive");
  if (increment == IncrementKind::normal || volatility == 0.0) return;
  // Uniform increments with the requested mean and std: half-width sqrt(3) omega.
  if (drift - std::sqrt(3.0) * volatility <= -1.0)
    throw InvalidParameterError("uniform increment support reaches 1 + r <= 0");
}

namespace {

struct UnitResult {
  double size;
  std::size_t resampled;
};

UnitResult run_unit(const GibratConfig& cfg, std::size_t unit) {
  std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                    static_cast<std::uint32_t>(unit), static_cast<std::uint32_t>(unit >> 32)};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> normal(cfg.drift, cfg.volatility);
  const double half = std::sqrt(3.0) * cfg.volatility;
  std::uniform_real_distribution<double> uniform(cfg.drift - half, cfg.drift + half);
  double y = cfg.initial_size;
  std::size_t rejected = 0;
  for (std::size_t s = 0; s < cfg.horizon; ++s) {
    double r = 0.0;
    if (cfg.volatility == 0.0) {
      r = cfg.drift;
      if (1.0 + r <= 0.0) throw InvalidParameterError("deterministic growth factor 1 + u must be positive");
    } else {
      do {
        r = cfg.increment == IncrementKind::normal ? normal(rng) : uniform(rng);
        if (1.0 + r > 0.0) break;
        ++rejected;
      } while (true);
    }
    y *= 1.0 + r;
  }
  return {y, rejected};
}

}  // namespace

GibratSample gibrat_simulate(const GibratConfig& cfg, unsigned threads) {
  cfg.validate();
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, cfg.n_units));

  std::vector<UnitResult> results(cfg.n_units);
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) results[i] = run_unit(cfg, i);
  };
  if (threads <= 1) {
    work(0, cfg.n_units);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (cfg.n_units + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
      const std::size_t b = t * chunk;
      const std::size_t e = std::min(cfg.n_units, b + chunk);
      if (b < e) pool.emplace_back(work, b, e);
    }
    for (auto& th : pool) th.join();
  }

  GibratSample out;
  out.sizes.reserve(cfg.n_units);
  for (const auto& r : results) {
    out.sizes.push_back(r.size);
    out.resampled += r.resampled;
  }
  return out;
}

double lognormal_pdf(double y, double t, const GibratConfig& cfg) {
  if (!(y > 0.0)) throw DomainError("lognormal density needs y > 0");
  if (!(t > 0.0)) throw InvalidParameterError("lognormal density needs t > 0");
  if (!(cfg.volatility > 0.0)) throw InvalidParameterError("lognormal density needs omega > 0");
  if (!(cfg.initial_size > 0.0)) throw InvalidParameterError("initial size y0 must be positive");
  const double s2 = cfg.volatility * cfg.volatility * t;
  const double z = std::log(y / cfg.initial_size) - cfg.drift * t;
  return std::exp(-z * z / (2.0 * s2)) / (std::sqrt(2.0 * std::numbers::pi * s2) * y);
}

NormalityReport normality_test(const std::vector<double>& sizes) {
  if (sizes.size() < 1000) throw InvalidInputError("normality test needs at least 1000 samples");
  std::vector<double> x(sizes.size());
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (!(sizes[i] > 0.0) || !std::isfinite(sizes[i])) throw InvalidInputError("sizes must be positive and finite");
    x[i] = std::log(sizes[i]);
  }
  NormalityReport rep;
  rep.n = x.size();
  const double n = static_cast<double>(rep.n);
  rep.ks_critical_95 = 1.36 / std::sqrt(n);

  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= n;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double v : x) {
    const double d = v - mean;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  rep.mean_log = mean;
  rep.variance_log = m2;
  if (!(m2 > 1e-300) || m2 <= 1e-24 * std::max(1.0, mean * mean)) {
    rep.variance_log = 0.0;
    rep.degenerate = true;
    return rep;
  }
  rep.skewness = m3 / std::pow(m2, 1.5);
  rep.excess_kurtosis = m4 / (m2 * m2) - 3.0;

  std::sort(x.begin(), x.end());
  const boost::math::normal_distribution<double> fitted(mean, std::sqrt(m2));
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double c = boost::math::cdf(fitted, x[i]);
    d = std::max({d, c - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - c});
  }
  rep.ks_distance = d;
  return rep;
}

}  // namespace plc
