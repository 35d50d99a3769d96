#include "plc/repurchase.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "plc/error.hpp"

namespace plc {

void FailureDistribution::validate() const {
  if (!(mean_lifetime > 0.0) || !std::isfinite(mean_lifetime)) throw InvalidParameterError("product lifetime t_p must be positive");
  if (kind == Kind::dirac) {
    if (spread != 0.0) throw InvalidParameterError("Dirac failure distribution has zero spread");
  } else if (!(spread > 0.0) || !std::isfinite(spread)) {
    throw InvalidParameterError("Gaussian failure spread must be positive");
  }
}

double FailureDistribution::density(double t) const {
  validate();
  if (kind == Kind::dirac || t <= 0.0) return 0.0;
  const double z = (t - mean_lifetime) / spread;
  // Mass of the untruncated normal on (0, inf).
  const double mass = 0.5 * std::erfc(-mean_lifetime / (spread * std::numbers::sqrt2));
  return std::exp(-0.5 * z * z) / (spread * std::sqrt(2.0 * std::numbers::pi) * mass);
}

void RepurchaseParams::validate() const {
  if (!(replacement >= 0.0) || !std::isfinite(replacement)) throw InvalidParameterError("replacement fraction R must be non-negative");
  if (!(multiple >= 0.0) || !std::isfinite(multiple)) throw InvalidParameterError("multiple purchase rate Q must be non-negative");
  failure.validate();
}

namespace {

void require_non_negative(const SalesSeries& s, const char* what) {
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!(s.values[i] >= 0.0)) {
      throw InvalidInputError(std::string(what) + " has a negative value at t=" + std::to_string(s.time(i)));
    }
  }
}

SalesSeries convolve_dirac(const SalesSeries& first, const RepurchaseParams& rp) {
  const double shift = rp.failure.mean_lifetime / first.dt;
  SalesSeries out{first.t0, first.dt, std::vector<double>(first.size(), 0.0)};
  if (!rp.recurrent) {
    for (std::size_t i = 0; i < first.size(); ++i) out.values[i] = rp.replacement * first.at_index(static_cast<double>(i) - shift);
    return out;
  }
  // shift >= 2 samples, so the interpolation only reads finished entries.
  SalesSeries total = first;
  for (std::size_t i = 0; i < first.size(); ++i) {
    out.values[i] = rp.replacement * total.at_index(static_cast<double>(i) - shift);
    total.values[i] = first.values[i] + out.values[i];
  }
  return out;
}

SalesSeries convolve_gaussian(const SalesSeries& first, const RepurchaseParams& rp) {
  const auto& f = rp.failure;
  const double dt = first.dt;
  const std::size_t n = first.size();
  const double reach = f.mean_lifetime + 12.0 * f.spread;
  const std::size_t taps = std::min<std::size_t>(n, static_cast<std::size_t>(std::ceil(reach / dt)) + 1);
  std::vector<double> w(taps);
  for (std::size_t j = 0; j < taps; ++j) w[j] = f.density(dt * static_cast<double>(j)) * dt;

  SalesSeries out{first.t0, dt, std::vector<double>(n, 0.0)};
  std::vector<double> source = first.values;
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t j = 1; j < taps && j <= i; ++j) acc += w[j] * source[i - j];
    if (rp.recurrent) {
      // The j = 0 tap couples y_R(t) to itself; solve the scalar equation.
      out.values[i] = rp.replacement * (acc + w[0] * first.values[i]) / (1.0 - rp.replacement * w[0]);
      source[i] = first.values[i] + out.values[i];
    } else {
      out.values[i] = rp.replacement * (acc + w[0] * first.values[i]);
    }
  }
  return out;
}

}  // namespace

SalesSeries replacement_convolve(const SalesSeries& first, const RepurchaseParams& rp) {
  rp.validate();
  require_positive_dt(first.dt);
  if (first.dt > 0.5 * rp.failure.mean_lifetime) {
    throw ResolutionError("grid step " + std::to_string(first.dt) + " years undersamples lifetime " +
                          std::to_string(rp.failure.mean_lifetime) + " (need dt <= t_p/2)");
  }
  require_non_negative(first, "first-purchase series");
  if (rp.replacement == 0.0) return SalesSeries{first.t0, first.dt, std::vector<double>(first.size(), 0.0)};
  return rp.failure.kind == FailureDistribution::Kind::dirac ? convolve_dirac(first, rp) : convolve_gaussian(first, rp);
}

SalesSeries multiple_purchase(const SalesSeries& adopters, double rate) {
  if (!(rate >= 0.0) || !std::isfinite(rate)) throw InvalidParameterError("multiple purchase rate Q must be non-negative");
  double scale = 0.0;
  for (double v : adopters.values) scale = std::max(scale, std::abs(v));
  for (std::size_t i = 1; i < adopters.size(); ++i) {
    if (adopters.values[i] < adopters.values[i - 1] - 1e-12 * scale) {
      throw InvalidInputError("adopter series decreases at t=" + std::to_string(adopters.time(i)));
    }
  }
  return rate * adopters;
}

SalesSeries branch_plc(const SalesSeries& first, const SalesSeries& adopters, const RepurchaseParams& rp) {
  require_same_grid(first, adopters, "branch_plc");
  return first + replacement_convolve(first, rp) + multiple_purchase(adopters, rp.multiple);
}

SalesSeries delayed(const SalesSeries& s, double delay) {
  if (!(delay >= 0.0) || !std::isfinite(delay)) throw InvalidParameterError("delay must be non-negative");
  if (delay == 0.0) return s;
  const double shift = delay / s.dt;
  SalesSeries out{s.t0, s.dt, std::vector<double>(s.size(), 0.0)};
  for (std::size_t i = 0; i < s.size(); ++i) out.values[i] = s.at_index(static_cast<double>(i) - shift);
  return out;
}

SalesSeries total_plc(const SalesSeries& bass_branch, const SalesSeries& gompertz_branch, double delay) {
  require_same_grid(bass_branch, gompertz_branch, "total_plc");
  return bass_branch + delayed(gompertz_branch, delay);
}

}  // namespace plc
