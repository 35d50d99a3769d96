#include "plc/diffusion.hpp"

#include <algorithm>
#include <cmath>

#include "plc/error.hpp"

namespace plc {

void BassParams::validate() const {
  if (!(innovation > 0.0) || !std::isfinite(innovation)) throw InvalidParameterError("Bass innovation rate A must be positive");
  if (!(imitation >= 0.0) || !std::isfinite(imitation)) throw InvalidParameterError("Bass imitation rate B must be non-negative");
  if (!(initial_pool > 0.0) || initial_pool > 1.0) throw InvalidParameterError("Bass pool n_B0 must lie in (0, 1]");
}

void PriceTrajectory::validate() const {
  if (!(initial_offset >= 0.0) || !std::isfinite(initial_offset)) throw InvalidParameterError("initial price offset must be non-negative");
  if (!(floor >= 0.0) || !std::isfinite(floor)) throw InvalidParameterError("price floor must be non-negative");
  if (!(decline_rate >= 0.0) || !std::isfinite(decline_rate)) throw InvalidParameterError("price decline rate must be non-negative");
}

void GompertzParams::validate() const {
  if (!(saturation >= 0.0) || saturation > 1.0) throw InvalidParameterError("Gompertz saturation n_G0 must lie in [0, 1]");
  if (!(shape >= 0.0) || !std::isfinite(shape)) throw InvalidParameterError("Gompertz shape k must be non-negative");
  if (!(decline_rate >= 0.0) || !std::isfinite(decline_rate)) throw InvalidParameterError("Gompertz decline rate a must be non-negative");
  if (!(delay >= 0.0) || !std::isfinite(delay)) throw InvalidParameterError("Gompertz delay must be non-negative");
}

void check_pool_sum(const BassParams& bass, const GompertzParams& gompertz, Normalization norm) {
  const double sum = bass.initial_pool + gompertz.saturation;
  if (norm == Normalization::market_potential) {
    if (std::abs(sum - 1.0) > 1e-9) throw InvalidParameterError("n_B0 + n_G0 must equal 1 under market-potential normalization");
  } else if (!(sum > 0.0) || sum > 1.0 + 1e-12) {
    throw InvalidParameterError("n_B0 + n_G0 must lie in (0, 1] under household normalization");
  }
}

double bass_cumulative(double t, const BassParams& p) {
  p.validate();
  if (t < 0.0) throw DomainError("Bass curves are defined for t >= 0");
  const double s = p.innovation + p.imitation;
  const double e = std::exp(-s * t);
  return p.initial_pool * (-std::expm1(-s * t)) / (1.0 + (p.imitation / p.innovation) * e);
}

double bass_rate(double t, const BassParams& p) {
  p.validate();
  if (t < 0.0) throw DomainError("Bass curves are defined for t >= 0");
  const double s = p.innovation + p.imitation;
  const double e = std::exp(-s * t);
  const double den = p.innovation + p.imitation * e;
  return p.initial_pool * p.innovation * s * s * e / (den * den);
}

double bass_peak_time(const BassParams& p) {
  p.validate();
  if (p.imitation <= p.innovation) return 0.0;
  return std::log(p.imitation / p.innovation) / (p.innovation + p.imitation);
}

double mean_price(double t, const PriceTrajectory& traj) {
  traj.validate();
  return traj.initial_offset * std::exp(-traj.decline_rate * t) + traj.floor;
}

SalesSeries price_function(const SalesSeries& prices, double pm_over_p0) {
  if (prices.empty()) throw EmptyInputError("price series is empty");
  if (!(pm_over_p0 >= 0.0) || !std::isfinite(pm_over_p0)) throw InvalidParameterError("p_m/p0 must be non-negative");
  const double p0 = prices.values.front();
  if (!(p0 > 0.0)) throw InvalidInputError("prices must be positive");
  const double pm = pm_over_p0 * p0;
  SalesSeries out{prices.t0, prices.dt, {}};
  out.values.reserve(prices.size());
  for (std::size_t i = 0; i < prices.size(); ++i) {
    const double p = prices.values[i];
    if (!(p > 0.0)) throw InvalidInputError("prices must be positive");
    if (p <= pm) {
      throw DegenerateSeriesError("price at t=" + std::to_string(prices.time(i)) + " does not exceed p_m");
    }
    out.values.push_back((p - pm) / p0);
  }
  return out;
}

double gompertz_cumulative(double t, const GompertzParams& g) {
  g.validate();
  return g.saturation * std::exp(-g.shape * std::exp(-2.0 * g.decline_rate * t));
}

double gompertz_rate(double t, const GompertzParams& g) {
  g.validate();
  const double e = std::exp(-2.0 * g.decline_rate * t);
  return 2.0 * g.decline_rate * g.shape * g.saturation * std::exp(-g.shape * e) * e;
}

GompertzParams gompertz_from_price(const MarketVolumeParams& mv, const PriceTrajectory& traj) {
  mv.validate();
  traj.validate();
  const double ratio = traj.initial_offset / mv.width;
  return GompertzParams{mv.lower_fraction(), 0.5 * ratio * ratio, traj.decline_rate, 0.0};
}

double gompertz_consistency(const GompertzParams& g, const MarketVolumeParams& mv, const PriceTrajectory& traj,
                            double horizon, int n) {
  g.validate();
  mv.validate();
  traj.validate();
  if (n < 2 || !(horizon > 0.0)) throw InvalidParameterError("consistency grid needs n >= 2 and a positive horizon");
  const double n0 = gompertz_cumulative(0.0, g);
  const double v0 = volume_density(mean_price(0.0, traj), mv);
  double worst = 0.0;
  for (int i = 0; i < n; ++i) {
    const double t = horizon * i / (n - 1);
    const double lhs = gompertz_cumulative(t, g) - n0;
    const double rhs = volume_density(mean_price(t, traj), mv) - v0;
    worst = std::max(worst, std::abs(lhs - rhs));
  }
  return worst;
}

}  // namespace plc
