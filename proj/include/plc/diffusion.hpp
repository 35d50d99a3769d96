#pragma once

#include "plc/income_market.hpp"
#include "plc/series.hpp"

namespace plc {

// Bass diffusion: innovation rate A, imitation rate B, adopter pool n_B0.
struct BassParams {
  double innovation = 0.0;   // A, 1/year
  double imitation = 0.0;    // B, 1/year
  double initial_pool = 1.0; // n_B0

  void validate() const;
};

// <mu(t)> = mu0 exp(-a t) + mu_m.
struct PriceTrajectory {
  double initial_offset = 0.0;  // mu0
  double floor = 0.0;           // mu_m
  double decline_rate = 0.0;    // a, 1/year

  void validate() const;
};

// n_G(t) = n_G0 exp(-k exp(-2 a t)); `delay` is applied by the PLC assembler.
struct GompertzParams {
  double saturation = 0.0;    // n_G0
  double shape = 1.0;         // k
  double decline_rate = 0.0;  // a, 1/year
  double delay = 0.0;         // dt0, years

  void validate() const;
};

// Market-potential normalization requires n_B0 + n_G0 = 1; household
// normalization only needs the sum to stay in (0, 1].
enum class Normalization { market_potential, households };
void check_pool_sum(const BassParams& bass, const GompertzParams& gompertz, Normalization norm);

double bass_cumulative(double t, const BassParams& p);
double bass_rate(double t, const BassParams& p);
// Peak time of bass_rate, ln(B/A)/(A+B); zero when B <= A.
double bass_peak_time(const BassParams& p);

double mean_price(double t, const PriceTrajectory& traj);

// mu'(t) = (p(t) - p_m)/p0 with p0 the first sample and p_m = ratio * p0.
SalesSeries price_function(const SalesSeries& prices, double pm_over_p0);

double gompertz_cumulative(double t, const GompertzParams& g);
double gompertz_rate(double t, const GompertzParams& g);

// Gompertz parameters implied by a price trajectory sweeping the market
// volume: n_G0 = m_L, k = mu0^2/(2 Theta^2), same decline rate.
GompertzParams gompertz_from_price(const MarketVolumeParams& mv, const PriceTrajectory& traj);

// max_t |(n_G(t) - n_G(0)) - (v(<mu(t)>) - v(<mu(0)>))| on an n-point grid
// over [0, horizon]. Zero up to rounding when the parameters are linked as in
// gompertz_from_price.
double gompertz_consistency(const GompertzParams& g, const MarketVolumeParams& mv, const PriceTrajectory& traj,
                            double horizon = 50.0, int n = 5001);

}  // namespace plc
