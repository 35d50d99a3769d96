#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "plc/income_market.hpp"
#include "plc/series.hpp"

namespace plc {

struct BrandState {
  double price = 0.0;         // mu_i, real price
  double preference = 1.0;    // eta_i
  double reproduction = 0.0;  // gamma_i
  double stock = 0.0;         // x_i
  double sales = 0.0;         // y_i
};

// Market on the short time scale tau; the long scale is t = epsilon * tau.
struct MarketState {
  std::vector<BrandState> brands;
  double consumer_pool = 0.0;    // psi
  double repurchase_rate = 0.0;  // q
  MarketVolumeParams volume;
  double clock = 0.0;  // tau
  double epsilon = 0.02;

  void validate() const;

  double total_sales() const;
  std::vector<double> shares() const;
  // Sales-weighted mean price and variance.
  double mean_price() const;
  double price_variance() const;
  // psi0 = q / sum(eta_i x_i).
  double pool_scale() const;
  // Sales-weighted <eta gamma psi0>.
  double mean_selection_strength() const;
};

// f_i = eta_i gamma_i psi0 v(mu_i).
double fitness(const BrandState& brand, const MarketVolumeParams& mv, double psi0);
std::vector<double> fitnesses(const MarketState& state);
double mean_fitness(const MarketState& state);

// Midpoint step of dy_i/dtau = (f_i - <f>) y_i with Sigma y_i restored
// exactly. Stocks and prices are untouched. Throws StepSizeError when
// dtau * max|f_i - <f>| >= 0.1.
MarketState replicator_step(const MarketState& state, double dtau);

// Midpoint step of the supply/demand balances: dx_i/dtau = gamma_i y_i,
// dpsi/dtau = q v(<mu>) - y_t, with y_i = eta_i x_i psi v(mu_i). Halves the
// step internally if a stock or the pool would go negative.
MarketState micro_step(const MarketState& state, double dtau);

// Rare multiplicative parameter changes. Each brand jumps at Poisson rate
// `rate` per tau-unit; each jump multiplies a parameter by a mean-one
// log-normal factor exp(s Z - s^2/2) with s the per-parameter magnitude.
struct JumpSettings {
  double rate = 0.1;
  double price_magnitude = 0.01;
  double preference_magnitude = 0.01;
  double reproduction_magnitude = 0.01;

  void validate() const;
};

void apply_jumps(MarketState& state, const JumpSettings& jumps, double dtau, std::mt19937_64& rng);

// Stationary price variance when jump diffusion balances selection around a
// quadratic fitness peak: sqrt(rate (s p)^2 Theta^2 / (c m_L)), where c is the
// selection strength <eta gamma psi0> and p the typical price level.
double jump_equilibrium_variance(const MarketVolumeParams& mv, double selection_strength, const JumpSettings& jumps,
                                 double price_level);

// n brands with prices at normal quantiles, shifted and scaled so the
// equal-weight mean and variance are exactly `mean` and `variance`.
std::vector<BrandState> gaussian_brands(std::size_t n, double mean, double variance, double preference,
                                        double reproduction, double stock, double total_sales);

struct PriceHistogram {
  std::vector<double> bin_edges;  // n + 1 increasing edges
  std::vector<double> masses;     // n masses summing to 1

  void validate() const;
  double center(std::size_t i) const { return 0.5 * (bin_edges[i] + bin_edges[i + 1]); }
  double total_mass() const;
  double mean() const;
  double variance() const;

  // Histogram of a normal density on `bins` equal bins spanning mean +- half_width.
  static PriceHistogram gaussian(double mean, double variance, std::size_t bins, double half_width);
};

// Replicator step of the price distribution with f(mu) = strength * v(mu).
// <f> comes from the histogram itself, so total mass is conserved by
// construction.
PriceHistogram price_histogram_step(const PriceHistogram& h, const MarketVolumeParams& mv, double selection_strength,
                                    double dtau);

// Parameters of the reduced mean-price dynamics.
struct SelectionContext {
  double epsilon = 0.02;
  double selection_strength = 0.0;  // <eta gamma psi0>
  double variance = 0.0;            // Var(P_mu)
};

// a = <eta gamma psi0> m_L Var / (epsilon Theta^2), per unit of t = epsilon tau.
double price_decline_rate(const MarketVolumeParams& mv, const SelectionContext& ctx);

// Integrates d<mu>/dt = -a (<mu> - mu_m) with RK4 on the grid (t0, dt, n).
SalesSeries mean_price_ode(double mu_init, const MarketVolumeParams& mv, const SelectionContext& ctx, double t0,
                           double dt, std::size_t n);

// m_1(t) = 1 / (1 + exp(-theta t - C_m)).
std::vector<double> fisher_pry(const std::vector<double>& times, double theta, double offset);
// RK4 integration of dm_1/dt = theta m_1 (1 - m_1) from m_1(times[0]).
std::vector<double> fisher_pry_ode(const std::vector<double>& times, double theta, double initial_share);

// theta = (f_1 - f_2) / epsilon: fitnesses are rates per tau-unit, theta is
// per unit of t = epsilon tau.
double fitness_advantage(double f1, double f2, double epsilon);

struct CompetitionConfig {
  MarketState initial;
  double dtau = 1.0;
  std::size_t steps = 0;
  bool micro = false;   // micro_step instead of replicator_step
  bool jumps_enabled = false;
  JumpSettings jumps;
  std::uint64_t seed = 0;
  std::size_t record_every = 1;
  bool record_brands = true;
};

struct TrajectoryRow {
  double t = 0.0;  // long time scale, epsilon * tau
  std::size_t brand = 0;
  double share = 0.0;
  double price = 0.0;
  double sales = 0.0;
};

struct CompetitionRun {
  std::vector<double> time;  // long time scale of each record
  std::vector<double> mean_price;
  std::vector<double> price_variance;
  std::vector<TrajectoryRow> rows;
  MarketState final_state;
};

CompetitionRun simulate_competition(const CompetitionConfig& cfg);

// Independent runs with seeds derived from (cfg.seed, run index); results are
// ordered by run index whatever the completion order.
std::vector<CompetitionRun> simulate_ensemble(const CompetitionConfig& cfg, std::size_t runs);

}  // namespace plc
