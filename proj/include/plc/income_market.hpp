#pragma once

namespace plc {

// Exponential (Boltzmann-Gibbs) income distribution of the lower class.
struct IncomeModel {
  double mean_income = 1.0;  // I, currency/year

  void validate() const;
};

// Price-dependent market volume. The lower class (M - M_U) is gated by a
// Gaussian in real price around the natural price; the upper class is not.
struct MarketVolumeParams {
  double market_potential = 1.0;  // M
  double upper_class = 0.0;       // M_U
  double natural_price = 0.0;     // mu_m
  double width = 1.0;             // Theta

  double lower_class() const noexcept { return market_potential - upper_class; }
  // Lower/upper class as fractions of the market potential.
  double lower_fraction() const noexcept { return lower_class() / market_potential; }
  double upper_fraction() const noexcept { return upper_class / market_potential; }

  void validate() const;

  // Potential M split into fractions m_L, m_U (m_L + m_U = 1).
  static MarketVolumeParams from_fractions(double lower_fraction, double natural_price, double width,
                                           double market_potential = 1.0);
};

// P_I(h) = exp(-h/I)/I.
double income_pdf(double income, const IncomeModel& model);

// Real price mu = p / I.
double real_price(double price, double mean_income);

// V(mu); clamped to M below the natural price.
double market_volume(double mu, const MarketVolumeParams& params);

// v(mu) = V(mu)/M, in [0, 1].
double volume_density(double mu, const MarketVolumeParams& params);

// dv/dmu (zero below the natural price).
double volume_density_slope(double mu, const MarketVolumeParams& params);

}  // namespace plc
