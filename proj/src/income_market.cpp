#include "plc/income_market.hpp"

#include <cmath>

#include "plc/error.hpp"

namespace plc {

void IncomeModel::validate() const {
  if (!(mean_income > 0.0) || !std::isfinite(mean_income))
    throw InvalidParameterError("mean income must be positive");
}

void MarketVolumeParams::validate() const {
  if (!(market_potential > 0.0) || !std::isfinite(market_potential))
    throw InvalidParameterError("market potential M must be positive");
  if (!(upper_class >= 0.0) || upper_class > market_potential)
    throw InvalidParameterError("upper class M_U must lie in [0, M]");
  if (!(natural_price >= 0.0) || !std::isfinite(natural_price))
    throw InvalidParameterError("natural price must be non-negative");
  if (!(width > 0.0) || !std::isfinite(width)) throw InvalidParameterError("volume width Theta must be positive");
}

MarketVolumeParams MarketVolumeParams::from_fractions(double lower_fraction, double natural_price, double width,
                                                      double market_potential) {
  MarketVolumeParams p{market_potential, (1.0 - lower_fraction) * market_potential, natural_price, width};
  p.validate();
  return p;
}

double income_pdf(double income, const IncomeModel& model) {
  model.validate();
  if (income < 0.0) throw DomainError("income must be non-negative");
  return std::exp(-income / model.mean_income) / model.mean_income;
}

double real_price(double price, double mean_income) {
  if (!(mean_income > 0.0)) throw InvalidParameterError("mean income must be positive");
  return price / mean_income;
}

double market_volume(double mu, const MarketVolumeParams& params) {
  params.validate();
  if (mu <= params.natural_price) return params.market_potential;
  const double x = (mu - params.natural_price) / params.width;
  return params.lower_class() * std::exp(-0.5 * x * x) + params.upper_class;
}

double volume_density(double mu, const MarketVolumeParams& params) {
  return market_volume(mu, params) / params.market_potential;
}

double volume_density_slope(double mu, const MarketVolumeParams& params) {
  params.validate();
  if (mu <= params.natural_price) return 0.0;
  const double x = (mu - params.natural_price) / params.width;
  return -params.lower_fraction() * x / params.width * std::exp(-0.5 * x * x);
}

}  // namespace plc
