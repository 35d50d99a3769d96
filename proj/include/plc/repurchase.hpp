#pragma once

#include "plc/series.hpp"

namespace plc {

// Distribution of the time to product failure. The Dirac form puts all mass
// at the mean lifetime; the Gaussian form is a normal truncated at zero and
// renormalized.
struct FailureDistribution {
  enum class Kind { dirac, gaussian };
  Kind kind = Kind::dirac;
  double mean_lifetime = 1.0;  // t_p, years
  double spread = 0.0;         // sigma_p, years

  void validate() const;
  // Density on (0, inf); zero for the Dirac kind (it has no density).
  double density(double t) const;

  static FailureDistribution dirac(double lifetime) { return {Kind::dirac, lifetime, 0.0}; }
  static FailureDistribution gaussian(double lifetime, double spread) { return {Kind::gaussian, lifetime, spread}; }
};

struct RepurchaseParams {
  double replacement = 0.0;  // R
  double multiple = 0.0;     // Q, 1/year
  FailureDistribution failure;
  // Replacement sales themselves fail and are replaced again, giving echoes
  // at t_p, 2 t_p, ... with amplitude R^k.
  bool recurrent = true;

  void validate() const;
};

// y_R(t) = R * int_0^t y(t - s) Gamma(s) ds on the series grid.
SalesSeries replacement_convolve(const SalesSeries& first, const RepurchaseParams& rp);

// Q * n(t); `adopters` must be non-decreasing.
SalesSeries multiple_purchase(const SalesSeries& adopters, double rate);

// First purchase plus replacement plus multiple purchase.
SalesSeries branch_plc(const SalesSeries& first, const SalesSeries& adopters, const RepurchaseParams& rp);

// y_B(t) + y_G(t - delay); the Gompertz branch is zero before its origin.
SalesSeries total_plc(const SalesSeries& bass_branch, const SalesSeries& gompertz_branch, double delay);

// Series shifted later by `delay` years (linear interpolation, zero fill).
SalesSeries delayed(const SalesSeries& s, double delay);

}  // namespace plc
