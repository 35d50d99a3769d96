#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "plc/dataset.hpp"
#include "plc/nelder_mead.hpp"
#include "plc/scenario.hpp"

namespace plc {

struct StageLoss {
  std::string stage;
  double loss = 0.0;
  std::size_t evals = 0;
  bool converged = false;
};

struct FitResult {
  PlcModel parameters;
  double loss = 0.0;  // sum of squared residuals
  std::size_t n_evals = 0;
  bool converged = false;
  std::vector<StageLoss> stages;
  std::vector<std::string> notes;

  // Throws InvalidParameterError if an active parameter leaves its bounds.
  void check_bounds() const;
  // `parameter,value` rows in table order, then loss, evals, convergence and
  // per-stage losses. Byte-identical for identical results.
  std::string to_csv() const;
};

void emit(const FitResult& fit, const std::string& path, EmitFormat format);

struct FitOptions {
  SimplexOptions simplex{40000, 1e-20, 1e-10, 0.1, 4};
  std::size_t keep = 10;  // lattice points refined by the simplex
  unsigned threads = 1;
};

// Default candidate ratios 0, 0.01, ..., 0.95.
std::vector<double> default_pm_grid();

// Grid search over p_m/p0 with a log-linear regression of the price function
// per candidate, refined between grid neighbours. Picks the candidate with
// the smallest regression residual; a = -slope.
FitResult fit_price_decline(const Dataset& prices, const std::vector<double>& pm_grid = default_pm_grid(),
                            const FitOptions& opt = {});

// fit_price_decline followed by a least-squares polish of
// p(t) = P (r + (1 - r) e^{-a t}) in price space, with the level P profiled
// out. The log transform amplifies noise on samples near the floor; the
// polish is kept only when it lowers the price-space residual.
FitResult fit_price_curve(const Dataset& prices, const FitOptions& opt = {});

struct GompertzFitOptions {
  std::optional<double> origin;  // calendar year of t = 0; default: first sample
  // Bass adopters added to the Gompertz curve. Fixed unless fit_bass is set.
  std::optional<BassParams> bass;
  bool fit_bass = false;
  bool fit_delay = true;
  double delay = 0.0;  // held value of delta_t0 when fit_delay is off
};

// Least squares of n_B(t) + n_G(t - delta_t0) against the penetration after a
// least-squares monotone (isotonic) cleaning. Free: n_G0, k, delta_t0 and a unless fixed.
FitResult fit_gompertz(const Dataset& penetration, std::optional<double> a_fixed = std::nullopt,
                       const GompertzFitOptions& gopt = {}, const FitOptions& opt = {});

struct PlcFitData {
  std::optional<Dataset> price;
  std::optional<Dataset> penetration;
};

// Staged estimation. `prior` supplies the structure (which table entries are
// active), t0, the recurrence and failure-law settings, and M for data in
// fractions. Values of free parameters in `prior` are ignored. Stages: price
// decline, penetration, sales, joint polish.
FitResult fit_plc(const Dataset& sales, const PlcModel& prior, const PlcFitData& extra = {},
                  const FitOptions& opt = {});

}  // namespace plc
