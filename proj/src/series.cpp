#include "plc/series.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "plc/error.hpp"

namespace plc {

double SalesSeries::at_index(double pos) const noexcept {
  if (values.empty() || pos < 0.0) return 0.0;
  const double last = static_cast<double>(values.size() - 1);
  if (pos > last) return 0.0;
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const double w = pos - static_cast<double>(lo);
  if (w == 0.0 || lo + 1 >= values.size()) return values[lo];
  return (1.0 - w) * values[lo] + w * values[lo + 1];
}

namespace {
bool close(double a, double b) {
  return std::abs(a - b) <= 1e-9 * std::max({1.0, std::abs(a), std::abs(b)});
}
}  // namespace

bool same_grid(const SalesSeries& a, const SalesSeries& b) noexcept {
  return a.size() == b.size() && close(a.t0, b.t0) && close(a.dt, b.dt);
}

void require_same_grid(const SalesSeries& a, const SalesSeries& b, const char* what) {
  if (!same_grid(a, b)) {
    throw AlignmentError(std::string(what) + ": series grids differ (t0 " + std::to_string(a.t0) + " vs " +
                         std::to_string(b.t0) + ", dt " + std::to_string(a.dt) + " vs " +
                         std::to_string(b.dt) + ", n " + std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()) + ")");
  }
}

SalesSeries operator+(const SalesSeries& a, const SalesSeries& b) {
  require_same_grid(a, b, "series addition");
  SalesSeries out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.values[i] += b.values[i];
  return out;
}

SalesSeries operator*(double c, const SalesSeries& s) {
  SalesSeries out = s;
  for (auto& v : out.values) v *= c;
  return out;
}

void require_positive_dt(double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidParameterError("time step must be positive");
}

}  // namespace plc
