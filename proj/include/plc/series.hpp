#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace plc {

// Uniformly sampled time series. `t0` is the calendar time of the first
// sample and `dt` the spacing in years; sample i sits at t0 + i*dt.
struct SalesSeries {
  double t0 = 0.0;
  double dt = 1.0;
  std::vector<double> values;

  std::size_t size() const noexcept { return values.size(); }
  bool empty() const noexcept { return values.empty(); }
  double time(std::size_t i) const noexcept { return t0 + dt * static_cast<double>(i); }
  // Model time (years since t0) of sample i.
  double elapsed(std::size_t i) const noexcept { return dt * static_cast<double>(i); }

  // Linear interpolation at fractional index `pos`; zero outside [0, size-1].
  double at_index(double pos) const noexcept;

  // Build a series by sampling `f(elapsed)` on n points.
  template <class F>
  static SalesSeries sample(double t0, double dt, std::size_t n, F&& f) {
    SalesSeries s{t0, dt, {}};
    s.values.reserve(n);
    for (std::size_t i = 0; i < n; ++i) s.values.push_back(f(dt * static_cast<double>(i)));
    return s;
  }
};

// Same t0, dt and length (t0/dt compared to 1e-9 relative).
bool same_grid(const SalesSeries& a, const SalesSeries& b) noexcept;

// Throws AlignmentError naming `what` unless the grids agree.
void require_same_grid(const SalesSeries& a, const SalesSeries& b, const char* what);

SalesSeries operator+(const SalesSeries& a, const SalesSeries& b);
SalesSeries operator*(double c, const SalesSeries& s);

// Grid check shared by anything that takes a spacing.
void require_positive_dt(double dt);

}  // namespace plc
