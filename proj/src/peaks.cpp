#include "plc/peaks.hpp"

#include <cmath>

namespace plc {

std::vector<Peak> local_maxima(const SalesSeries& s) {
  std::vector<Peak> out;
  const auto& v = s.values;
  for (std::size_t i = 1; i + 1 < v.size(); ++i) {
    if (!(v[i] > v[i - 1] && v[i] >= v[i + 1])) continue;
    const double curv = v[i - 1] - 2.0 * v[i] + v[i + 1];
    double shift = curv < 0.0 ? 0.5 * (v[i - 1] - v[i + 1]) / curv : 0.0;
    if (std::abs(shift) > 0.5) shift = 0.0;
    out.push_back({i, s.time(i) + shift * s.dt, v[i]});
  }
  return out;
}

std::optional<Peak> nearest_peak(const std::vector<Peak>& peaks, double target) {
  std::optional<Peak> best;
  for (const auto& p : peaks)
    if (!best || std::abs(p.time - target) < std::abs(best->time - target)) best = p;
  return best;
}

}  // namespace plc
