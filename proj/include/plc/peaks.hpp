#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "plc/series.hpp"

namespace plc {

struct Peak {
  std::size_t index = 0;
  double time = 0.0;   // vertex of the parabola through the three samples
  double value = 0.0;  // sample value at `index`
};

// Interior local maxima: v[i-1] < v[i] >= v[i+1]. A plateau counts once,
// at its first sample.
std::vector<Peak> local_maxima(const SalesSeries& s);

// Peak whose time is closest to `target`, if any.
std::optional<Peak> nearest_peak(const std::vector<Peak>& peaks, double target);

}  // namespace plc
