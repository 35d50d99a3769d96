#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace plc {

// Box-constrained Nelder-Mead. The search runs in unit-cube coordinates and
// every vertex is clamped to the box, so bounds hold for all evaluations.
struct Box {
  std::vector<double> lower;
  std::vector<double> upper;

  std::size_t dim() const noexcept { return lower.size(); }
  void validate() const;
  std::vector<double> to_unit(const std::vector<double>& x) const;
  std::vector<double> from_unit(const std::vector<double>& u) const;
};

struct SimplexOptions {
  std::size_t max_evals = 20000;
  double f_tol = 1e-14;      // spread of simplex values, absolute
  double x_tol = 1e-9;       // simplex diameter in unit coordinates
  double initial_step = 0.1; // edge length in unit coordinates
  int restarts = 3;          // fresh simplices around the best point
};

struct SimplexResult {
  std::vector<double> x;
  double f = 0.0;
  std::size_t evals = 0;
  bool converged = false;
};

using Objective = std::function<double(const std::vector<double>&)>;

SimplexResult nelder_mead(const Objective& f, const Box& box, const std::vector<double>& start,
                          const SimplexOptions& opt = {});

// One Nelder-Mead run per start point; the best result wins, ties going to
// the lowest start index. Starts may run concurrently (`threads` > 1) without
// changing the outcome.
SimplexResult multi_start(const Objective& f, const Box& box, const std::vector<std::vector<double>>& starts,
                          const SimplexOptions& opt = {}, unsigned threads = 1);

// One Nelder-Mead run per start point, results in start order.
std::vector<SimplexResult> simplex_from_each(const Objective& f, const Box& box,
                                             const std::vector<std::vector<double>>& starts,
                                             const SimplexOptions& opt = {}, unsigned threads = 1);

// Cartesian lattice: `axes[d]` lists the values of coordinate d.
std::vector<std::vector<double>> lattice(const std::vector<std::vector<double>>& axes);

}  // namespace plc
