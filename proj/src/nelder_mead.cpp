#include "plc/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <numeric>

#include "plc/error.hpp"

namespace plc {

void Box::validate() const {
  if (lower.empty() || lower.size() != upper.size()) throw InvalidParameterError("box bounds must have equal, non-zero size");
  for (std::size_t i = 0; i < lower.size(); ++i)
    if (!(upper[i] > lower[i])) throw InvalidParameterError("box upper bound must exceed lower bound");
}

std::vector<double> Box::to_unit(const std::vector<double>& x) const {
  std::vector<double> u(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) u[i] = std::clamp((x[i] - lower[i]) / (upper[i] - lower[i]), 0.0, 1.0);
  return u;
}

std::vector<double> Box::from_unit(const std::vector<double>& u) const {
  std::vector<double> x(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) x[i] = lower[i] + std::clamp(u[i], 0.0, 1.0) * (upper[i] - lower[i]);
  return x;
}

namespace {

using Point = std::vector<double>;

struct Run {
  const Objective& f;
  const Box& box;
  std::size_t evals = 0;

  double eval(Point& u) {
    for (double& v : u) v = std::clamp(v, 0.0, 1.0);
    ++evals;
    const double r = f(box.from_unit(u));
    return std::isfinite(r) ? r : std::numeric_limits<double>::infinity();
  }
};

Point affine(const Point& a, const Point& b, double t) {
  // a + t (b - a)
  Point r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + t * (b[i] - a[i]);
  return r;
}

// Returns true when the tolerances were met before the budget ran out.
bool simplex_pass(Run& run, Point& best, double& fbest, const SimplexOptions& opt, std::size_t budget) {
  const std::size_t d = best.size();
  std::vector<Point> s(d + 1, best);
  std::vector<double> fs(d + 1);
  fs[0] = fbest;
  for (std::size_t i = 0; i < d; ++i) {
    // Step inward when the start sits on the upper face.
    const double step = best[i] + opt.initial_step <= 1.0 ? opt.initial_step : -opt.initial_step;
    s[i + 1][i] += step;
    fs[i + 1] = run.eval(s[i + 1]);
  }
  std::vector<std::size_t> order(d + 1);
  bool done = false;
  while (run.evals < budget) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fs[a] < fs[b]; });
    {
      std::vector<Point> s2;
      std::vector<double> f2;
      for (std::size_t k : order) {
        s2.push_back(s[k]);
        f2.push_back(fs[k]);
      }
      s.swap(s2);
      fs.swap(f2);
    }
    double diam = 0.0;
    for (std::size_t i = 1; i <= d; ++i)
      for (std::size_t j = 0; j < d; ++j) diam = std::max(diam, std::abs(s[i][j] - s[0][j]));
    if (fs[d] - fs[0] <= opt.f_tol && diam <= opt.x_tol) {
      done = true;
      break;
    }
    if (diam <= 1e-15) {
      done = true;
      break;
    }

    Point centroid(d, 0.0);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) centroid[j] += s[i][j] / static_cast<double>(d);

    Point xr = affine(centroid, s[d], -1.0);
    const double fr = run.eval(xr);
    if (fr < fs[0]) {
      Point xe = affine(centroid, s[d], -2.0);
      const double fe = run.eval(xe);
      if (fe < fr) {
        s[d] = xe;
        fs[d] = fe;
      } else {
        s[d] = xr;
        fs[d] = fr;
      }
    } else if (fr < fs[d - 1]) {
      s[d] = xr;
      fs[d] = fr;
    } else {
      const bool outside = fr < fs[d];
      Point xc = outside ? affine(centroid, xr, 0.5) : affine(centroid, s[d], 0.5);
      const double fc = run.eval(xc);
      if (fc < (outside ? fr : fs[d])) {
        s[d] = xc;
        fs[d] = fc;
      } else {
        for (std::size_t i = 1; i <= d; ++i) {
          s[i] = affine(s[0], s[i], 0.5);
          fs[i] = run.eval(s[i]);
        }
      }
    }
  }
  const auto it = std::min_element(fs.begin(), fs.end());
  const std::size_t k = static_cast<std::size_t>(it - fs.begin());
  if (fs[k] <= fbest) {
    best = s[k];
    fbest = fs[k];
  }
  return done;
}

}  // namespace

SimplexResult nelder_mead(const Objective& f, const Box& box, const std::vector<double>& start,
                          const SimplexOptions& opt) {
  box.validate();
  if (start.size() != box.dim()) throw InvalidParameterError("start point dimension does not match the box");
  Run run{f, box};
  Point best = box.to_unit(start);
  double fbest = run.eval(best);
  bool converged = false;
  for (int pass = 0; pass <= opt.restarts && run.evals < opt.max_evals; ++pass) {
    const double before = fbest;
    converged = simplex_pass(run, best, fbest, opt, opt.max_evals);
    // A restart that no longer improves confirms the minimum.
    if (pass > 0 && converged && before - fbest <= opt.f_tol) break;
  }
  return {box.from_unit(best), fbest, run.evals, converged};
}

std::vector<SimplexResult> simplex_from_each(const Objective& f, const Box& box,
                                             const std::vector<std::vector<double>>& starts, const SimplexOptions& opt,
                                             unsigned threads) {
  if (starts.empty()) throw InvalidParameterError("multi-start needs at least one start point");
  std::vector<SimplexResult> results(starts.size());
  if (threads <= 1) {
    for (std::size_t i = 0; i < starts.size(); ++i) results[i] = nelder_mead(f, box, starts[i], opt);
    return results;
  }
  std::size_t next = 0;
  while (next < starts.size()) {
    std::vector<std::future<SimplexResult>> batch;
    const std::size_t first = next;
    for (unsigned t = 0; t < threads && next < starts.size(); ++t, ++next)
      batch.push_back(std::async(std::launch::async, [&, i = next] { return nelder_mead(f, box, starts[i], opt); }));
    for (std::size_t j = 0; j < batch.size(); ++j) results[first + j] = batch[j].get();
  }
  return results;
}

SimplexResult multi_start(const Objective& f, const Box& box, const std::vector<std::vector<double>>& starts,
                          const SimplexOptions& opt, unsigned threads) {
  const auto results = simplex_from_each(f, box, starts, opt, threads);
  std::size_t best = 0;
  std::size_t total = 0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    total += results[i].evals;
    if (results[i].f < results[best].f) best = i;
  }
  SimplexResult out = results[best];
  out.evals = total;
  return out;
}

std::vector<std::vector<double>> lattice(const std::vector<std::vector<double>>& axes) {
  std::vector<std::vector<double>> out{{}};
  for (const auto& axis : axes) {
    if (axis.empty()) throw InvalidParameterError("lattice axis must not be empty");
    std::vector<std::vector<double>> next;
    next.reserve(out.size() * axis.size());
    for (const auto& p : out)
      for (double v : axis) {
        auto q = p;
        q.push_back(v);
        next.push_back(std::move(q));
      }
    out.swap(next);
  }
  return out;
}

}  // namespace plc
