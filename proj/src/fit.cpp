#include "plc/fit.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>

#include <boost/math/tools/minima.hpp>

#include "plc/diffusion.hpp"
#include "plc/error.hpp"

namespace plc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// One optimisation coordinate. Scale parameters are searched in log space.
struct Coord {
  Param p;
  double lo;
  double hi;
  bool log = false;
};

Coord coord(Param p, double lo, double hi, bool log = false) { return {p, lo, hi, log}; }

struct Stage {
  std::string name;
  PlcModel base;
  std::vector<Coord> coords;
  std::function<double(const PlcModel&)> loss;

  Box box() const {
    Box b;
    for (const auto& c : coords) {
      b.lower.push_back(c.log ? std::log(c.lo) : c.lo);
      b.upper.push_back(c.log ? std::log(c.hi) : c.hi);
    }
    return b;
  }
  PlcModel model(const std::vector<double>& x) const {
    PlcModel m = base;
    for (std::size_t i = 0; i < coords.size(); ++i) {
      const double v = coords[i].log ? std::exp(x[i]) : x[i];
      m.set(coords[i].p, std::clamp(v, coords[i].lo, coords[i].hi));
    }
    return m;
  }
  std::vector<double> point(const PlcModel& m) const {
    std::vector<double> x;
    for (const auto& c : coords) {
      const double v = std::clamp(m.get(c.p), c.lo, c.hi);
      x.push_back(c.log ? std::log(v) : v);
    }
    return x;
  }
  double operator()(const std::vector<double>& x) const {
    try {
      return loss(model(x));
    } catch (const Error&) {
      return kInf;
    }
  }
};

struct StageOutcome {
  PlcModel model;
  double loss = kInf;
  std::size_t evals = 0;
  bool converged = false;
};

// Delays and ratios that sit near zero are retried pinned at zero: the loss
// can jump there (a sample at the branch origin switches on), which the
// simplex cannot resolve from the interior.
void try_pinned(const Stage& st, StageOutcome& out, const FitOptions& opt) {
  for (std::size_t i = 0; i < st.coords.size(); ++i) {
    const Coord& c = st.coords[i];
    if (c.log || c.lo != 0.0 || out.model.get(c.p) > 0.05 * (c.hi - c.lo)) continue;
    Stage pinned = st;
    pinned.base = out.model;
    pinned.base.set(c.p, c.lo);
    pinned.coords.erase(pinned.coords.begin() + static_cast<std::ptrdiff_t>(i));
    if (pinned.coords.empty()) {
      const double l = pinned.loss(pinned.base);
      ++out.evals;
      if (l < out.loss) out = {pinned.base, l, out.evals, true};
      continue;
    }
    const Objective g = [&pinned](const std::vector<double>& x) { return pinned(x); };
    const SimplexResult q = nelder_mead(g, pinned.box(), pinned.point(pinned.base), opt.simplex);
    out.evals += q.evals;
    if (q.f < out.loss) out = {pinned.model(q.x), q.f, out.evals, q.converged && std::isfinite(q.f)};
  }
}

// Screens every candidate model, then refines the `keep` best with the
// simplex. Returns every refined result, best first (ties keep start order);
// the first entry also carries the screening evaluations.
std::vector<StageOutcome> refine_all(const Stage& st, const std::vector<PlcModel>& candidates, const FitOptions& opt) {
  const Box box = st.box();
  std::vector<std::pair<double, std::size_t>> screened;
  screened.reserve(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) screened.emplace_back(st(st.point(candidates[i])), i);
  std::stable_sort(screened.begin(), screened.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<std::vector<double>> starts;
  for (std::size_t i = 0; i < screened.size() && starts.size() < std::max<std::size_t>(1, opt.keep); ++i)
    if (std::isfinite(screened[i].first) || starts.empty()) starts.push_back(st.point(candidates[screened[i].second]));
  const Objective f = [&st](const std::vector<double>& x) { return st(x); };
  const auto runs = simplex_from_each(f, box, starts, opt.simplex, opt.threads);
  std::vector<StageOutcome> out;
  for (const auto& r : runs) out.push_back({st.model(r.x), r.f, r.evals, r.converged && std::isfinite(r.f)});
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.loss < b.loss; });
  try_pinned(st, out.front(), opt);
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.loss < b.loss; });
  out.front().evals += candidates.size();
  return out;
}

std::size_t total_evals(const std::vector<StageOutcome>& v) {
  std::size_t n = 0;
  for (const auto& o : v) n += o.evals;
  return n;
}

StageOutcome run_stage(const Stage& st, const std::vector<PlcModel>& candidates, const FitOptions& opt) {
  const auto all = refine_all(st, candidates, opt);
  StageOutcome best = all.front();
  best.evals = total_evals(all);
  return best;
}

// Up to `n` outcomes, best first, skipping any within `gap` (unit-box
// distance) of one already taken.
std::vector<StageOutcome> distinct(const Stage& st, const std::vector<StageOutcome>& sorted, std::size_t n,
                                   double gap = 0.05) {
  const Box box = st.box();
  std::vector<StageOutcome> out;
  std::vector<std::vector<double>> seen;
  for (const auto& o : sorted) {
    if (out.size() >= n) break;
    if (!std::isfinite(o.loss)) continue;
    const auto u = box.to_unit(st.point(o.model));
    bool near = false;
    for (const auto& v : seen) {
      double d = 0.0;
      for (std::size_t i = 0; i < u.size(); ++i) d = std::max(d, std::abs(u[i] - v[i]));
      near = near || d < gap;
    }
    if (near) continue;
    seen.push_back(u);
    out.push_back(o);
  }
  if (out.empty() && !sorted.empty()) out.push_back(sorted.front());
  return out;
}

// All combinations of per-parameter candidate values applied to `base`.
std::vector<PlcModel> expand(const PlcModel& base, const std::vector<std::pair<Param, std::vector<double>>>& axes) {
  std::vector<std::vector<double>> values;
  for (const auto& a : axes) values.push_back(a.second);
  std::vector<PlcModel> out;
  for (const auto& pt : lattice(values)) {
    PlcModel m = base;
    for (std::size_t i = 0; i < axes.size(); ++i) m.set(axes[i].first, pt[i]);
    out.push_back(std::move(m));
  }
  return out;
}

// Least-squares non-decreasing fit (pool adjacent violators). Unlike a
// running maximum it does not ratchet upward on noise.
std::vector<double> monotone_clean(const std::vector<double>& v) {
  std::vector<double> level;
  std::vector<std::size_t> width;
  for (double x : v) {
    level.push_back(x);
    width.push_back(1);
    while (level.size() > 1 && level[level.size() - 2] > level.back()) {
      const std::size_t w = width[width.size() - 2] + width.back();
      const double merged = (level[level.size() - 2] * static_cast<double>(width[width.size() - 2]) +
                             level.back() * static_cast<double>(width.back())) /
                            static_cast<double>(w);
      level.pop_back();
      width.pop_back();
      level.back() = merged;
      width.back() = w;
    }
  }
  std::vector<double> out;
  out.reserve(v.size());
  for (std::size_t b = 0; b < level.size(); ++b) out.insert(out.end(), width[b], level[b]);
  return out;
}

// Data series placed on the model grid starting at t0.
struct Aligned {
  std::size_t offset = 0;
  double dt = 1.0;
  std::vector<double> values;
};

Aligned align(const SalesSeries& s, double t0) {
  const double shift = (s.t0 - t0) / s.dt;
  const double r = std::round(shift);
  if (r < 0.0 || std::abs(shift - r) > 1e-6) throw AlignmentError("data grid does not start on the model grid from t0");
  return {static_cast<std::size_t>(r), s.dt, s.values};
}

double ssr(const std::vector<double>& model, std::size_t offset, const std::vector<double>& data, double scale = 1.0) {
  double acc = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double r = data[i] - scale * model[offset + i];
    acc += r * r;
  }
  return acc;
}

// Least-squares scale of `model` onto `data`.
double best_scale(const std::vector<double>& model, std::size_t offset, const std::vector<double>& data) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    num += data[i] * model[offset + i];
    den += model[offset + i] * model[offset + i];
  }
  return den > 0.0 ? num / den : 0.0;
}

struct Regression {
  double slope = 0.0;
  double intercept = 0.0;
  double ssr = kInf;
};

Regression regress_log_price(const SalesSeries& prices, double ratio) {
  const double p0 = prices.values.front();
  const double pm = ratio * p0;
  const std::size_t n = prices.size();
  double st = 0.0, sy = 0.0;
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double d = prices.values[i] - pm;
    if (!(d > 0.0)) return {};
    y[i] = std::log(d / p0);
    st += prices.elapsed(i);
    sy += y[i];
  }
  const double tm = st / static_cast<double>(n), ym = sy / static_cast<double>(n);
  double stt = 0.0, sty = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dt = prices.elapsed(i) - tm;
    stt += dt * dt;
    sty += dt * (y[i] - ym);
  }
  Regression r;
  r.slope = sty / stt;
  r.intercept = ym - r.slope * tm;
  r.ssr = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = y[i] - (r.intercept + r.slope * prices.elapsed(i));
    r.ssr += e * e;
  }
  return r;
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  return v;
}

// Lifetimes from 2 years (or the grid limit) up to the data span.
std::vector<double> lifetime_axis(double lo, double hi) {
  std::vector<double> v;
  for (double t = std::max(2.0, lo); t <= hi + 1e-9; t += 1.5) v.push_back(t);
  if (v.empty()) v.push_back(lo);
  return v;
}

}  // namespace

void FitResult::check_bounds() const {
  for (Param p : all_params()) {
    if (!parameters.has(p)) continue;
    const auto& info = param_info(p);
    const double v = parameters.get(p);
    if (!(v >= info.lower && v <= info.upper))
      throw InvalidParameterError(std::string("fitted ") + info.key + " outside its bounds");
  }
  if (!(loss >= 0.0)) throw InvalidParameterError("fit loss must be non-negative");
}

std::string FitResult::to_csv() const {
  std::ostringstream os;
  os << "parameter,value\n";
  for (Param p : all_params())
    if (parameters.has(p)) os << param_info(p).key << ',' << format_double(parameters.get(p)) << '\n';
  os << "loss," << format_double(loss) << '\n';
  os << "n_evals," << n_evals << '\n';
  os << "converged," << (converged ? 1 : 0) << '\n';
  for (const auto& s : stages) os << "stage_loss:" << s.stage << ',' << format_double(s.loss) << '\n';
  return os.str();
}

void emit(const FitResult& fit, const std::string& path, EmitFormat format) {
  if (format == EmitFormat::csv) {
    write_text(path, fit.to_csv());
    return;
  }
  std::string text = "# parameter value\n";
  std::istringstream in(fit.to_csv());
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::replace(line.begin(), line.end(), ',', ' ');
    text += line + '\n';
  }
  write_text(path, text);
}

std::vector<double> default_pm_grid() { return linspace(0.0, 0.95, 96); }

FitResult fit_price_decline(const Dataset& prices, const std::vector<double>& pm_grid, const FitOptions& opt) {
  (void)opt;
  const SalesSeries& s = prices.series;
  if (s.size() < 4) throw InvalidInputError("price fit needs at least 4 samples");
  for (double p : s.values)
    if (!(p > 0.0)) throw InvalidInputError("prices must be positive");
  const double p0 = s.values.front();
  const auto [mn, mx] = std::minmax_element(s.values.begin(), s.values.end());

  FitResult out;
  out.parameters.name = "price_decline";
  out.parameters.set(Param::t0, s.t0);
  if (*mx - *mn <= 1e-12 * *mx) {
    out.parameters.set(Param::pm_over_p0, 0.0);
    out.parameters.set(Param::a, 0.0);
    out.converged = false;
    out.notes.push_back("constant price series: no decline");
    out.stages.push_back({"price", 0.0, 0, false});
    return out;
  }

  const double limit = *mn / p0;  // p_m/p0 must stay below this
  std::vector<double> grid;
  for (double r : pm_grid)
    if (r >= 0.0 && r < limit) grid.push_back(r);
  if (grid.empty()) throw InfeasibleError("no p_m/p0 candidate keeps every price above p_m");
  std::sort(grid.begin(), grid.end());

  std::size_t evals = 0;
  std::size_t best = 0;
  std::vector<Regression> fits(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    fits[i] = regress_log_price(s, grid[i]);
    ++evals;
    if (fits[i].ssr < fits[best].ssr) best = i;
  }
  double ratio = grid[best];
  Regression reg = fits[best];

  const double lo = best > 0 ? grid[best - 1] : grid[best];
  const double hi = best + 1 < grid.size() ? grid[best + 1] : std::min(limit, grid[best] + 0.01) * (1.0 - 1e-12);
  if (hi > lo) {
    std::uintmax_t iters = 200;
    const auto [r, f] = boost::math::tools::brent_find_minima(
        [&](double x) {
          ++evals;
          return regress_log_price(s, x).ssr;
        },
        lo, hi, 52, iters);
    if (f < reg.ssr) {
      ratio = r;
      reg = regress_log_price(s, r);
    }
  }
  if (!std::isfinite(reg.ssr)) throw InfeasibleError("price regression failed for every candidate");
  out.parameters.set(Param::pm_over_p0, ratio);
  out.parameters.set(Param::a, std::clamp(-reg.slope, 0.0, param_info(Param::a).upper));
  if (reg.slope > 0.0) out.notes.push_back("price function increases: decline rate clamped to 0");
  out.loss = reg.ssr;
  out.n_evals = evals;
  out.converged = true;
  out.stages.push_back({"price", reg.ssr, evals, true});
  return out;
}

namespace {

double penetration_model(const PlcModel& m, double t) {
  if (t < 0.0) return 0.0;
  double n = 0.0;
  if (m.has_bass()) n += bass_cumulative(t, m.bass());
  if (m.has_gompertz()) {
    const GompertzParams g = m.gompertz();
    if (t >= g.delay) n += gompertz_cumulative(t - g.delay, g);
  }
  return n;
}

std::vector<PlcModel> gompertz_candidates(const PlcModel& base, double top, bool fit_delay, bool fit_a, bool fit_bass) {
  std::vector<std::pair<Param, std::vector<double>>> axes{{Param::k, {2.0, 5.0, 10.0, 20.0, 40.0, 80.0}}};
  if (fit_delay) axes.push_back({Param::delta_t0, {0.0, 1.0, 3.0, 6.0}});
  if (fit_a) axes.push_back({Param::a, {0.05, 0.1, 0.2, 0.4}});
  if (fit_bass) {
    axes.push_back({Param::n_B0, {0.02, 0.1, 0.25}});
    axes.push_back({Param::A, {0.003, 0.03}});
    axes.push_back({Param::B, {0.5, 2.0}});
  }
  auto out = expand(base, axes);
  for (auto& m : out) m.set(Param::n_G0, std::clamp(top - m.get(Param::n_B0), 0.01, 1.0));
  return out;
}

std::vector<Coord> gompertz_coords(double span, bool fit_delay, bool fit_a, bool fit_bass) {
  std::vector<Coord> c{coord(Param::n_G0, 1e-4, 1.0), coord(Param::k, 0.1, 200.0, true)};
  if (fit_delay) c.push_back(coord(Param::delta_t0, 0.0, std::min(20.0, span)));
  if (fit_a) c.push_back(coord(Param::a, 1e-3, 2.0, true));
  if (fit_bass) {
    c.push_back(coord(Param::n_B0, 0.0, 1.0));
    c.push_back(coord(Param::A, 1e-5, 1.0, true));
    c.push_back(coord(Param::B, 0.0, 10.0));
  }
  return c;
}

}  // namespace

namespace {

struct GompertzRun {
  std::vector<StageOutcome> optima;  // distinct refined optima, best first
  std::size_t evals = 0;
};

GompertzRun gompertz_optima(const Dataset& penetration, std::optional<double> a_fixed,
                            const GompertzFitOptions& gopt, const FitOptions& opt, std::size_t n_optima) {
  const SalesSeries& s = penetration.series;
  if (s.size() < 4) throw InvalidInputError("Gompertz fit needs at least 4 samples");
  penetration.validate();
  if (a_fixed && !(*a_fixed > 0.0)) throw InvalidParameterError("fixed decline rate must be positive");
  if (!(gopt.delay >= 0.0)) throw InvalidParameterError("delay must be non-negative");
  const auto cleaned = monotone_clean(s.values);
  const double origin = gopt.origin.value_or(s.t0);
  std::vector<double> times(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) times[i] = s.time(i) - origin;

  PlcModel base;
  base.name = "gompertz";
  base.set(Param::t0, origin);
  base.set(Param::delta_t0, gopt.fit_delay ? 0.0 : gopt.delay);
  base.set(Param::a, a_fixed.value_or(0.1));
  base.set(Param::k, 1.0);
  base.set(Param::n_G0, 0.5);
  const bool fit_bass = gopt.fit_bass;
  if (gopt.bass || fit_bass) {
    const BassParams b = gopt.bass.value_or(BassParams{0.01, 1.0, 0.1});
    b.validate();
    base.set(Param::n_B0, b.initial_pool);
    base.set(Param::A, b.innovation);
    base.set(Param::B, b.imitation);
  }

  Stage st;
  st.name = "penetration";
  st.base = base;
  st.coords = gompertz_coords(times.back(), gopt.fit_delay, !a_fixed, fit_bass);
  st.loss = [&](const PlcModel& m) {
    double acc = 0.0;
    for (std::size_t i = 0; i < times.size(); ++i) {
      const double r = cleaned[i] - penetration_model(m, times[i]);
      acc += r * r;
    }
    return acc;
  };
  const double top = *std::max_element(cleaned.begin(), cleaned.end());
  const auto all = refine_all(st, gompertz_candidates(base, top, gopt.fit_delay, !a_fixed, fit_bass), opt);
  return {distinct(st, all, n_optima), total_evals(all)};
}

}  // namespace

FitResult fit_gompertz(const Dataset& penetration, std::optional<double> a_fixed, const GompertzFitOptions& gopt,
                       const FitOptions& opt) {
  const GompertzRun run = gompertz_optima(penetration, a_fixed, gopt, opt, 1);
  const StageOutcome& out = run.optima.front();
  FitResult r;
  r.parameters = out.model;
  r.loss = out.loss;
  r.n_evals = run.evals;
  r.converged = out.converged;
  r.stages.push_back({"penetration", out.loss, run.evals, out.converged});
  if (!r.converged) r.notes.push_back("simplex budget exhausted before tolerance");
  return r;
}

namespace {

// Free parameters of the sales stage and the polish.
bool is_diffusion_shape(Param p) {
  return p == Param::n_G0 || p == Param::k || p == Param::delta_t0 || p == Param::a || p == Param::pm_over_p0;
}

Coord sales_coord(Param p, double span, double dt) {
  const double life_lo = std::max(1.0, 2.0 * dt);
  const double life_hi = std::max(life_lo + 1.0, std::min(30.0, span));
  switch (p) {
    case Param::A: return coord(p, 1e-5, 1.0, true);
    case Param::B: return coord(p, 0.0, 10.0);
    case Param::n_B0: return coord(p, 0.0, 1.0);
    case Param::n_G0: return coord(p, 1e-4, 1.0);
    case Param::k: return coord(p, 0.1, 200.0, true);
    case Param::a: return coord(p, 1e-3, 2.0, true);
    case Param::delta_t0: return coord(p, 0.0, std::min(20.0, span));
    case Param::pm_over_p0: return coord(p, 0.0, 0.99);
    case Param::R:
    case Param::R_g: return coord(p, 0.0, 2.0);
    case Param::Q:
    case Param::Q_g: return coord(p, 0.0, 1.0);
    case Param::t_p:
    case Param::t_p_g: return coord(p, life_lo, life_hi);
    default: break;
  }
  throw InvalidParameterError(std::string("parameter ") + param_info(p).key + " is not fitted");
}

// Price shape r + (1 - r) e^{-a t} against a price series with the level
// profiled out, so a noisy first sample does not set the scale.
double price_shape_loss(const SalesSeries& p, double r, double a) {
  double pg = 0.0, gg = 0.0;
  std::vector<double> g(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    g[i] = r + (1.0 - r) * std::exp(-a * p.elapsed(i));
    pg += p.values[i] * g[i];
    gg += g[i] * g[i];
  }
  const double level = pg / gg;
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double e = p.values[i] / level - g[i];
    acc += e * e;
  }
  return acc;
}

// Floor ratio for a given rate: linear least squares of p = c1 + c2 e^{-a t}
// with c1 >= 0.
double price_floor_for(const SalesSeries& p, double a) {
  double n = 0.0, se = 0.0, see = 0.0, sp = 0.0, spe = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double e = std::exp(-a * p.elapsed(i));
    n += 1.0;
    se += e;
    see += e * e;
    sp += p.values[i];
    spe += p.values[i] * e;
  }
  const double det = n * see - se * se;
  double c1 = det > 0.0 ? (sp * see - se * spe) / det : 0.0;
  double c2 = det > 0.0 ? (n * spe - se * sp) / det : spe / see;
  if (c1 < 0.0) {
    c1 = 0.0;
    c2 = spe / see;
  }
  if (!(c2 > 0.0)) return 0.0;
  return std::clamp(c1 / (c1 + c2), 0.0, param_info(Param::pm_over_p0).upper);
}

// Refines a log-linear price fit in price space. The log transform blows up
// the noise of samples close to the floor.
std::pair<double, double> refine_price(const SalesSeries& p, double r0, double a0, std::size_t& evals) {
  auto profile = [&](double log_a) {
    ++evals;
    const double a = std::exp(log_a);
    return price_shape_loss(p, price_floor_for(p, a), a);
  };
  const double lo = std::log(1e-3), hi = std::log(2.0);
  const int n_grid = 60;
  double best_x = lo, best_f = kInf;
  for (int i = 0; i <= n_grid; ++i) {
    const double x = lo + (hi - lo) * i / n_grid;
    const double f = profile(x);
    if (f < best_f) {
      best_f = f;
      best_x = x;
    }
  }
  const double step = (hi - lo) / n_grid;
  std::uintmax_t iters = 200;
  const auto [x, f] = boost::math::tools::brent_find_minima(profile, std::max(lo, best_x - step),
                                                            std::min(hi, best_x + step), 52, iters);
  const double a = std::exp(x);
  const double r = price_floor_for(p, a);
  if (a0 > 0.0 && price_shape_loss(p, r0, a0) <= f) return {r0, a0};
  return {r, a};
}

}  // namespace

FitResult fit_price_curve(const Dataset& prices, const FitOptions& opt) {
  FitResult out = fit_price_decline(prices, default_pm_grid(), opt);
  if (!out.converged) return out;
  std::size_t evals = 0;
  const auto [r, a] = refine_price(prices.series, out.parameters.get(Param::pm_over_p0),
                                   out.parameters.get(Param::a), evals);
  out.parameters.set(Param::pm_over_p0, r);
  out.parameters.set(Param::a, a);
  out.loss = price_shape_loss(prices.series, r, a);
  out.n_evals += evals;
  out.stages.push_back({"price_ls", out.loss, evals, true});
  return out;
}

FitResult fit_plc(const Dataset& sales, const PlcModel& prior, const PlcFitData& extra, const FitOptions& opt) {
  const SalesSeries& s = sales.series;
  sales.validate();
  if (s.empty() || std::all_of(s.values.begin(), s.values.end(), [](double v) { return v == 0.0; }))
    throw DegenerateSeriesError("sales series is empty or identically zero");
  const double t0 = prior.has(Param::t0) ? prior.get(Param::t0) : s.t0;
  const double span = s.time(s.size() - 1) - t0;
  double needed = 0.0;
  if (prior.get(Param::R) > 0.0 && prior.has(Param::t_p)) needed = std::max(needed, prior.get(Param::t_p));
  if (prior.get(Param::R_g) > 0.0 && prior.has(Param::t_p_g)) needed = std::max(needed, prior.get(Param::t_p_g));
  if ((prior.has(Param::R) || prior.has(Param::R_g)) && needed == 0.0) needed = 1.0;
  if (s.size() < 4 || span < needed)
    throw HorizonError("sales cover " + std::to_string(span) + " years; at least " + std::to_string(needed) +
                       " needed for one product lifetime");
  if (!prior.has_bass() && !prior.has_gompertz()) throw InvalidParameterError("prior needs n_B0 or n_G0 active");

  const bool counts = sales.units == DataUnits::count;
  const Aligned sales_data = align(s, t0);
  const std::size_t n_model = sales_data.offset + s.size();

  FitResult result;
  PlcModel model = prior;
  model.set(Param::t0, t0);
  if (!counts && !model.has(Param::M)) model.set(Param::M, 1.0);

  // Free set: every active entry except t0 and M; n_B0 only alongside a
  // Gompertz branch (on its own it is the normalisation).
  std::vector<Param> free;
  for (Param p : all_params()) {
    if (!prior.has(p) || p == Param::t0 || p == Param::M) continue;
    if (p == Param::n_B0 && !prior.has_gompertz()) continue;
    free.push_back(p);
  }
  auto is_free = [&](Param p) { return std::find(free.begin(), free.end(), p) != free.end(); };
  // Neutral starting values for the free entries.
  for (Param p : free) {
    const Coord c = sales_coord(p, span, s.dt);
    model.set(p, c.log ? std::sqrt(c.lo * c.hi) : 0.5 * (c.lo + c.hi));
  }
  if (is_free(Param::delta_t0)) model.set(Param::delta_t0, 0.0);
  if (is_free(Param::pm_over_p0)) model.set(Param::pm_over_p0, 0.0);

  auto sales_loss = [&](const PlcModel& m) {
    const auto total = assemble_plc(m, s.dt, n_model).total.values;
    if (!counts) return ssr(total, sales_data.offset, sales_data.values);
    return ssr(total, sales_data.offset, sales_data.values, best_scale(total, sales_data.offset, sales_data.values));
  };

  // Price stage.
  std::optional<SalesSeries> price_fn;
  bool price_done = false;
  if (extra.price && prior.has_gompertz()) {
    const FitResult pf = fit_price_curve(*extra.price, opt);
    result.stages.insert(result.stages.end(), pf.stages.begin(), pf.stages.end());
    result.n_evals += pf.n_evals;
    if (pf.converged) {
      model.set(Param::a, pf.parameters.get(Param::a));
      if (model.has(Param::pm_over_p0)) model.set(Param::pm_over_p0, pf.parameters.get(Param::pm_over_p0));
      price_done = true;
    }
    price_fn = extra.price->series;
  }
  auto price_loss = [&](const PlcModel& m) {
    if (!price_fn) return 0.0;
    return price_shape_loss(*price_fn, m.has(Param::pm_over_p0) ? m.get(Param::pm_over_p0) : 0.0, m.get(Param::a));
  };

  // The price series starts when the product reaches the market, so its
  // offset from t0 is the Gompertz delay (the penetration alone only fixes
  // k e^{2 a delta_t0}).
  if (price_fn && is_free(Param::delta_t0)) {
    model.set(Param::delta_t0, std::max(0.0, price_fn->t0 - t0));
    free.erase(std::find(free.begin(), free.end(), Param::delta_t0));
    result.notes.push_back("delta_t0 taken from the start of the price series");
  }

  // Penetration stage. Noisy penetration can be matched by several Bass and
  // Gompertz splits; the distinct optima all go on to the sales stage.
  std::optional<Aligned> pen_data;
  bool pen_done = false;
  std::vector<PlcModel> starts{model};
  if (extra.penetration && prior.has_gompertz()) {
    extra.penetration->validate();
    Aligned al = align(extra.penetration->series, t0);
    al.values = monotone_clean(al.values);
    pen_data = std::move(al);
    GompertzFitOptions g;
    g.origin = t0;
    g.fit_bass = prior.has_bass();
    g.fit_delay = is_free(Param::delta_t0);
    g.delay = model.get(Param::delta_t0);
    std::optional<double> a_fixed;
    if (price_done) a_fixed = model.get(Param::a);
    const GompertzRun gr = gompertz_optima(*extra.penetration, a_fixed, g, opt, 4);
    result.stages.push_back({"penetration", gr.optima.front().loss, gr.evals, gr.optima.front().converged});
    result.n_evals += gr.evals;
    starts.clear();
    for (const auto& o : gr.optima) {
      PlcModel m = model;
      for (Param p : {Param::n_G0, Param::k, Param::delta_t0, Param::a, Param::n_B0, Param::A, Param::B})
        if (is_free(p) && o.model.has(p)) m.set(p, o.model.get(p));
      starts.push_back(std::move(m));
    }
    pen_done = true;
  }
  auto pen_loss = [&](const PlcModel& m) {
    if (!pen_data) return 0.0;
    const auto pen = assemble_plc(m, pen_data->dt, pen_data->offset + pen_data->values.size()).penetration.values;
    return ssr(pen, pen_data->offset, pen_data->values);
  };
  auto joint_loss = [&](const PlcModel& m) { return sales_loss(m) + pen_loss(m) + price_loss(m); };

  // Sales stage: repurchase channels, plus the diffusion shape when no
  // penetration data supplied it. Run once per penetration optimum.
  std::vector<std::pair<double, PlcModel>> sales_fits;
  {
    Stage st;
    st.name = "sales";
    std::vector<std::pair<Param, std::vector<double>>> axes;
    const double life_lo = std::max(1.0, 2.0 * s.dt);
    const double life_hi = std::min(30.0, span);
    for (Param p : free) {
      if (pen_done && (is_diffusion_shape(p) || p == Param::n_B0 || p == Param::A || p == Param::B)) continue;
      if (price_done && (p == Param::a || p == Param::pm_over_p0)) continue;
      if (p == Param::pm_over_p0) continue;  // sales do not see the price floor
      st.coords.push_back(sales_coord(p, span, s.dt));
      switch (p) {
        case Param::A: axes.push_back({p, {0.002, 0.01, 0.05}}); break;
        case Param::B: axes.push_back({p, {0.3, 1.0, 3.0}}); break;
        case Param::t_p:
        case Param::t_p_g: axes.push_back({p, lifetime_axis(life_lo, life_hi)}); break;
        case Param::R:
        case Param::R_g: axes.push_back({p, pen_done || !prior.has_gompertz() ? std::vector<double>{0.3, 1.0}
                                                                            : std::vector<double>{0.5}}); break;
        case Param::Q:
        case Param::Q_g: axes.push_back({p, pen_done || !prior.has_gompertz() ? std::vector<double>{0.02, 0.1}
                                                                            : std::vector<double>{0.05}}); break;
        case Param::k: axes.push_back({p, {3.0, 10.0, 30.0}}); break;
        case Param::a: axes.push_back({p, {0.1, 0.25}}); break;
        case Param::delta_t0: axes.push_back({p, {0.0, 3.0}}); break;
        case Param::n_G0: axes.push_back({p, {0.5}}); break;
        case Param::n_B0: axes.push_back({p, {0.1, 0.5}}); break;
        default: break;
      }
    }
    st.loss = sales_loss;
    StageLoss info{"sales", kInf, 0, true};
    for (const PlcModel& start : starts) {
      PlcModel m = start;
      if (!st.coords.empty()) {
        st.base = start;
        const auto out = run_stage(st, expand(start, axes), opt);
        m = out.model;
        info.evals += out.evals;
        if (out.loss < info.loss) {
          info.loss = out.loss;
          info.converged = out.converged;
        }
      }
      sales_fits.emplace_back(joint_loss(m), std::move(m));
      ++info.evals;
    }
    if (!st.coords.empty()) result.stages.push_back(info);
    result.n_evals += info.evals;
  }
  std::stable_sort(sales_fits.begin(), sales_fits.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });

  // Joint polish over every free entry, from the two best sales fits.
  {
    Stage st;
    st.name = "joint";
    st.base = sales_fits.front().second;
    for (Param p : free) st.coords.push_back(sales_coord(p, span, s.dt));
    st.loss = joint_loss;
    std::vector<PlcModel> polish_from;
    for (std::size_t i = 0; i < std::min<std::size_t>(2, sales_fits.size()); ++i)
      polish_from.push_back(sales_fits[i].second);
    FitOptions polish = opt;
    polish.keep = polish_from.size();
    const auto out = run_stage(st, polish_from, polish);
    model = out.model;
    result.stages.push_back({"joint", out.loss, out.evals, out.converged});
    result.n_evals += out.evals;
    result.loss = out.loss;
    result.converged = out.converged;
  }

  if (counts) {
    const auto total = assemble_plc(model, s.dt, n_model).total.values;
    model.set(Param::M, best_scale(total, sales_data.offset, sales_data.values));
  }
  result.parameters = model;
  if (!result.converged) result.notes.push_back("simplex budget exhausted before tolerance");
  return result;
}

}  // namespace plc
