#include "plc/competition.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <numeric>
#include <string>

#include <boost/math/distributions/normal.hpp>

#include "plc/error.hpp"

namespace plc {

namespace {

constexpr double kStabilityBound = 0.1;

double weighted_mean(const std::vector<double>& w, const std::vector<BrandState>& b) {
  double sw = 0.0, acc = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    sw += w[i];
    acc += w[i] * b[i].price;
  }
  return acc / sw;
}

std::vector<double> sales_of(const std::vector<BrandState>& b) {
  std::vector<double> y(b.size());
  for (std::size_t i = 0; i < b.size(); ++i) y[i] = b[i].sales;
  return y;
}

double mean_of(const std::vector<double>& f, const std::vector<double>& y) {
  double sy = 0.0, acc = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    sy += y[i];
    acc += f[i] * y[i];
  }
  return acc / sy;
}

}  // namespace

void MarketState::validate() const {
  if (brands.empty()) throw InvalidParameterError("market needs at least one brand");
  volume.validate();
  for (const auto& b : brands) {
    if (!(b.price >= 0.0) || !std::isfinite(b.price)) throw InvalidParameterError("brand price must be non-negative");
    if (!(b.preference > 0.0)) throw InvalidParameterError("brand preference eta must be positive");
    if (!std::isfinite(b.reproduction)) throw InvalidParameterError("brand reproduction gamma must be finite");
    if (!(b.stock >= 0.0)) throw InvalidParameterError("brand stock must be non-negative");
    if (!(b.sales >= 0.0)) throw InvalidParameterError("brand sales must be non-negative");
  }
  if (!(consumer_pool >= 0.0)) throw InvalidParameterError("consumer pool must be non-negative");
  if (!(repurchase_rate >= 0.0)) throw InvalidParameterError("repurchase rate q must be non-negative");
  if (!(epsilon > 0.0)) throw InvalidParameterError("time-scale factor epsilon must be positive");
}

double MarketState::total_sales() const {
  double s = 0.0;
  for (const auto& b : brands) s += b.sales;
  return s;
}

std::vector<double> MarketState::shares() const {
  const double yt = total_sales();
  std::vector<double> m(brands.size());
  for (std::size_t i = 0; i < brands.size(); ++i) m[i] = brands[i].sales / yt;
  return m;
}

double MarketState::mean_price() const { return weighted_mean(sales_of(brands), brands); }

double MarketState::price_variance() const {
  const double mu = mean_price();
  const double yt = total_sales();
  double acc = 0.0;
  for (const auto& b : brands) acc += b.sales * (b.price - mu) * (b.price - mu);
  return acc / yt;
}

double MarketState::pool_scale() const {
  double s = 0.0;
  for (const auto& b : brands) s += b.preference * b.stock;
  if (!(s > 0.0)) throw InvalidInputError("pool scale needs positive stocks");
  return repurchase_rate / s;
}

double MarketState::mean_selection_strength() const {
  const double psi0 = pool_scale();
  const double yt = total_sales();
  double acc = 0.0;
  for (const auto& b : brands) acc += b.sales * b.preference * b.reproduction * psi0;
  return acc / yt;
}

double fitness(const BrandState& brand, const MarketVolumeParams& mv, double psi0) {
  return brand.preference * brand.reproduction * psi0 * volume_density(brand.price, mv);
}

std::vector<double> fitnesses(const MarketState& state) {
  const double psi0 = state.pool_scale();
  std::vector<double> f(state.brands.size());
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = fitness(state.brands[i], state.volume, psi0);
  return f;
}

double mean_fitness(const MarketState& state) { return mean_of(fitnesses(state), sales_of(state.brands)); }

MarketState replicator_step(const MarketState& state, double dtau) {
  state.validate();
  require_positive_dt(dtau);
  const double yt = state.total_sales();
  if (!(yt > 0.0)) throw InvalidInputError("replicator step needs positive total sales");

  const auto f = fitnesses(state);
  const auto y = sales_of(state.brands);
  const double fbar = mean_of(f, y);
  double spread = 0.0;
  for (double fi : f) spread = std::max(spread, std::abs(fi - fbar));
  if (dtau * spread >= kStabilityBound) {
    throw StepSizeError("replicator step " + std::to_string(dtau) + " exceeds stability bound (max|f-<f>| = " +
                        std::to_string(spread) + ")");
  }

  std::vector<double> mid(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) mid[i] = y[i] + 0.5 * dtau * (f[i] - fbar) * y[i];
  const double fmid = mean_of(f, mid);

  MarketState next = state;
  double total = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    next.brands[i].sales = y[i] + dtau * (f[i] - fmid) * mid[i];
    total += next.brands[i].sales;
  }
  const double scale = yt / total;
  for (auto& b : next.brands) b.sales *= scale;
  next.clock = state.clock + dtau;
  return next;
}

namespace {

struct MicroRates {
  std::vector<double> dstock;
  double dpool = 0.0;
};

// Sales y_i = eta_i x_i psi v(mu_i) for given stocks and pool.
std::vector<double> micro_sales(const MarketState& s, const std::vector<double>& stock, double pool) {
  std::vector<double> y(stock.size());
  for (std::size_t i = 0; i < y.size(); ++i)
    y[i] = s.brands[i].preference * stock[i] * pool * volume_density(s.brands[i].price, s.volume);
  return y;
}

MicroRates micro_rates(const MarketState& s, const std::vector<double>& stock, double pool) {
  const auto y = micro_sales(s, stock, pool);
  // Weights eta x v equal y/psi and stay defined when the pool is empty.
  std::vector<double> w(stock.size());
  double wsum = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = s.brands[i].preference * stock[i] * volume_density(s.brands[i].price, s.volume);
    wsum += w[i];
  }
  const double mu = wsum > 0.0 ? weighted_mean(w, s.brands) : s.brands.front().price;
  MicroRates r;
  r.dstock.resize(stock.size());
  double yt = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    r.dstock[i] = s.brands[i].reproduction * y[i];
    yt += y[i];
  }
  r.dpool = s.repurchase_rate * volume_density(mu, s.volume) - yt;
  return r;
}

bool micro_try(const MarketState& s, std::vector<double>& stock, double& pool, double h) {
  const auto k1 = micro_rates(s, stock, pool);
  std::vector<double> xm(stock.size());
  for (std::size_t i = 0; i < xm.size(); ++i) xm[i] = stock[i] + 0.5 * h * k1.dstock[i];
  const double pm = pool + 0.5 * h * k1.dpool;
  if (pm < 0.0 || std::any_of(xm.begin(), xm.end(), [](double v) { return v < 0.0; })) return false;
  const auto k2 = micro_rates(s, xm, pm);
  std::vector<double> xn(stock.size());
  for (std::size_t i = 0; i < xn.size(); ++i) xn[i] = stock[i] + h * k2.dstock[i];
  const double pn = pool + h * k2.dpool;
  if (pn < 0.0 || std::any_of(xn.begin(), xn.end(), [](double v) { return v < 0.0; })) return false;
  stock = std::move(xn);
  pool = pn;
  return true;
}

void micro_advance(const MarketState& s, std::vector<double>& stock, double& pool, double h, int depth) {
  auto x = stock;
  double p = pool;
  if (micro_try(s, x, p, h)) {
    stock = std::move(x);
    pool = p;
    return;
  }
  if (depth >= 20) throw StepSizeError("micro step cannot keep stocks and pool non-negative");
  micro_advance(s, stock, pool, 0.5 * h, depth + 1);
  micro_advance(s, stock, pool, 0.5 * h, depth + 1);
}

}  // namespace

MarketState micro_step(const MarketState& state, double dtau) {
  state.validate();
  require_positive_dt(dtau);
  std::vector<double> stock(state.brands.size());
  for (std::size_t i = 0; i < stock.size(); ++i) stock[i] = state.brands[i].stock;
  double pool = state.consumer_pool;
  micro_advance(state, stock, pool, dtau, 0);

  MarketState next = state;
  const auto y = micro_sales(state, stock, pool);
  for (std::size_t i = 0; i < stock.size(); ++i) {
    next.brands[i].stock = stock[i];
    next.brands[i].sales = y[i];
  }
  next.consumer_pool = pool;
  next.clock = state.clock + dtau;
  return next;
}

void JumpSettings::validate() const {
  if (!(rate >= 0.0)) throw InvalidParameterError("jump rate must be non-negative");
  if (!(price_magnitude >= 0.0) || !(preference_magnitude >= 0.0) || !(reproduction_magnitude >= 0.0))
    throw InvalidParameterError("jump magnitudes must be non-negative");
}

void apply_jumps(MarketState& state, const JumpSettings& jumps, double dtau, std::mt19937_64& rng) {
  jumps.validate();
  if (jumps.rate == 0.0) return;
  std::poisson_distribution<int> count(jumps.rate * dtau);
  std::normal_distribution<double> z(0.0, 1.0);
  auto factor = [&](double s) { return s > 0.0 ? std::exp(s * z(rng) - 0.5 * s * s) : 1.0; };
  for (auto& b : state.brands) {
    for (int k = count(rng); k > 0; --k) {
      b.price *= factor(jumps.price_magnitude);
      b.preference *= factor(jumps.preference_magnitude);
      b.reproduction *= factor(jumps.reproduction_magnitude);
    }
  }
}

double jump_equilibrium_variance(const MarketVolumeParams& mv, double selection_strength, const JumpSettings& jumps,
                                 double price_level) {
  mv.validate();
  jumps.validate();
  if (!(selection_strength > 0.0)) throw InvalidParameterError("selection strength must be positive");
  const double step = jumps.price_magnitude * price_level;
  return std::sqrt(jumps.rate * step * step * mv.width * mv.width / (selection_strength * mv.lower_fraction()));
}

std::vector<BrandState> gaussian_brands(std::size_t n, double mean, double variance, double preference,
                                        double reproduction, double stock, double total_sales) {
  if (n == 0) throw InvalidParameterError("need at least one brand");
  if (!(variance >= 0.0)) throw InvalidParameterError("price variance must be non-negative");
  const boost::math::normal_distribution<double> unit;
  std::vector<double> z(n, 0.0);
  if (n > 1) {
    for (std::size_t i = 0; i < n; ++i) z[i] = boost::math::quantile(unit, (static_cast<double>(i) + 0.5) / static_cast<double>(n));
    const double zm = std::accumulate(z.begin(), z.end(), 0.0) / static_cast<double>(n);
    double zv = 0.0;
    for (double& v : z) {
      v -= zm;
      zv += v * v;
    }
    zv /= static_cast<double>(n);
    for (double& v : z) v /= std::sqrt(zv);
  }
  std::vector<BrandState> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = BrandState{mean + std::sqrt(variance) * z[i], preference, reproduction, stock,
                        total_sales / static_cast<double>(n)};
  }
  return out;
}

void PriceHistogram::validate() const {
  if (masses.empty() || bin_edges.size() != masses.size() + 1)
    throw InvalidParameterError("histogram needs n masses and n+1 edges");
  for (std::size_t i = 1; i < bin_edges.size(); ++i)
    if (!(bin_edges[i] > bin_edges[i - 1])) throw InvalidParameterError("histogram edges must increase");
  for (double m : masses)
    if (!(m >= 0.0)) throw InvalidParameterError("histogram masses must be non-negative");
  if (std::abs(total_mass() - 1.0) > 1e-9) throw InvalidParameterError("histogram masses must sum to 1");
}

double PriceHistogram::total_mass() const { return std::accumulate(masses.begin(), masses.end(), 0.0); }

double PriceHistogram::mean() const {
  double acc = 0.0;
  for (std::size_t i = 0; i < masses.size(); ++i) acc += masses[i] * center(i);
  return acc / total_mass();
}

double PriceHistogram::variance() const {
  const double mu = mean();
  double acc = 0.0;
  for (std::size_t i = 0; i < masses.size(); ++i) acc += masses[i] * (center(i) - mu) * (center(i) - mu);
  return acc / total_mass();
}

PriceHistogram PriceHistogram::gaussian(double mean, double variance, std::size_t bins, double half_width) {
  if (bins == 0 || !(variance > 0.0) || !(half_width > 0.0)) throw InvalidParameterError("invalid Gaussian histogram");
  const boost::math::normal_distribution<double> dist(mean, std::sqrt(variance));
  PriceHistogram h;
  h.bin_edges.resize(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i)
    h.bin_edges[i] = mean - half_width + 2.0 * half_width * static_cast<double>(i) / static_cast<double>(bins);
  h.masses.resize(bins);
  double total = 0.0;
  for (std::size_t i = 0; i < bins; ++i) {
    h.masses[i] = boost::math::cdf(dist, h.bin_edges[i + 1]) - boost::math::cdf(dist, h.bin_edges[i]);
    total += h.masses[i];
  }
  for (double& m : h.masses) m /= total;
  return h;
}

PriceHistogram price_histogram_step(const PriceHistogram& h, const MarketVolumeParams& mv, double selection_strength,
                                    double dtau) {
  h.validate();
  require_positive_dt(dtau);
  std::vector<double> f(h.masses.size());
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = selection_strength * volume_density(h.center(i), mv);
  const double fbar = mean_of(f, h.masses);
  double spread = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i)
    if (h.masses[i] > 0.0) spread = std::max(spread, std::abs(f[i] - fbar));
  if (dtau * spread >= kStabilityBound) throw StepSizeError("histogram step exceeds stability bound");

  std::vector<double> mid(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) mid[i] = h.masses[i] + 0.5 * dtau * (f[i] - fbar) * h.masses[i];
  const double fmid = mean_of(f, mid);
  PriceHistogram next = h;
  for (std::size_t i = 0; i < f.size(); ++i) next.masses[i] = h.masses[i] + dtau * (f[i] - fmid) * mid[i];
  return next;
}

double price_decline_rate(const MarketVolumeParams& mv, const SelectionContext& ctx) {
  mv.validate();
  if (!(ctx.variance >= 0.0)) throw InvalidParameterError("price variance must be non-negative");
  if (!(ctx.epsilon > 0.0)) throw InvalidParameterError("epsilon must be positive");
  // Rate per tau-unit, converted to the long scale t = epsilon tau.
  return ctx.selection_strength * mv.lower_fraction() * ctx.variance / (mv.width * mv.width) / ctx.epsilon;
}

SalesSeries mean_price_ode(double mu_init, const MarketVolumeParams& mv, const SelectionContext& ctx, double t0,
                           double dt, std::size_t n) {
  require_positive_dt(dt);
  const double a = price_decline_rate(mv, ctx);
  const double floor = mv.natural_price;
  auto rhs = [&](double mu) { return -a * (mu - floor); };
  const int sub = std::max(1, static_cast<int>(std::ceil(a * dt / 0.002)));
  const double h = dt / sub;
  SalesSeries out{t0, dt, {}};
  out.values.reserve(n);
  double mu = mu_init;
  for (std::size_t i = 0; i < n; ++i) {
    out.values.push_back(mu);
    for (int s = 0; s < sub; ++s) {
      const double k1 = rhs(mu);
      const double k2 = rhs(mu + 0.5 * h * k1);
      const double k3 = rhs(mu + 0.5 * h * k2);
      const double k4 = rhs(mu + h * k3);
      mu += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
  }
  return out;
}

std::vector<double> fisher_pry(const std::vector<double>& times, double theta, double offset) {
  std::vector<double> m(times.size());
  for (std::size_t i = 0; i < times.size(); ++i) m[i] = 1.0 / (1.0 + std::exp(-theta * times[i] - offset));
  return m;
}

std::vector<double> fisher_pry_ode(const std::vector<double>& times, double theta, double initial_share) {
  if (!(initial_share > 0.0 && initial_share < 1.0)) throw InvalidParameterError("initial share must lie in (0, 1)");
  auto rhs = [theta](double m) { return theta * m * (1.0 - m); };
  std::vector<double> out;
  out.reserve(times.size());
  double m = initial_share;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (i > 0) {
      const double span = times[i] - times[i - 1];
      const int sub = std::max(1, static_cast<int>(std::ceil(std::abs(theta * span) / 0.001)));
      const double h = span / sub;
      for (int s = 0; s < sub; ++s) {
        const double k1 = rhs(m);
        const double k2 = rhs(m + 0.5 * h * k1);
        const double k3 = rhs(m + 0.5 * h * k2);
        const double k4 = rhs(m + h * k3);
        m += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      }
    }
    out.push_back(m);
  }
  return out;
}

double fitness_advantage(double f1, double f2, double epsilon) {
  if (!(epsilon > 0.0)) throw InvalidParameterError("epsilon must be positive");
  return (f1 - f2) / epsilon;
}

namespace {

void record(CompetitionRun& run, const MarketState& s, bool brands) {
  const double t = s.epsilon * s.clock;
  run.time.push_back(t);
  run.mean_price.push_back(s.mean_price());
  run.price_variance.push_back(s.price_variance());
  if (!brands) return;
  const auto m = s.shares();
  for (std::size_t i = 0; i < s.brands.size(); ++i)
    run.rows.push_back({t, i, m[i], s.brands[i].price, s.brands[i].sales});
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

}  // namespace

CompetitionRun simulate_competition(const CompetitionConfig& cfg) {
  cfg.initial.validate();
  if (cfg.jumps_enabled) cfg.jumps.validate();
  const std::size_t every = std::max<std::size_t>(1, cfg.record_every);
  std::mt19937_64 rng(cfg.seed);
  CompetitionRun run;
  MarketState s = cfg.initial;
  record(run, s, cfg.record_brands);
  for (std::size_t step = 1; step <= cfg.steps; ++step) {
    s = cfg.micro ? micro_step(s, cfg.dtau) : replicator_step(s, cfg.dtau);
    if (cfg.jumps_enabled) apply_jumps(s, cfg.jumps, cfg.dtau, rng);
    if (step % every == 0 || step == cfg.steps) record(run, s, cfg.record_brands);
  }
  run.final_state = std::move(s);
  return run;
}

std::vector<CompetitionRun> simulate_ensemble(const CompetitionConfig& cfg, std::size_t runs) {
  std::vector<std::future<CompetitionRun>> pending;
  pending.reserve(runs);
  for (std::size_t r = 0; r < runs; ++r) {
    CompetitionConfig c = cfg;
    c.seed = derive_seed(cfg.seed, r);
    pending.push_back(std::async(std::launch::async, [c] { return simulate_competition(c); }));
  }
  std::vector<CompetitionRun> out;
  out.reserve(runs);
  for (auto& p : pending) out.push_back(p.get());
  return out;
}

}  // namespace plc
