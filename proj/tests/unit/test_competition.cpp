#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "plc/competition.hpp"
#include "plc/error.hpp"

using namespace plc;

namespace {

// Scale of the calibrated price cloud: mu_m and Theta from the B&W price floor.
const double kFloor = 0.33;
const double kTheta = 0.67 / std::sqrt(17.0);

MarketVolumeParams bw_volume() { return MarketVolumeParams::from_fractions(0.9, kFloor, kTheta); }

// Two brands at the natural price with f_1 - f_2 = 0.5.
MarketState two_brand(double m1) {
  MarketState s;
  s.volume = MarketVolumeParams::from_fractions(1.0, 0.5, 0.1);
  s.repurchase_rate = 1.0;  // psi0 = 1 / (1 + 1) = 0.5
  s.brands = {{0.5, 1.0, 1.2, 1.0, m1}, {0.5, 1.0, 0.2, 1.0, 1.0 - m1}};
  return s;
}

double total(const MarketState& s) { return s.total_sales(); }

}  // namespace

TEST_SUITE("competition") {
  TEST_CASE("fitness examples") {
    const auto mv = MarketVolumeParams::from_fractions(1.0, 0.3, 0.2);
    CHECK(fitness({0.5, 1.0, 0.0, 1.0, 1.0}, mv, 2.0) == 0.0);
    CHECK(fitness({0.3, 1.5, 0.4, 1.0, 1.0}, mv, 2.0) == doctest::Approx(1.5 * 0.4 * 2.0).epsilon(1e-15));
    const double f = fitness({0.5, 1.0, 0.05, 1.0, 1.0}, mv, 1.0);
    CHECK(f == doctest::Approx(0.05 * std::exp(-0.5)).epsilon(1e-14));
    CHECK(f == doctest::Approx(0.03033).epsilon(1e-4));
  }

  TEST_CASE("pool scale and mean selection strength") {
    MarketState s = two_brand(0.25);
    CHECK(s.pool_scale() == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(s.mean_selection_strength() == doctest::Approx(0.25 * 0.6 + 0.75 * 0.1).epsilon(1e-14));
    CHECK(mean_fitness(s) == doctest::Approx(0.25 * 0.6 + 0.75 * 0.1).epsilon(1e-14));
  }

  TEST_CASE("equal fitness leaves the state unchanged") {
    MarketState s;
    s.volume = MarketVolumeParams::from_fractions(0.8, 0.3, 0.2);
    s.repurchase_rate = 0.5;
    s.brands = {{0.4, 1.0, 0.1, 1.0, 0.2}, {0.4, 1.0, 0.1, 1.0, 0.5}, {0.4, 1.0, 0.1, 1.0, 0.3}};
    const MarketState n = replicator_step(s, 1.0);
    for (std::size_t i = 0; i < 3; ++i) CHECK(n.brands[i].sales == doctest::Approx(s.brands[i].sales).epsilon(1e-15));
    CHECK(n.clock == 1.0);
  }

  TEST_CASE("a monopoly is unchanged") {
    MarketState s;
    s.volume = MarketVolumeParams::from_fractions(0.8, 0.3, 0.2);
    s.repurchase_rate = 0.5;
    s.brands = {{0.7, 1.0, 0.3, 2.0, 0.9}};
    const MarketState n = replicator_step(s, 0.5);
    CHECK(n.brands[0].sales == 0.9);
  }

  TEST_CASE("two brands follow the logistic law") {
    MarketState s = two_brand(0.1);
    const double horizon = std::log(9.0) / 0.5;
    const int steps = 2000;
    for (int i = 0; i < steps; ++i) s = replicator_step(s, horizon / steps);
    CHECK(s.shares()[0] == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(s.clock == doctest::Approx(horizon).epsilon(1e-12));
  }

  TEST_CASE("replicator step conserves sales and keeps them non-negative") {
    MarketState s;
    s.volume = bw_volume();
    s.repurchase_rate = 1.0;
    s.brands = gaussian_brands(20, kFloor + 0.5 * kTheta, 4e-4, 1.0, 1.0, 1.0, 3.7);
    for (int i = 0; i < 2000; ++i) {
      const double before = total(s);
      s = replicator_step(s, 0.5);
      CHECK(std::abs(total(s) - before) <= 1e-12 * before);
      for (const auto& b : s.brands) CHECK(b.sales >= 0.0);
      const auto m = s.shares();
      CHECK(std::abs(std::accumulate(m.begin(), m.end(), 0.0) - 1.0) <= 1e-12);
    }
  }

  TEST_CASE("the fittest brand never loses share") {
    MarketState s;
    s.volume = bw_volume();
    s.repurchase_rate = 1.0;
    s.brands = gaussian_brands(7, kFloor + 0.8 * kTheta, 2e-3, 1.0, 1.0, 1.0, 1.0);
    const auto f = fitnesses(s);
    const std::size_t best = static_cast<std::size_t>(std::max_element(f.begin(), f.end()) - f.begin());
    double prev = s.shares()[best];
    for (int i = 0; i < 3000; ++i) {
      s = replicator_step(s, 1.0);
      const double m = s.shares()[best];
      CHECK(m >= prev);
      prev = m;
    }
  }

  TEST_CASE("replicator preconditions") {
    MarketState s = two_brand(0.1);
    CHECK_THROWS_AS(replicator_step(s, 1.0), StepSizeError);
    CHECK_NOTHROW(replicator_step(s, 0.1));
    s.brands[0].sales = s.brands[1].sales = 0.0;
    CHECK_THROWS_AS(replicator_step(s, 0.1), InvalidInputError);
    MarketState bad = two_brand(0.1);
    bad.brands[0].sales = -0.1;
    CHECK_THROWS_AS(replicator_step(bad, 0.1), InvalidParameterError);
  }

  TEST_CASE("micro dynamics: stationary state without reproduction") {
    MarketState s;
    s.volume = bw_volume();
    s.repurchase_rate = 0.8;
    s.brands = {{0.36, 1.0, 0.0, 0.6, 0.0}, {0.42, 1.3, 0.0, 0.4, 0.0}};
    // Pool at which demand q v(<mu>) equals total purchases.
    double wv = 0.0, wmu = 0.0;
    for (const auto& b : s.brands) {
      const double w = b.preference * b.stock * volume_density(b.price, s.volume);
      wv += w;
      wmu += w * b.price;
    }
    s.consumer_pool = s.repurchase_rate * volume_density(wmu / wv, s.volume) / wv;
    for (auto& b : s.brands) b.sales = b.preference * b.stock * s.consumer_pool * volume_density(b.price, s.volume);
    MarketState n = s;
    for (int i = 0; i < 100; ++i) n = micro_step(n, 1.0);
    CHECK(n.consumer_pool == doctest::Approx(s.consumer_pool).epsilon(1e-12));
    for (std::size_t i = 0; i < 2; ++i) {
      CHECK(n.brands[i].stock == s.brands[i].stock);
      CHECK(n.brands[i].sales == doctest::Approx(s.brands[i].sales).epsilon(1e-12));
    }
  }

  TEST_CASE("micro dynamics: an empty pool freezes stocks") {
    MarketState s;
    s.volume = bw_volume();
    s.repurchase_rate = 0.0;
    s.consumer_pool = 0.0;
    s.brands = {{0.36, 1.0, 0.2, 0.6, 0.0}, {0.42, 1.3, 0.1, 0.4, 0.0}};
    const MarketState n = micro_step(s, 1.0);
    for (std::size_t i = 0; i < 2; ++i) {
      CHECK(n.brands[i].sales == 0.0);
      CHECK(n.brands[i].stock == s.brands[i].stock);
    }
  }

  TEST_CASE("micro dynamics halves the step instead of going negative") {
    MarketState s;
    s.volume = bw_volume();
    s.repurchase_rate = 0.0;
    s.consumer_pool = 1.0;
    s.brands = {{0.33, 1.0, 0.0, 5.0, 0.0}};
    const MarketState n = micro_step(s, 1.0);
    CHECK(n.consumer_pool >= 0.0);
    CHECK(n.consumer_pool < 0.2);
    CHECK_THROWS_AS(micro_step(s, -1.0), InvalidParameterError);
  }

  TEST_CASE("micro and replicator integrators agree on shares") {
    MarketState micro;
    micro.volume = MarketVolumeParams::from_fractions(0.9, 0.3, 0.15);
    micro.repurchase_rate = 0.02;
    micro.consumer_pool = 0.0;
    micro.brands = {{0.33, 1.0, 0.05, 0.5, 0.0}, {0.42, 1.0, 0.05, 0.5, 0.0}};
    // Start the pool at its stationary value.
    {
      double wv = 0.0, wmu = 0.0;
      for (const auto& b : micro.brands) {
        const double w = b.preference * b.stock * volume_density(b.price, micro.volume);
        wv += w;
        wmu += w * b.price;
      }
      micro.consumer_pool = micro.repurchase_rate * volume_density(wmu / wv, micro.volume) / wv;
      for (auto& b : micro.brands)
        b.sales = b.preference * b.stock * micro.consumer_pool * volume_density(b.price, micro.volume);
    }
    MarketState rep = micro;
    double prev = micro.shares()[0];
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
      // The replicator sees the micro stocks and pool: q' = psi * sum(eta x).
      double ex = 0.0;
      for (std::size_t j = 0; j < rep.brands.size(); ++j) {
        rep.brands[j].stock = micro.brands[j].stock;
        ex += rep.brands[j].preference * rep.brands[j].stock;
      }
      rep.repurchase_rate = micro.consumer_pool * ex;
      micro = micro_step(micro, 1.0);
      rep = replicator_step(rep, 1.0);
      const double m = micro.shares()[0];
      CHECK(m > prev);
      prev = m;
      worst = std::max(worst, std::abs(m - rep.shares()[0]));
    }
    CHECK(prev > 0.55);
    CHECK(worst < 1e-3);
  }

  TEST_CASE("jumps") {
    MarketState s;
    s.volume = bw_volume();
    s.repurchase_rate = 1.0;
    s.brands = gaussian_brands(200, 0.4, 1e-4, 1.0, 0.05, 1.0, 1.0);
    const MarketState start = s;
    std::mt19937_64 rng(11);
    JumpSettings none;
    none.rate = 0.0;
    apply_jumps(s, none, 1.0, rng);
    for (std::size_t i = 0; i < s.brands.size(); ++i) CHECK(s.brands[i].price == start.brands[i].price);

    MarketState a = start, b = start;
    std::mt19937_64 r1(5), r2(5);
    JumpSettings js;
    for (int k = 0; k < 50; ++k) {
      apply_jumps(a, js, 1.0, r1);
      apply_jumps(b, js, 1.0, r2);
    }
    int moved = 0;
    for (std::size_t i = 0; i < a.brands.size(); ++i) {
      CHECK(a.brands[i].price == b.brands[i].price);
      moved += a.brands[i].price != start.brands[i].price;
      CHECK(a.brands[i].sales == start.brands[i].sales);
    }
    // P(no jump in 50 tau at rate 0.1) = e^-5.
    CHECK(moved > 180);
    JumpSettings bad;
    bad.rate = -1.0;
    CHECK_THROWS_AS(apply_jumps(a, bad, 1.0, r1), InvalidParameterError);
  }

  TEST_CASE("jump factors have mean one") {
    MarketState s;
    s.volume = bw_volume();
    s.repurchase_rate = 1.0;
    s.brands = std::vector<BrandState>(20000, BrandState{1.0, 1.0, 1.0, 1.0, 1.0});
    JumpSettings js;
    js.rate = 1.0;
    js.price_magnitude = 0.5;
    std::mt19937_64 rng(3);
    apply_jumps(s, js, 1.0, rng);
    double mean = 0.0;
    for (const auto& b : s.brands) mean += b.price / 20000.0;
    // Var of the product is exp(e^{s^2} - 1) - 1 ~ 0.33, so 4 SE ~ 0.017;
    // a factor without the -s^2/2 drift would give ~1.14.
    CHECK(std::abs(mean - 1.0) < 0.017);
  }

  TEST_CASE("Gaussian brand cloud has the requested moments") {
    const auto brands = gaussian_brands(50, 0.4, 9e-4, 1.0, 0.05, 1.0, 2.0);
    double m = 0.0, v = 0.0, y = 0.0;
    for (const auto& b : brands) {
      m += b.price / 50.0;
      y += b.sales;
    }
    for (const auto& b : brands) v += (b.price - m) * (b.price - m) / 50.0;
    CHECK(m == doctest::Approx(0.4).epsilon(1e-14));
    CHECK(v == doctest::Approx(9e-4).epsilon(1e-12));
    CHECK(y == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(gaussian_brands(1, 0.4, 9e-4, 1.0, 0.05, 1.0, 2.0).front().price == 0.4);
    CHECK_THROWS_AS(gaussian_brands(0, 0.4, 1e-4, 1.0, 0.05, 1.0, 1.0), InvalidParameterError);
  }

  TEST_CASE("price histogram: single bin and symmetric equal-fitness pair") {
    const auto mv = bw_volume();
    const PriceHistogram one{{0.3, 0.4}, {1.0}};
    CHECK(price_histogram_step(one, mv, 0.05, 1.0).masses[0] == 1.0);
    // Both bins below the natural price share v = 1.
    const PriceHistogram two{{0.1, 0.2, 0.3}, {0.5, 0.5}};
    const auto n = price_histogram_step(two, mv, 0.05, 1.0);
    CHECK(n.masses[0] == 0.5);
    CHECK(n.masses[1] == 0.5);
  }

  TEST_CASE("price histogram conserves mass without renormalisation") {
    const auto mv = bw_volume();
    auto h = PriceHistogram::gaussian(kFloor + 0.5 * kTheta, 4e-4, 200, 0.12);
    for (int i = 0; i < 5000; ++i) {
      h = price_histogram_step(h, mv, 0.05, 1.0);
      CHECK(std::abs(h.total_mass() - 1.0) <= 1e-12);
    }
    for (double m : h.masses) CHECK(m >= 0.0);
    CHECK_THROWS_AS(price_histogram_step(h, mv, 0.05, 1e4), StepSizeError);
    CHECK_THROWS_AS(price_histogram_step(PriceHistogram{{0.1, 0.2}, {0.7}}, mv, 0.05, 1.0), InvalidParameterError);
  }

  TEST_CASE("price histogram mean follows the variance-driven exponential") {
    // The decline rate c m_L Var / Theta^2 is evaluated with the variance the
    // histogram carries at each step, since selection also consumes variance.
    const auto mv = bw_volume();
    const double c = 0.05;
    auto h = PriceHistogram::gaussian(kFloor + 0.25 * kTheta, 1e-4, 400, 0.06);
    const double d0 = h.mean() - kFloor;
    double exponent = 0.0;
    double worst = 0.0;
    for (int i = 0; exponent < 1.0; ++i) {
      const double a = c * mv.lower_fraction() * h.variance() / (kTheta * kTheta);
      h = price_histogram_step(h, mv, c, 1.0);
      const double a2 = c * mv.lower_fraction() * h.variance() / (kTheta * kTheta);
      exponent += 0.5 * (a + a2);
      const double predicted = d0 * std::exp(-exponent);
      worst = std::max(worst, std::abs((h.mean() - kFloor) - predicted) / predicted);
    }
    INFO("worst relative deviation " << worst);
    CHECK(worst < 0.02);
  }

  TEST_CASE("decline rate from the histogram is linear in the variance") {
    const auto mv = bw_volume();
    const double c = 0.05;
    std::vector<double> vars{1e-4, 4e-4, 1e-3}, rates;
    for (double var : vars) {
      const auto h = PriceHistogram::gaussian(kFloor + 0.5 * kTheta, var, 2000, 8.0 * std::sqrt(var));
      const auto n = price_histogram_step(h, mv, c, 1.0);
      rates.push_back(-(n.mean() - h.mean()) / (h.mean() - kFloor));
    }
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < vars.size(); ++i) {
      num += vars[i] * rates[i];
      den += vars[i] * vars[i];
    }
    const double slope = num / den;
    for (std::size_t i = 0; i < vars.size(); ++i) CHECK(std::abs(rates[i] / vars[i] - slope) <= 0.05 * slope);
  }

  TEST_CASE("mean-price ODE") {
    const auto mv = bw_volume();
    const auto flat = mean_price_ode(0.5, mv, {0.02, 0.05, 0.0}, 0.0, 0.5, 50);
    for (double v : flat.values) CHECK(v == 0.5);
    const auto fixed = mean_price_ode(kFloor, mv, {0.02, 0.05, 1e-3}, 0.0, 0.5, 50);
    for (double v : fixed.values) CHECK(v == kFloor);

    // Strength chosen so that a = 0.103.
    SelectionContext ctx{0.02, 0.0, 1e-3};
    ctx.selection_strength = 0.103 * ctx.epsilon * kTheta * kTheta / (mv.lower_fraction() * ctx.variance);
    CHECK(price_decline_rate(mv, ctx) == doctest::Approx(0.103).epsilon(1e-14));
    const auto traj = mean_price_ode(kFloor + 0.6, mv, ctx, 1954.0, 0.25, 161);
    for (std::size_t i = 0; i < traj.size(); ++i)
      CHECK(std::abs(traj.values[i] - (0.6 * std::exp(-0.103 * traj.elapsed(i)) + kFloor)) <= 1e-9);
    CHECK_THROWS_AS(price_decline_rate(mv, {0.02, 0.05, -1.0}), InvalidParameterError);
  }

  TEST_CASE("replicator on tau reproduces the mean-price ODE on t = epsilon tau") {
    // Price jumps hold the variance near its equilibrium; the ODE takes the
    // ensemble's mean variance over the window it is compared on. Preference
    // and reproduction stay fixed so fitness noise does not swamp the 1% band.
    const auto mv = bw_volume();
    const double c = 0.05, eps = 0.02;
    JumpSettings js;
    js.preference_magnitude = js.reproduction_magnitude = 0.0;
    const double mu_start = kFloor + 0.25 * kTheta;
    const double var = jump_equilibrium_variance(mv, c, js, mu_start);
    CompetitionConfig cfg;
    cfg.initial.volume = mv;
    cfg.initial.epsilon = eps;
    cfg.initial.brands = gaussian_brands(50, mu_start, var, 1.0, 1.0, 1.0, 1.0);
    cfg.initial.repurchase_rate = c * 50.0;  // psi0 = q / sum(eta x) = c with unit gamma
    cfg.dtau = 1.0;
    cfg.steps = static_cast<std::size_t>(std::ceil(2.0 / (price_decline_rate(mv, {eps, c, var}) * eps)));
    cfg.jumps_enabled = true;
    cfg.jumps = js;
    cfg.seed = 2024;
    cfg.record_every = 10;
    cfg.record_brands = false;
    const auto runs = simulate_ensemble(cfg, 32);
    const auto& t = runs.front().time;
    std::vector<double> mean(t.size(), 0.0), v(t.size(), 0.0);
    for (const auto& r : runs)
      for (std::size_t i = 0; i < t.size(); ++i) {
        mean[i] += r.mean_price[i] / static_cast<double>(runs.size());
        v[i] += r.price_variance[i] / static_cast<double>(runs.size());
      }
    double vbar = var;
    for (int it = 0; it < 50; ++it) {
      const double horizon = 1.0 / price_decline_rate(mv, {eps, c, vbar});
      double acc = 0.0;
      std::size_t k = 0;
      for (; k < t.size() && t[k] <= horizon; ++k) acc += v[k];
      vbar = acc / static_cast<double>(k);
    }
    const SelectionContext ctx{eps, c, vbar};
    const double a = price_decline_rate(mv, ctx);
    const auto ode = mean_price_ode(mean.front(), mv, ctx, 0.0, t[1] - t[0], t.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < t.size() && t[i] <= 1.0 / a; ++i)
      worst = std::max(worst, std::abs(mean[i] - ode.values[i]) / ode.values[i]);
    INFO("a = " << a << ", worst relative deviation " << worst);
    CHECK(worst < 0.01);
  }

  TEST_CASE("ensembles are deterministic and ordered by run index") {
    CompetitionConfig cfg;
    cfg.initial.volume = bw_volume();
    cfg.initial.brands = gaussian_brands(10, 0.4, 4e-4, 1.0, 1.0, 1.0, 1.0);
    cfg.initial.repurchase_rate = 0.5;
    cfg.steps = 200;
    cfg.jumps_enabled = true;
    cfg.seed = 99;
    const auto a = simulate_ensemble(cfg, 4);
    const auto b = simulate_ensemble(cfg, 4);
    REQUIRE(a.size() == 4);
    for (std::size_t r = 0; r < 4; ++r) CHECK(a[r].mean_price == b[r].mean_price);
    CHECK(a[0].mean_price.back() != a[1].mean_price.back());
    const auto single = simulate_competition(cfg);
    CHECK(single.time.size() == 201);
    CHECK(single.rows.size() == 201 * 10);
    CHECK(single.rows.back().t == doctest::Approx(0.02 * 200).epsilon(1e-12));
  }

  TEST_CASE("Fisher-Pry closed form") {
    const std::vector<double> t{0.0, 1.0, 5.0, 20.0};
    for (double m : fisher_pry(t, 0.0, 0.3)) CHECK(m == doctest::Approx(1.0 / (1.0 + std::exp(-0.3))).epsilon(1e-15));
    CHECK(fisher_pry({0.0}, 0.7, 0.0).front() == 0.5);
    const double half = std::log(9.0) / 0.5;
    CHECK(fisher_pry({half}, 0.5, std::log(1.0 / 9.0)).front() == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(half == doctest::Approx(4.394).epsilon(1e-4));
  }

  TEST_CASE("Fisher-Pry ODE agrees with the closed form") {
    std::vector<double> t(2001);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = 0.01 * static_cast<double>(i);
    for (double theta : {0.1, 0.5, 1.0, -0.4}) {
      const auto closed = fisher_pry(t, theta, std::log(0.1 / 0.9));
      const auto ode = fisher_pry_ode(t, theta, 0.1);
      for (std::size_t i = 0; i < t.size(); ++i) CHECK(std::abs(closed[i] - ode[i]) <= 1e-8);
    }
    CHECK_THROWS_AS(fisher_pry_ode(t, 0.5, 0.0), InvalidParameterError);
  }

  TEST_CASE("fitness advantage grows the fitter brand") {
    const double theta = fitness_advantage(0.6, 0.1, 0.02);
    CHECK(theta == doctest::Approx(25.0).epsilon(1e-14));
    const auto m = fisher_pry({0.0, 0.1}, theta, 0.0);
    CHECK(m[1] > m[0]);
  }
}
