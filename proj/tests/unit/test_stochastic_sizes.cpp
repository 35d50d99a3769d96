#include <doctest.h>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <numeric>
#include <vector>

#include "plc/error.hpp"
#include "plc/stochastic_sizes.hpp"

using namespace plc;

namespace {

GibratConfig base(std::size_t n, std::size_t horizon, double omega) {
  GibratConfig c;
  c.n_units = n;
  c.horizon = horizon;
  c.volatility = omega;
  c.seed = 42;
  return c;
}

std::vector<double> logs(const std::vector<double>& y, double y0) {
  std::vector<double> l(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) l[i] = std::log(y[i] / y0);
  return l;
}

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

double variance(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

}  // namespace

TEST_SUITE("stochastic_sizes") {
  TEST_CASE("zero volatility is deterministic growth") {
    auto c = base(100, 100, 0.0);
    const auto flat = gibrat_simulate(c);
    for (double y : flat.sizes) CHECK(y == 1.0);
    c.drift = 0.01;
    for (double y : gibrat_simulate(c).sizes) CHECK(y == doctest::Approx(std::pow(1.01, 100)).epsilon(1e-12));
    c.horizon = 0;
    c.initial_size = 3.5;
    for (double y : gibrat_simulate(c).sizes) CHECK(y == 3.5);
  }

  TEST_CASE("mean log size matches T E[ln(1+r)]") {
    auto c = base(100000, 400, 0.05);
    const auto s = gibrat_simulate(c);
    CHECK(s.resampled == 0);
    const auto l = logs(s.sizes, 1.0);
    // E[ln(1+r)] for r ~ N(0, 0.05^2) by quadrature.
    const boost::math::normal_distribution<double> nd(0.0, 0.05);
    const double e = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        [&](double r) { return std::log1p(r) * boost::math::pdf(nd, r); }, -0.5, 0.5, 10, 1e-14);
    CHECK(e == doctest::Approx(-0.00125).epsilon(0.01));
    const double se = std::sqrt(variance(l) / static_cast<double>(l.size()));
    INFO("mean " << mean(l) << " expected " << 400.0 * e << " se " << se);
    CHECK(std::abs(mean(l) - 400.0 * e) < 3.0 * se);
  }

  TEST_CASE("lognormal density: mode, mass and median") {
    auto c = base(1, 100, 0.05);
    c.initial_size = 2.0;
    const double t = 100.0;
    const double s2 = 0.05 * 0.05 * t;
    const double mode = 2.0 * std::exp(-s2);
    // Numerical argmax on a fine log grid.
    double best = 0.0, arg = 0.0;
    for (int i = 0; i <= 200000; ++i) {
      const double y = std::exp(std::log(2.0) - 3.0 + 6.0 * i / 200000.0);
      const double p = lognormal_pdf(y, t, c);
      if (p > best) {
        best = p;
        arg = y;
      }
    }
    CHECK(arg == doctest::Approx(mode).epsilon(1e-4));
    boost::math::quadrature::tanh_sinh<double> ts;
    const double mass = ts.integrate([&](double y) { return lognormal_pdf(y, t, c); }, 0.0,
                                     std::numeric_limits<double>::infinity());
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-9));
    const double below = ts.integrate([&](double y) { return lognormal_pdf(y, t, c); }, 0.0, 2.0);
    CHECK(below == doctest::Approx(0.5).epsilon(1e-9));
    CHECK_THROWS_AS(lognormal_pdf(0.0, t, c), DomainError);
    CHECK_THROWS_AS(lognormal_pdf(1.0, 0.0, c), InvalidParameterError);
    c.volatility = 0.0;
    CHECK_THROWS_AS(lognormal_pdf(1.0, t, c), InvalidParameterError);
  }

  TEST_CASE("normality test on an exact normal sample") {
    const std::size_t n = 20000;
    const boost::math::normal_distribution<double> nd(0.3, 0.7);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i)
      y[i] = std::exp(boost::math::quantile(nd, (static_cast<double>(i) + 0.5) / static_cast<double>(n)));
    const auto r = normality_test(y);
    CHECK(r.n == n);
    CHECK(r.passes_ks());
    CHECK(r.ks_critical_95 == doctest::Approx(1.36 / std::sqrt(20000.0)).epsilon(1e-14));
    CHECK(r.mean_log == doctest::Approx(0.3).epsilon(1e-6));
    CHECK(std::abs(r.skewness) < 1e-6);
    CHECK(std::abs(r.excess_kurtosis) < 0.01);
  }

  TEST_CASE("normality test rejects a skewed sample and flags constants") {
    std::vector<double> y(5000);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = 1.0 + static_cast<double>(i * i) / 1e6;
    CHECK_FALSE(normality_test(y).passes_ks());
    const auto flat = normality_test(std::vector<double>(2000, 4.0));
    CHECK(flat.degenerate);
    CHECK_FALSE(flat.passes_ks());
    CHECK_THROWS_AS(normality_test(std::vector<double>(999, 1.0)), InvalidInputError);
    std::vector<double> bad(2000, 1.0);
    bad[7] = 0.0;
    CHECK_THROWS_AS(normality_test(bad), InvalidInputError);
  }

  TEST_CASE("simulated sizes look lognormal") {
    const auto s = gibrat_simulate(base(10000, 400, 0.05));
    const auto r = normality_test(s.sizes);
    CHECK(r.passes_ks());
    CHECK(std::abs(r.skewness) < 0.05);
  }

  TEST_CASE("determinism and thread invariance") {
    const auto c = base(5000, 50, 0.05);
    const auto a = gibrat_simulate(c, 1);
    const auto b = gibrat_simulate(c, 1);
    const auto d = gibrat_simulate(c, 7);
    CHECK(a.sizes == b.sizes);
    CHECK(a.sizes == d.sizes);
    auto other = c;
    other.seed = 43;
    CHECK(gibrat_simulate(other).sizes != a.sizes);
    // Unit i is independent of how many units follow it.
    auto fewer = c;
    fewer.n_units = 100;
    const auto e = gibrat_simulate(fewer, 3);
    CHECK(std::equal(e.sizes.begin(), e.sizes.end(), a.sizes.begin()));
  }

  TEST_CASE("log-size variance grows linearly in time") {
    std::vector<double> t, v;
    for (std::size_t h : {25, 50, 100, 200, 400}) {
      const auto s = gibrat_simulate(base(20000, h, 0.05));
      t.push_back(static_cast<double>(h));
      v.push_back(variance(logs(s.sizes, 1.0)));
    }
    const double mt = mean(t), mv = mean(v);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      sxy += (t[i] - mt) * (v[i] - mv);
      sxx += (t[i] - mt) * (t[i] - mt);
      syy += (v[i] - mv) * (v[i] - mv);
    }
    const double r2 = sxy * sxy / (sxx * syy);
    CHECK(r2 > 0.99);
    CHECK(sxy / sxx == doctest::Approx(0.0025).epsilon(0.05));
  }

  TEST_CASE("sizes scale with the initial size") {
    auto c = base(2000, 100, 0.05);
    const auto a = gibrat_simulate(c);
    c.initial_size = 7.0;
    const auto b = gibrat_simulate(c);
    for (std::size_t i = 0; i < a.sizes.size(); ++i) CHECK(b.sizes[i] == doctest::Approx(7.0 * a.sizes[i]).epsilon(1e-12));
  }

  TEST_CASE("uniform increments") {
    auto c = base(20000, 200, 0.05);
    c.increment = IncrementKind::uniform;
    const auto s = gibrat_simulate(c);
    const auto l = logs(s.sizes, 1.0);
    CHECK(variance(l) == doctest::Approx(0.05 * 0.05 * 200).epsilon(0.05));
    CHECK(normality_test(s.sizes).passes_ks());
  }

  TEST_CASE("large volatility triggers resampling") {
    const auto s = gibrat_simulate(base(1000, 10, 0.6));
    CHECK(s.resampled > 0);
    for (double y : s.sizes) CHECK(y > 0.0);
  }

  TEST_CASE("configuration errors") {
    auto c = base(0, 10, 0.05);
    CHECK_THROWS_AS(gibrat_simulate(c), InvalidParameterError);
    c = base(10, 10, -0.1);
    CHECK_THROWS_AS(gibrat_simulate(c), InvalidParameterError);
    c = base(10, 10, 0.05);
    c.initial_size = 0.0;
    CHECK_THROWS_AS(gibrat_simulate(c), InvalidParameterError);
  }
}
