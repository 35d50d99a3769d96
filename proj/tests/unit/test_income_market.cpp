#include <doctest.h>

#include <cmath>

#include <boost/math/quadrature/exp_sinh.hpp>

#include "plc/error.hpp"
#include "plc/income_market.hpp"

using namespace plc;

TEST_SUITE("income_market") {
  TEST_CASE("income density at zero and at the mean") {
    CHECK(income_pdf(0.0, {1.0}) == doctest::Approx(1.0).epsilon(1e-15));
    const double I = 37000.0;
    CHECK(income_pdf(I, {I}) == doctest::Approx(std::exp(-1.0) / I).epsilon(1e-14));
  }

  TEST_CASE("income density normalises and has mean I") {
    const IncomeModel m{40000.0};
    boost::math::quadrature::exp_sinh<double> q;
    const double mass = q.integrate([&](double h) { return income_pdf(h, m); });
    const double mean = q.integrate([&](double h) { return h * income_pdf(h, m); });
    CHECK(std::abs(mass - 1.0) < 1e-6);
    CHECK(std::abs(mean - 40000.0) < 1e-3);
  }

  TEST_CASE("income density rejects bad arguments") {
    CHECK_THROWS_AS(income_pdf(1.0, {0.0}), InvalidParameterError);
    CHECK_THROWS_AS(income_pdf(1.0, {-3.0}), InvalidParameterError);
    CHECK_THROWS_AS(income_pdf(-1.0, {1.0}), DomainError);
  }

  TEST_CASE("real price") {
    CHECK(real_price(0.0, 40000.0) == 0.0);
    CHECK(real_price(40000.0, 40000.0) == 1.0);
    CHECK(real_price(500.0, 40000.0) == doctest::Approx(0.0125).epsilon(1e-15));
    CHECK_THROWS_AS(real_price(1.0, 0.0), InvalidParameterError);
    CHECK_THROWS_AS(real_price(1.0, -2.0), InvalidParameterError);
  }

  TEST_CASE("market volume closed form") {
    const MarketVolumeParams mv{110.0, 10.0, 0.4, 0.15};
    CHECK(market_volume(0.4, mv) == 110.0);
    CHECK(market_volume(0.4 + 60.0 * 0.15, mv) == doctest::Approx(10.0).epsilon(1e-12));
    // 100 e^{-1/2} + 10 evaluated in long double.
    const long double expected = 100.0L * std::exp(-0.5L) + 10.0L;
    CHECK(std::abs(market_volume(0.55, mv) - static_cast<double>(expected)) < 1e-12);
    CHECK(market_volume(0.55, mv) == doctest::Approx(70.653).epsilon(1e-4));
  }

  TEST_CASE("market volume is clamped below the natural price") {
    const MarketVolumeParams mv{1.0, 0.2, 0.5, 0.1};
    CHECK(market_volume(0.0, mv) == 1.0);
    CHECK(market_volume(0.3, mv) == 1.0);
    CHECK(volume_density(0.49, mv) == 1.0);
  }

  TEST_CASE("volume density examples") {
    const auto mv = MarketVolumeParams::from_fractions(0.9, 0.3, 0.2);
    CHECK(volume_density(0.3, mv) == 1.0);
    CHECK(volume_density(0.7, mv) == doctest::Approx(0.9 * std::exp(-2.0) + 0.1).epsilon(1e-14));
    CHECK(volume_density(0.7, mv) == doctest::Approx(0.2218).epsilon(1e-3));
    const MarketVolumeParams all_upper{5.0, 5.0, 0.3, 0.2};
    for (double mu : {0.0, 0.3, 1.0, 10.0}) CHECK(volume_density(mu, all_upper) == 1.0);
  }

  TEST_CASE("parameter validation") {
    CHECK_THROWS_AS(market_volume(0.5, MarketVolumeParams{1.0, 0.0, 0.3, 0.0}), InvalidParameterError);
    CHECK_THROWS_AS(market_volume(0.5, MarketVolumeParams{1.0, 2.0, 0.3, 0.1}), InvalidParameterError);
    CHECK_THROWS_AS(market_volume(0.5, MarketVolumeParams{0.0, 0.0, 0.3, 0.1}), InvalidParameterError);
    CHECK_THROWS_AS(MarketVolumeParams::from_fractions(1.5, 0.3, 0.1), InvalidParameterError);
  }

  TEST_CASE("density stays in [0,1] and is non-increasing above the natural price") {
    const auto mv = MarketVolumeParams::from_fractions(0.8, 0.25, 0.12);
    double prev = 2.0;
    for (int i = 0; i <= 2000; ++i) {
      const double mu = 0.001 * i;
      const double v = volume_density(mu, mv);
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
      if (mu >= mv.natural_price) {
        CHECK(v <= prev);
        prev = v;
      }
    }
    CHECK(volume_density(1e6, mv) == doctest::Approx(0.2).epsilon(1e-12));
  }

  TEST_CASE("volume is flat at the natural price") {
    const MarketVolumeParams mv{1000.0, 100.0, 0.4, 0.1};
    const double h = 1e-6;
    const double fd = (market_volume(0.4 + h, mv) - market_volume(0.4 - h, mv)) / (2.0 * h);
    CHECK(std::abs(fd) < 1e-4 * mv.market_potential);
    CHECK(volume_density_slope(0.4, mv) == 0.0);
  }

  TEST_CASE("slope matches a central difference") {
    const auto mv = MarketVolumeParams::from_fractions(0.7, 0.2, 0.3);
    for (double mu : {0.25, 0.4, 0.8, 1.3}) {
      const double h = 1e-6;
      const double fd = (volume_density(mu + h, mv) - volume_density(mu - h, mv)) / (2.0 * h);
      CHECK(volume_density_slope(mu, mv) == doctest::Approx(fd).epsilon(1e-7));
    }
    CHECK(volume_density_slope(0.1, mv) == 0.0);
  }

  TEST_CASE("quadratic expansion near the natural price") {
    const MarketVolumeParams mv{1.0, 0.1, 0.3, 0.2};
    for (int i = -10; i <= 10; ++i) {
      const double d = 0.01 * i * mv.width;  // |mu - mu_m| <= 0.1 Theta
      const double mu = mv.natural_price + std::abs(d);
      const double quad = mv.market_potential - mv.lower_class() * d * d / (2.0 * mv.width * mv.width);
      CHECK(std::abs(market_volume(mu, mv) - quad) <= 1e-4 * quad);
    }
  }
}
