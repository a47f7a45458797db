#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "eaem/errors.hpp"
#include "eaem/quadrature.hpp"
#include "eaem/rng.hpp"
#include "eaem/statistics.hpp"

using namespace eaem;

TEST_SUITE("numerics") {
  TEST_CASE("quadrature of closed-form integrals") {
    CHECK(quadrature::integrate([](double x) { return std::sin(x); }, 0.0, M_PI).value ==
          doctest::Approx(2.0).epsilon(1e-12));
    CHECK(quadrature::integrate([](double x) { return std::exp(-x * x); }, -8.0, 8.0).value ==
          doctest::Approx(std::sqrt(M_PI)).epsilon(1e-12));
    // Lorentzian peaked well inside the interval.
    const double a = 1e-3;
    const std::vector<double> br{-0.01, 0.0, 0.01};
    CHECK(quadrature::integrate_piecewise([a](double x) { return a / (x * x + a * a); }, -1.0, 1.0, br)
              .value == doctest::Approx(2.0 * std::atan(1.0 / a)).epsilon(1e-10));
  }

  TEST_CASE("piecewise integral ignores breakpoints outside or on the ends") {
    const std::vector<double> br{-5.0, 0.0, 0.5, 0.5 + 1e-15, 1.0, 7.0};
    CHECK(quadrature::integrate_piecewise([](double x) { return std::abs(x - 0.5); }, 0.0, 1.0, br).value ==
          doctest::Approx(0.25).epsilon(1e-12));
  }

  TEST_CASE("quadrature reports failure on a non-integrable singularity") {
    quadrature::Options o;
    o.max_depth = 4;
    CHECK_THROWS_AS(quadrature::integrate([](double x) { return 1.0 / x; }, 0.0, 1.0, o, "1/x"), NumericError);
  }

  // Classical critical values of the limiting Kolmogorov distribution.
  TEST_CASE("KS p-value at tabulated critical points") {
    const std::size_t n = 1000000;
    const double s = std::sqrt(static_cast<double>(n)) + 0.12 + 0.11 / std::sqrt(static_cast<double>(n));
    CHECK(stats::ks_pvalue(1.3581 / s, n) == doctest::Approx(0.05).epsilon(2e-3));
    CHECK(stats::ks_pvalue(1.6276 / s, n) == doctest::Approx(0.01).epsilon(2e-3));
    CHECK(stats::ks_pvalue(1.2238 / s, n) == doctest::Approx(0.10).epsilon(2e-3));
    CHECK(stats::ks_pvalue(0.0, n) == doctest::Approx(1.0));
    CHECK(stats::ks_pvalue(1.0, n) < 1e-12);
  }

  TEST_CASE("KS statistic of a small hand-checked sample") {
    // Uniform CDF; sample {0.1, 0.5, 0.7}: D = max(1/3 - 0.1, 2/3 - 0.5, 1 - 0.7, 0.5 - 1/3, 0.7 - 2/3) = 0.3
    const std::vector<double> x{0.1, 0.5, 0.7};
    CHECK(stats::ks_statistic(x, [](double t) { return t; }) == doctest::Approx(0.3));
  }

  TEST_CASE("KS accepts uniform draws and rejects a shifted law") {
    auto g = rng::make_stream(9, rng::Domain::generic, 0);
    std::vector<double> x(20000);
    for (auto& v : x)
      v = g.uniform();
    std::sort(x.begin(), x.end());
    const auto uni = [](double t) { return std::clamp(t, 0.0, 1.0); };
    CHECK(stats::ks_pvalue(stats::ks_statistic(x, uni), x.size()) > 0.001);
    const auto shifted = [](double t) { return std::clamp(t * t, 0.0, 1.0); };
    CHECK(stats::ks_pvalue(stats::ks_statistic(x, shifted), x.size()) < 1e-6);
  }
}
