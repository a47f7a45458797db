#include <doctest.h>

#include <cmath>

#include "eaem/errors.hpp"
#include "eaem/kinematics.hpp"

using namespace eaem;

TEST_SUITE("kinematics") {
  // Independent route through SI constants: lambda = h / (gamma m0 v).
  TEST_CASE("wavelength agrees with de Broglie relation in SI units") {
    constexpr double h = 6.62607015e-34;
    constexpr double m0 = 9.1093837015e-31;
    constexpr double c = 299792458.0;
    constexpr double e = 1.602176634e-19;
    for (double kev : {10.0, 100.0, 200.0, 300.0, 1000.0}) {
      const double gamma = 1.0 + kev * 1e3 * e / (m0 * c * c);
      const double v = c * std::sqrt(1.0 - 1.0 / (gamma * gamma));
      const double lambda_pm = h / (gamma * m0 * v) * 1e12;
      const auto b = electron_parameters(kev);
      CHECK(b.wavelength_pm == doctest::Approx(lambda_pm).epsilon(1e-6));
      CHECK(b.wavenumber_per_nm * b.wavelength_nm() == doctest::Approx(2.0 * M_PI).epsilon(1e-12));
      CHECK(b.gamma == doctest::Approx(gamma).epsilon(1e-8));
    }
  }

  TEST_CASE("300 keV values") {
    const auto b = electron_parameters(300.0);
    CHECK(b.wavenumber_per_nm == doctest::Approx(3191.46).epsilon(1e-5));
    CHECK(b.wavelength_pm == doctest::Approx(1.96875).epsilon(1e-5));
    // theta_E = E / (gamma m0 v^2)
    const double theta_e = characteristic_inelastic_angle(b, 20.0);
    CHECK(theta_e == doctest::Approx(20e-3 / (b.gamma * 510.99895 * b.beta * b.beta)).epsilon(1e-9));
  }

  TEST_CASE("m v^2 equals p v") {
    for (double kev : {50.0, 300.0, 3000.0}) {
      const auto b = electron_parameters(kev);
      const double pc = std::sqrt(kev * (kev + 2.0 * 510.99895));
      CHECK(b.m_v_squared_kev == doctest::Approx(pc * b.beta).epsilon(1e-10));
    }
  }

  TEST_CASE("non-physical energies are rejected") {
    CHECK_THROWS_AS(electron_parameters(0.0), DomainError);
    CHECK_THROWS_AS(electron_parameters(-1.0), DomainError);
    CHECK_THROWS_AS(electron_parameters(NAN), DomainError);
    const auto b = electron_parameters(300.0);
    CHECK_THROWS_AS(characteristic_inelastic_angle(b, -5.0), DomainError);
  }
}
