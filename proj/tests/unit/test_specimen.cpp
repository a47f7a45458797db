#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "eaem/errors.hpp"
#include "eaem/kinematics.hpp"
#include "eaem/specimen.hpp"

using namespace eaem;
namespace fs = std::filesystem;

namespace {
const BeamParameters& beam() {
  static const auto b = electron_parameters(300.0);
  return b;
}
constexpr double a0 = 0.0529177210903;

fs::path temp_file(const std::string& name, const std::string& body) {
  const auto p = fs::temp_directory_path() / ("eaem_unit_" + name);
  std::ofstream(p) << body;
  return p;
}
} // namespace

TEST_SUITE("specimen") {
  TEST_CASE("builtin composition") {
    const auto c = builtin_composition(30.0);
    CHECK(c.number_density_per_nm3[index(Element::H)] == 62.0);
    CHECK(c.number_density_per_nm3[index(Element::S)] == 0.067);
    CHECK(c.areal_density(Element::O) == doctest::Approx(28.0 * 30.0));
    CHECK(c.atoms_per_bohr_area(Element::C) == doctest::Approx(6.4 * 30.0 * a0 * a0));
    CHECK_THROWS_AS(builtin_composition(0.0), Error);
  }

  // Pure water: rho N_A / M molecules per cm^3, 1e-21 cm^3 per nm^3.
  TEST_CASE("pure-water limit by hand") {
    const double m_water = 2 * 1.008 + 15.999;
    const double molecules = 0.94 * 6.02214076e23 / m_water * 1e-21;
    const auto d = derive_composition(1.0, 0.94, 1.35, {});
    CHECK(d[index(Element::O)] == doctest::Approx(molecules).epsilon(1e-3));
    CHECK(d[index(Element::H)] == doctest::Approx(2 * molecules).epsilon(1e-3));
    CHECK(d[index(Element::C)] == 0.0);
  }

  // Additive partial volumes: 1 g of mixture occupies w/rho_w + (1-w)/rho_p cm^3.
  TEST_CASE("mixture densities follow additive volumes") {
    const Stoichiometry glycine_residue{{Element::C, 2}, {Element::H, 3}, {Element::N, 1}, {Element::O, 1}};
    const double w = 0.5, rw = 1.0, rp = 1.4;
    const double volume = w / rw + (1 - w) / rp;
    const double m_res = 2 * 12.011 + 3 * 1.008 + 14.007 + 15.999;
    const double per_nm3 = 6.02214076e23 * 1e-21 / volume;
    const auto d = derive_composition(w, rw, rp, glycine_residue);
    CHECK(d[index(Element::C)] == doctest::Approx(per_nm3 * (1 - w) / m_res * 2).epsilon(1e-3));
    CHECK(d[index(Element::O)] ==
          doctest::Approx(per_nm3 * ((1 - w) / m_res + w / (2 * 1.008 + 15.999))).epsilon(1e-3));
  }

  TEST_CASE("residue table is normalised and plausible") {
    const auto& t = reference_residue_table();
    CHECK(t.size() == 20);
    double total = 0;
    for (const auto& r : t)
      total += r.frequency_percent;
    CHECK(total == doctest::Approx(100.0).epsilon(0.01));
    const auto s = stoichiometry_from_residues(t);
    // An average residue is about C5 H8 N1.4 O1.5 S0.04.
    CHECK(s.at(Element::C) == doctest::Approx(5.0).epsilon(0.1));
    CHECK(s.at(Element::N) == doctest::Approx(1.35).epsilon(0.1));
    CHECK(s.at(Element::S) > 0.02);
    CHECK(s.at(Element::S) < 0.06);
  }

  TEST_CASE("derive_composition rejects bad inputs") {
    CHECK_THROWS_AS(derive_composition(1.5, 0.94, 1.35, {}), DomainError);
    CHECK_THROWS_AS(derive_composition(0.7, 0.94, 1.35, {}), ConfigurationError);
    CHECK_THROWS_AS(derive_composition(0.7, -1.0, 1.35, {{Element::C, 5}}), DomainError);
  }

  TEST_CASE("analytic amplitude is the screened Coulomb form") {
    const auto src = AmplitudeSource::analytic();
    const double k = beam().wavenumber_per_nm;
    for (auto e : all_elements) {
      const double Z = atomic_number(e);
      const double th0 = std::cbrt(Z) / (k * a0);
      CHECK(screening_angle(e, beam()) == doctest::Approx(th0).epsilon(1e-12));
      for (double th : {0.0, 0.003, 0.02, 0.5}) {
        const double f = 2 * beam().gamma * Z / (a0 * k * k * (th * th + th0 * th0));
        CHECK(src.amplitude_nm(e, th, beam()) == doctest::Approx(f).epsilon(1e-12));
        CHECK(src.amplitude_nm(e, -th, beam()) == src.amplitude_nm(e, th, beam()));
      }
    }
  }

  // Small-angle closed form: Int 2 pi theta A^2/(theta^2+theta0^2)^2 = pi A^2 / theta0^2.
  TEST_CASE("analytic cross section against small-angle closed form") {
    const auto src = AmplitudeSource::analytic();
    const double k = beam().wavenumber_per_nm;
    for (auto e : all_elements) {
      const double Z = atomic_number(e);
      const double A = 2 * beam().gamma * Z / (a0 * k * k);
      const double th0 = screening_angle(e, beam());
      CHECK(elastic_cross_section(src, e, beam()) == doctest::Approx(M_PI * A * A / (th0 * th0)).epsilon(1e-3));
    }
  }

  TEST_CASE("elastic probability is linear in thickness") {
    const auto src = AmplitudeSource::analytic();
    const double p10 = total_elastic_probability(builtin_composition(10.0), src, beam());
    const double p30 = total_elastic_probability(builtin_composition(30.0), src, beam());
    CHECK(p30 == doctest::Approx(3 * p10).epsilon(1e-12));
    CHECK(inelastic_probability_from_elastic(p30) == 2 * p30);
  }

  TEST_CASE("tabulated amplitudes interpolate linearly and validate") {
    TabulatedAmplitude t;
    t.theta_rad = {0.0, 0.1, 0.2, M_PI};
    for (auto e : all_elements)
      t.g[index(e)] = {4.0, 2.0, 1.0, 0.0};
    const auto src = AmplitudeSource::tabulated(t);
    CHECK(src.is_tabulated());
    CHECK(src.amplitude_nm(Element::C, 0.05, beam()) == doctest::Approx(3.0 * a0));
    CHECK(src.amplitude_nm(Element::C, -0.15, beam()) == doctest::Approx(1.5 * a0));

    auto bad = t;
    bad.theta_rad = {0.0, 0.1, 0.1, M_PI};
    CHECK_THROWS_AS(AmplitudeSource::tabulated(bad), ConfigurationError);
    bad = t;
    bad.theta_rad = {0.01, 0.1, 0.2, M_PI};
    CHECK_THROWS_AS(AmplitudeSource::tabulated(bad), ConfigurationError);
    bad = t;
    bad.theta_rad = {0.0, 0.05, 0.1, 0.15};
    CHECK_THROWS_AS(AmplitudeSource::tabulated(bad), ConfigurationError);
    bad = t;
    bad.g[0][1] = -1.0;
    CHECK_THROWS_AS(AmplitudeSource::tabulated(bad), ConfigurationError);
  }

  TEST_CASE("amplitude CSV loading") {
    const auto good = temp_file("amp_good.csv", "theta_rad,g_H,g_C,g_N,g_O,g_S\n0,1,2,3,4,5\n0.5,1,2,3,4,5\n3.2,0,0,0,0,0\n");
    const auto src = AmplitudeSource::load_csv(good);
    CHECK(src.amplitude_nm(Element::O, 0.1, beam()) == doctest::Approx(4.0 * a0));
    const auto bad_header = temp_file("amp_bad.csv", "theta,g_H\n0,1\n");
    CHECK_THROWS_AS(AmplitudeSource::load_csv(bad_header), ConfigurationError);
    const auto bad_number = temp_file("amp_nan.csv", "theta_rad,g_H,g_C,g_N,g_O,g_S\n0,1,x,3,4,5\n");
    CHECK_THROWS_AS(AmplitudeSource::load_csv(bad_number), ConfigurationError);
    CHECK_THROWS_AS(AmplitudeSource::load_csv("/nonexistent/amp.csv"), ConfigurationError);
  }

  TEST_CASE("shipped amplitude table loads and gives a few-percent elastic probability") {
    const auto src = AmplitudeSource::load_csv(fs::path(EAEM_TEST_DATA_DIR) / "elastic_amplitudes_300keV.csv");
    const double p = total_elastic_probability(builtin_composition(30.0), src, beam());
    CHECK(p > 0.03);
    CHECK(p < 0.08);
  }

  TEST_CASE("inner-shell table") {
    const auto t = default_inner_shell_table();
    CHECK(t[index(Element::H)] == 0.0);
    CHECK(inner_shell_probability(builtin_composition(30.0), t) == doctest::Approx(8.6e-4).epsilon(1e-12));
    // Shipped CSV holds the same numbers.
    const auto shipped = load_inner_shell_csv(fs::path(EAEM_TEST_DATA_DIR) / "inner_shell_default.csv");
    for (auto e : all_elements)
      CHECK(shipped[index(e)] == doctest::Approx(t[index(e)]).epsilon(1e-9));
  }

  TEST_CASE("inner-shell CSV must list every element") {
    const auto partial = temp_file("shell_partial.csv", "element,sigma_nm2\nC,1e-6\nO,2e-6\n");
    try {
      load_inner_shell_csv(partial);
      FAIL("expected ConfigurationError");
    } catch (const ConfigurationError& e) {
      const std::string msg = e.what();
      CHECK(msg.find('H') != std::string::npos);
      CHECK(msg.find('N') != std::string::npos);
      CHECK(msg.find('S') != std::string::npos);
    }
    CHECK_THROWS_AS(inner_shell_table_from_map({{Element::C, -1.0}, {Element::H, 0}, {Element::N, 0},
                                                {Element::O, 0}, {Element::S, 0}}),
                    ConfigurationError);
  }

  TEST_CASE("element helpers") {
    CHECK(parse_element("C") == Element::C);
    CHECK_FALSE(parse_element("Fe").has_value());
    CHECK(atomic_number(Element::S) == 16);
    CHECK(symbol(Element::N) == "N");
  }
}
