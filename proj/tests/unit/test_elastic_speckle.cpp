#include <doctest.h>

#include <cmath>
#include <complex>

#include "eaem/elastic_speckle.hpp"
#include "eaem/errors.hpp"
#include "eaem/reference_checks.hpp"

using namespace eaem;

namespace {
const BeamParameters& beam() {
  static const auto b = electron_parameters(300.0);
  return b;
}

// Same g for every element and angle.
AmplitudeSource constant_amplitude(double g) {
  TabulatedAmplitude t;
  t.theta_rad = {0.0, 0.5, M_PI};
  for (auto e : all_elements)
    t.g[index(e)] = {g, g, g};
  return AmplitudeSource::tabulated(t);
}

// Square lattice of carbon atoms with spacing h covering |x|,|y| <= half.
std::vector<Atom> lattice(double h, double half) {
  std::vector<Atom> atoms;
  const int n = static_cast<int>(std::round(half / h));
  for (int i = -n; i <= n; ++i)
    for (int j = -n; j <= n; ++j)
      atoms.push_back({i * h, j * h, Element::C});
  return atoms;
}
} // namespace

TEST_SUITE("elastic_speckle") {
  TEST_CASE("probe geometry") {
    const auto f = ProbeGeometry::focused(beam(), 0.5);
    CHECK(f.half_angle() == doctest::Approx(2.0 / (beam().wavenumber_per_nm * 0.5)));
    CHECK(f.epsilon() == 0.0);
    CHECK(f.footprint_nm() == 0.5);
    const auto d = ProbeGeometry::diverging_from_half_angle(beam(), 0.04, 22.5);
    CHECK(d.half_angle() == doctest::Approx(0.04));
    CHECK(d.epsilon() == doctest::Approx(d.rayleigh_range_nm() / 22.5));
    CHECK(d.footprint_nm() == doctest::Approx(d.waist_nm / d.epsilon()));
    CHECK_THROWS_AS(ProbeGeometry::diverging(beam(), 5.0, 1.0), DomainError);
  }

  TEST_CASE("transmitted far field") {
    const auto g = ProbeGeometry::focused(beam(), 0.5);
    const double k = beam().wavenumber_per_nm;
    const auto t0 = transmitted_far_field(g, 0.0);
    CHECK(t0.real() == doctest::Approx(0.0));
    CHECK(t0.imag() == doctest::Approx(-k * 0.25 / 2));
    const double th = 2e-3;
    CHECK(std::abs(transmitted_far_field(g, th)) ==
          doctest::Approx(k * 0.25 / 2 * std::exp(-k * k * 0.25 * th * th / 4)));
  }

  // A dense lattice approximates a uniform sheet of density 1/h^2.
  TEST_CASE("focused lattice sum matches the uniform-sheet integral") {
    const auto g = ProbeGeometry::focused(beam(), 0.5);
    const auto src = AmplitudeSource::analytic();
    const double h = 0.02;
    const auto atoms = lattice(h, 3.0);
    for (double th : {0.0, 5e-4, 1e-3}) {
      const auto sum = scattered_field_focused(atoms, g, src, beam(), th);
      const auto sheet = uniform_sheet_focused(g, src, Element::C, 1.0 / (h * h), beam(), th);
      CHECK(std::abs(sum - sheet) < 1e-6 * std::abs(sheet));
    }
  }

  TEST_CASE("diverging lattice sum matches the closed-form sheet for constant f") {
    const auto g = ProbeGeometry::diverging_from_half_angle(beam(), 0.04, 22.5);
    const auto src = constant_amplitude(1.0);
    const double h = 0.01;
    const auto atoms = lattice(h, 3.6);
    const double f0 = src.amplitude_nm(Element::C, 0.0, beam());
    for (double th : {0.0, 0.02, 0.05}) {
      const auto sum = scattered_field_diverging(atoms, g, src, beam(), th);
      const auto cf = uniform_sheet_diverging_closed_form(g, f0, 1.0 / (h * h), th);
      CHECK(std::abs(sum - cf) < 1e-4 * std::abs(uniform_sheet_diverging_closed_form(g, f0, 1.0 / (h * h), 0.0)));
    }
  }

  TEST_CASE("numeric diverging sheet reduces to the closed form for constant f") {
    const auto g = ProbeGeometry::diverging_from_half_angle(beam(), 0.04, 22.5);
    const auto src = constant_amplitude(2.5);
    const double f0 = src.amplitude_nm(Element::O, 0.0, beam());
    for (double th : {0.0, 0.01, 0.04, 0.08}) {
      const auto num = uniform_sheet_diverging(g, src, Element::O, 10.0, beam(), th);
      const auto cf = uniform_sheet_diverging_closed_form(g, f0, 10.0, th);
      CHECK(std::abs(num - cf) < 1e-7 * std::abs(uniform_sheet_diverging_closed_form(g, f0, 10.0, 0.0)));
    }
  }

  TEST_CASE("diverging field needs a weak-focus probe") {
    const auto g = ProbeGeometry::diverging(beam(), 0.06, 22.5);
    REQUIRE(g.epsilon() > 0.1);
    const std::vector<Atom> one{{0.0, 0.0, Element::C}};
    CHECK_THROWS_AS(scattered_field_diverging(one, g, AmplitudeSource::analytic(), beam(), 0.01), DomainError);
    const auto f = ProbeGeometry::focused(beam(), 0.5);
    CHECK_THROWS_AS(scattered_field_diverging(one, f, AmplitudeSource::analytic(), beam(), 0.01), DomainError);
  }

  // Random phases: E|sum a_s|^2 = n f^2 Int exp(-2 r^2 / w0^2) dA = (pi/2) n w0^2 f^2.
  TEST_CASE("random-phase speckle moments") {
    const auto comp = builtin_composition(30.0);
    const auto src = AmplitudeSource::analytic();
    const auto g = ProbeGeometry::focused(beam(), 0.5);
    const double th = 0.01;
    double expect = 0.0;
    for (auto e : all_elements) {
      const double f = src.amplitude_nm(e, th, beam());
      expect += comp.areal_density(e) * M_PI * 0.25 / 2.0 * f * f;
    }
    const auto m = speckle_moments_focused(comp, src, g, beam(), th);
    CHECK(m.mean_intensity == doctest::Approx(expect).epsilon(1e-12));
    CHECK(m.variance == doctest::Approx(expect * expect).epsilon(1e-12));
    CHECK_THROWS_AS(speckle_moments_focused(comp, src, g, beam(), 1e-3), DomainError);
  }

  TEST_CASE("atom configurations") {
    const auto comp = builtin_composition(30.0);
    const auto g = ProbeGeometry::focused(beam(), 0.5);
    const auto a = random_atom_configuration(comp, g, 11, 3);
    const auto b = random_atom_configuration(comp, g, 11, 3);
    const auto c = random_atom_configuration(comp, g, 11, 4);
    CHECK(a.radius_nm == doctest::Approx(2.0));
    const double area = M_PI * a.radius_nm * a.radius_nm;
    PerElement<std::size_t> counts{};
    for (const auto& at : a.atoms) {
      CHECK(at.x_nm * at.x_nm + at.y_nm * at.y_nm <= a.radius_nm * a.radius_nm);
      ++counts[index(at.element)];
    }
    for (auto e : all_elements)
      CHECK(counts[index(e)] == static_cast<std::size_t>(std::llround(comp.areal_density(e) * area)));
    REQUIRE(a.atoms.size() == b.atoms.size());
    CHECK(a.atoms[17].x_nm == b.atoms[17].x_nm);
    CHECK(a.atoms[17].x_nm != c.atoms[17].x_nm);
  }

  TEST_CASE("speckle Monte Carlo does not depend on the thread count") {
    const auto comp = builtin_composition(30.0);
    const auto g = ProbeGeometry::focused(beam(), 0.5);
    const auto src = AmplitudeSource::analytic();
    const auto one = speckle_monte_carlo(comp, src, g, beam(), 0.01, 60, 5, 1);
    const auto many = speckle_monte_carlo(comp, src, g, beam(), 0.01, 60, 5, 4);
    CHECK(one.mean_intensity == many.mean_intensity);
    CHECK(one.variance == many.variance);
    CHECK(one.configurations == 60);
  }

  // Plain trapezoid over a fine grid in the amplitude argument.
  TEST_CASE("H function against a dense-grid sum") {
    const auto comp = builtin_composition(30.0);
    const auto src = AmplitudeSource::analytic();
    const auto g = ProbeGeometry::diverging_from_half_angle(beam(), 0.04, 22.5);
    const double tg = g.half_angle();
    constexpr double a0 = 0.0529177210903;
    for (double th : {0.0, 0.03, 0.08, 0.2}) {
      const int n = 400000;
      const double lo = th - 5 * tg, hi = th + 5 * tg, du = (hi - lo) / n;
      double sum = 0.0;
      for (int i = 0; i <= n; ++i) {
        const double u = lo + i * du;
        const double w = (i == 0 || i == n) ? 0.5 : 1.0;
        double s = 0.0;
        for (auto e : all_elements) {
          const double gg = src.amplitude_nm(e, u, beam()) / a0;
          s += comp.atoms_per_bohr_area(e) * gg * gg;
        }
        sum += w * std::exp(-2 * std::pow((th - u) / tg, 2)) * s;
      }
      CHECK(h_function(comp, src, g, beam(), th) == doctest::Approx(sum * du).epsilon(1e-6));
    }
  }

  TEST_CASE("failure threshold sits on the margin root") {
    const auto comp = builtin_composition(30.0);
    const auto src = AmplitudeSource::analytic();
    const auto g = ProbeGeometry::diverging_from_half_angle(beam(), 0.04, 22.5);
    const auto fa = speckle_threshold_and_failure(comp, src, g, beam());
    CHECK(failure_condition_margin(comp, src, g, beam(), fa.theta_c - 1e-5) < 0.0);
    CHECK(failure_condition_margin(comp, src, g, beam(), fa.theta_c + 1e-5) > 0.0);
    CHECK(failure_condition_margin(comp, src, g, beam(), 0.0) < 0.0);
    CHECK(fa.theta_c == doctest::Approx(reference::analytic_theta_c).epsilon(3e-5));
    CHECK(fa.failure_probability == doctest::Approx(reference::analytic_failure_probability).epsilon(1e-3));
    CHECK(fa.epsilon == doctest::Approx(g.epsilon()));
  }

  // An empty specimen never overtakes the transmitted wave.
  TEST_CASE("no failure threshold without scatterers") {
    Composition empty;
    empty.thickness_nm = 30.0;
    const auto g = ProbeGeometry::diverging_from_half_angle(beam(), 0.04, 22.5);
    CHECK_THROWS_AS(speckle_threshold_and_failure(empty, AmplitudeSource::analytic(), g, beam()), DomainError);
  }
}
