#include <doctest.h>

#include <cmath>
#include <numeric>

#include "eaem/errors.hpp"
#include "eaem/imaging.hpp"

using namespace eaem;

namespace {
const BeamParameters& beam() {
  static const auto b = electron_parameters(300.0);
  return b;
}

// Normalised centre weight of a radial Gaussian sampled on the pixel grid up to 3 sigma.
double centre_weight(double sigma_px) {
  const int r = static_cast<int>(3 * sigma_px);
  double total = 0.0;
  for (int y = -r; y <= r; ++y)
    for (int x = -r; x <= r; ++x)
      if (x * x + y * y <= 9 * sigma_px * sigma_px)
        total += std::exp(-(x * x + y * y) / (2 * sigma_px * sigma_px));
  return 1.0 / total;
}

ImageJob small_job(PhaseMap map) {
  ImageJob job;
  job.map = std::move(map);
  job.errors = ErrorModel::none(beam());
  job.seed = 21;
  return job;
}

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }
} // namespace

TEST_SUITE("imaging") {
  TEST_CASE("mirror index") {
    CHECK(mirror_index(0, 5) == 0);
    CHECK(mirror_index(4, 5) == 4);
    CHECK(mirror_index(-1, 5) == 1);
    CHECK(mirror_index(-2, 5) == 2);
    CHECK(mirror_index(5, 5) == 3);
    CHECK(mirror_index(6, 5) == 2);
    CHECK(mirror_index(-7, 5) == 1);
    CHECK(mirror_index(3, 1) == 0);
  }

  TEST_CASE("effective phase difference of flat and ramp maps vanishes") {
    auto flat = PhaseMap::zeros(30, 30, 0.3);
    std::fill(flat.values.begin(), flat.values.end(), 0.2);
    const ProbeFootprints fp;
    const auto e = effective_delta_phi_map(flat, fp, 2);
    for (double v : e.values)
      CHECK(v == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
    auto ramp = PhaseMap::zeros(60, 60, 0.3);
    for (std::size_t y = 0; y < 60; ++y)
      for (std::size_t x = 0; x < 60; ++x)
        ramp.at(x, y) = 1e-3 * x - 2e-3 * y;
    CHECK(std::abs(effective_delta_phi(ramp, fp, 30, 30)) < 1e-14);
  }

  TEST_CASE("impulse response equals the difference of centre weights") {
    auto m = PhaseMap::zeros(41, 41, 0.3);
    m.at(20, 20) = 1.0;
    const ProbeFootprints fp{0.3, 1.5, 30.0};
    CHECK(effective_delta_phi(m, fp, 20, 20) == doctest::Approx(centre_weight(1.0) - centre_weight(5.0)).epsilon(1e-12));
  }

  TEST_CASE("per-pixel budget") {
    auto job = small_job(PhaseMap::zeros(10, 10, 0.3));
    CHECK(job.electrons_per_pixel() == 36);
    CHECK(job.processes_per_pixel() == 1);
    job.k = 10;
    CHECK(job.processes_per_pixel() == 3);
    job.dose_per_nm2 = 100.0;
    job.k = 36;
    CHECK_THROWS_AS(job.validate(), ConfigurationError);
  }

  // One process per pixel: the arcsine estimate is +-pi/(2k).
  TEST_CASE("single-process pixels give binary estimates") {
    auto job = small_job(PhaseMap::zeros(20, 20, 0.3));
    const auto img = simulate_entangled_image(job);
    CHECK(img.processes_per_pixel == 1);
    CHECK(img.unused_electrons_per_pixel == 0);
    std::size_t positive = 0;
    for (double v : img.estimate.values) {
      CHECK(std::abs(v) == doctest::Approx(M_PI / 72));
      positive += v > 0;
    }
    CHECK(positive > 150);
    CHECK(positive < 250);
  }

  TEST_CASE("conventional noise has variance 1/N_px") {
    auto job = small_job(PhaseMap::zeros(100, 100, 0.3));
    const auto c = simulate_conventional_image(job);
    double s2 = 0.0;
    for (double v : c.values)
      s2 += v * v;
    s2 /= c.size();
    CHECK(std::abs(mean(c.values)) < 5 * (1.0 / 6) / 100);
    CHECK(s2 == doctest::Approx(1.0 / 36).epsilon(0.05));
  }

  TEST_CASE("images do not depend on the thread count") {
    PhantomSpec spec;
    spec.width = spec.height = 40;
    auto job = small_job(make_phantom(spec));
    job.errors = ErrorModel::make(beam(), 0.0054, 0.1, 30.0);
    job.threads = 1;
    const auto a = simulate_entangled_image(job);
    const auto ca = simulate_conventional_image(job);
    job.threads = 6;
    const auto b = simulate_entangled_image(job);
    const auto cb = simulate_conventional_image(job);
    CHECK(a.estimate.values == b.estimate.values);
    CHECK(a.spoil_rate.values == b.spoil_rate.values);
    CHECK(ca.values == cb.values);
  }

  TEST_CASE("every process discarded leaves empty pixels at zero") {
    auto job = small_job(PhaseMap::zeros(5, 5, 0.3));
    job.errors = ErrorModel::make(beam(), 1.0, 0.0, 30.0, FailurePolicy::discard);
    const auto img = simulate_entangled_image(job);
    CHECK(img.empty_pixels == 25);
    for (double v : img.estimate.values)
      CHECK(v == 0.0);
  }

  // Sampled Gaussian of sigma = 2 px attenuates a period-20 cosine by about exp(-2 pi^2 sigma^2 / P^2).
  TEST_CASE("Gaussian smoothing") {
    auto m = PhaseMap::zeros(80, 40, 0.3);
    for (std::size_t y = 0; y < 40; ++y)
      for (std::size_t x = 0; x < 80; ++x)
        m.at(x, y) = std::cos(2 * M_PI * x / 20.0);
    CHECK(gaussian_smooth(m, 0.0).values == m.values);
    const auto s = gaussian_smooth(m, 0.6);
    CHECK(s.at(40, 20) == doctest::Approx(std::exp(-2 * M_PI * M_PI * 4 / 400)).epsilon(1e-3));
    auto flat = PhaseMap::zeros(9, 9, 0.3);
    std::fill(flat.values.begin(), flat.values.end(), 1.5);
    for (double v : gaussian_smooth(flat, 0.9).values)
      CHECK(v == doctest::Approx(1.5));
  }

  TEST_CASE("Laplacian filter") {
    auto m = PhaseMap::zeros(20, 20, 0.3);
    for (std::size_t y = 0; y < 20; ++y)
      for (std::size_t x = 0; x < 20; ++x)
        m.at(x, y) = 0.5 * x * x + 3.0 * y;
    const auto l = laplacian_filter(m);
    CHECK(l.at(10, 10) == doctest::Approx(-1.0));
    CHECK(l.at(3, 17) == doctest::Approx(-1.0));
    auto flat = PhaseMap::zeros(4, 4, 0.3);
    std::fill(flat.values.begin(), flat.values.end(), 2.0);
    for (double v : laplacian_filter(flat).values)
      CHECK(v == 0.0);
    CHECK_THROWS_AS(laplacian_filter(PhaseMap::zeros(2, 5, 0.3)), ConfigurationError);
  }

  TEST_CASE("phantoms") {
    for (auto kind : {PhantomKind::disc, PhantomKind::shell, PhantomKind::sinusoid, PhantomKind::blob_cluster}) {
      CHECK(parse_phantom(to_string(kind)) == kind);
      PhantomSpec spec;
      spec.kind = kind;
      const auto m = make_phantom(spec);
      CHECK(m.width == 100);
      double peak = 0.0;
      for (double v : m.values)
        peak = std::max(peak, std::abs(v));
      CHECK(peak > 0.0);
      CHECK(peak <= spec.amplitude_rad * (1 + 1e-12));
      CHECK(make_phantom(spec).values == m.values);
    }
    PhantomSpec bad;
    bad.amplitude_rad = 0.6;
    CHECK_THROWS_AS(make_phantom(bad), DomainError);
    CHECK_THROWS_AS(parse_phantom("ribosome"), ConfigurationError);
  }

  TEST_CASE("map validation and RMS") {
    auto a = PhaseMap::zeros(2, 2, 0.3);
    auto b = a;
    b.values = {1.0, -1.0, 1.0, -1.0};
    CHECK(rms_difference(a, b) == doctest::Approx(1.0));
    b.values[0] = NAN;
    CHECK_THROWS_AS(b.validate(), ConfigurationError);
    CHECK_THROWS_AS(PhaseMap::zeros(0, 3, 0.3).validate(), ConfigurationError);
    CHECK_THROWS_AS(rms_difference(a, PhaseMap::zeros(3, 2, 0.3)), ConfigurationError);
  }
}
