#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "eaem/errors.hpp"
#include "eaem/image_io.hpp"

using namespace eaem;
namespace fs = std::filesystem;

namespace {
fs::path tmp(const std::string& name) { return fs::temp_directory_path() / ("eaem_io_" + name); }

PhaseMap sample_map() {
  auto m = PhaseMap::zeros(7, 5, 0.25);
  for (std::size_t i = 0; i < m.size(); ++i)
    m.values[i] = std::sin(0.37 * i) * 1e-3 + 1e-17 * i;
  return m;
}
} // namespace

TEST_SUITE("image_io") {
  TEST_CASE("CSV round trip is exact") {
    const auto m = sample_map();
    io::write_csv(tmp("map.csv"), m);
    const auto r = io::read_csv(tmp("map.csv"), 0.25);
    CHECK(r.width == 7);
    CHECK(r.height == 5);
    CHECK(r.values == m.values);
    CHECK(io::read_map(tmp("map.csv"), 0.25).values == m.values);
  }

  TEST_CASE("PGM round trip within half a grey level") {
    const auto m = sample_map();
    double lo = m.values[0], hi = m.values[0];
    for (double v : m.values) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    const double step = (hi - lo) / 65535.0;
    for (auto fmt : {io::PgmFormat::binary, io::PgmFormat::ascii}) {
      const auto p = tmp(fmt == io::PgmFormat::binary ? "bin.pgm" : "asc.pgm");
      io::write_pgm(p, m, fmt);
      CHECK(fs::exists(io::sidecar_path(p)));
      const auto r = io::read_map(p, 1.0);
      CHECK(r.pixel_size_nm == doctest::Approx(0.25));
      REQUIRE(r.size() == m.size());
      for (std::size_t i = 0; i < m.size(); ++i)
        CHECK(std::abs(r.values[i] - m.values[i]) <= 0.5 * step * (1 + 1e-9));
    }
  }

  TEST_CASE("binary PGM header") {
    const auto p = tmp("hdr.pgm");
    io::write_pgm(p, sample_map(), io::PgmFormat::binary);
    std::ifstream f(p, std::ios::binary);
    std::string magic;
    std::size_t w, h, maxval;
    f >> magic >> w >> h >> maxval;
    CHECK(magic == "P5");
    CHECK(w == 7);
    CHECK(h == 5);
    CHECK(maxval == 65535);
    CHECK(fs::file_size(p) >= 7 * 5 * 2);
  }

  TEST_CASE("flat maps survive quantisation") {
    auto m = PhaseMap::zeros(3, 3, 0.3);
    std::fill(m.values.begin(), m.values.end(), 0.004);
    io::write_pgm(tmp("flat.pgm"), m, io::PgmFormat::ascii);
    for (double v : io::read_pgm(tmp("flat.pgm")).values)
      CHECK(v == doctest::Approx(0.004));
  }

  TEST_CASE("errors") {
    CHECK_THROWS_AS(io::read_csv("/nonexistent/map.csv", 0.3), ConfigurationError);
    std::ofstream(tmp("ragged.csv")) << "1,2,3\n4,5\n";
    CHECK_THROWS_AS(io::read_csv(tmp("ragged.csv"), 0.3), ConfigurationError);
    io::write_pgm(tmp("nosidecar.pgm"), sample_map(), io::PgmFormat::binary);
    fs::remove(io::sidecar_path(tmp("nosidecar.pgm")));
    CHECK_THROWS_AS(io::read_pgm(tmp("nosidecar.pgm")), ConfigurationError);
    std::ofstream(tmp("map.tif")) << "x";
    CHECK_THROWS_AS(io::read_map(tmp("map.tif"), 0.3), ConfigurationError);
  }
}
