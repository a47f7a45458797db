#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "eaem/protocol.hpp"

namespace eaem {

/// Row-major phase map [rad].
struct PhaseMap {
  std::size_t width = 0;
  std::size_t height = 0;
  double pixel_size_nm = 0.0;
  std::vector<double> values;

  static PhaseMap zeros(std::size_t width, std::size_t height, double pixel_size_nm);

  double& at(std::size_t x, std::size_t y) { return values[y * width + x]; }
  double at(std::size_t x, std::size_t y) const { return values[y * width + x]; }
  std::size_t size() const { return values.size(); }
  /// Throws ConfigurationError on empty maps, bad pixel size or non-finite values.
  void validate() const;
};

/// Gaussian intensity radii of the two probe beams at the entrance surface.
struct ProbeFootprints {
  double sigma_inner_nm = 0.3;
  double sigma_outer_nm = 1.5;
  double d01_nm = 30.0;

  void validate() const;
};

struct ImageJob {
  PhaseMap map;
  double dose_per_nm2 = 400.0;
  std::size_t k = 36;
  ProbeFootprints footprints;
  ErrorModel errors;
  Estimator estimator = Estimator::arcsine;
  std::uint64_t seed = 0;
  unsigned threads = 0;

  /// floor(dose x pixel area).
  std::size_t electrons_per_pixel() const;
  std::size_t processes_per_pixel() const { return electrons_per_pixel() / k; }
  /// Throws ConfigurationError when the per-pixel budget is below k.
  void validate() const;
};

/// Mirror (reflect-101) index into [0, n).
std::ptrdiff_t mirror_index(std::ptrdiff_t i, std::ptrdiff_t n);

/// Inner-footprint weighted mean minus outer-footprint weighted mean at a pixel.
double effective_delta_phi(const PhaseMap& map, const ProbeFootprints& fp, std::size_t x,
                           std::size_t y);
PhaseMap effective_delta_phi_map(const PhaseMap& map, const ProbeFootprints& fp,
                                 unsigned threads = 0);

struct EntangledImage {
  PhaseMap estimate;
  PhaseMap spoil_rate;
  std::size_t processes_per_pixel = 0;
  std::size_t unused_electrons_per_pixel = 0;
  /// Pixels whose every process was discarded; their estimate is set to 0.
  std::size_t empty_pixels = 0;
};

/// Per pixel: floor(N_px/k) k-electron processes against the effective phase
/// difference, stream (seed, entangled_pixel, pixel index).
EntangledImage simulate_entangled_image(const ImageJob& job);

/// Per pixel: effective phase difference plus N(0, 1/N_px) noise, stream
/// (seed, conventional_pixel, pixel index).
PhaseMap simulate_conventional_image(const ImageJob& job);

/// Separable Gaussian, kernel truncated at 4 sigma, mirror boundary; sigma = 0 is the identity.
PhaseMap gaussian_smooth(const PhaseMap& map, double sigma_nm);

/// Negated 5-point Laplacian (4 centre - neighbours), mirror boundary. Needs at least 3x3.
PhaseMap laplacian_filter(const PhaseMap& map);

enum class PhantomKind { disc, shell, sinusoid, blob_cluster };

PhantomKind parse_phantom(std::string_view text);
std::string_view to_string(PhantomKind kind);

struct PhantomSpec {
  PhantomKind kind = PhantomKind::blob_cluster;
  double amplitude_rad = 5e-3;
  std::size_t width = 100;
  std::size_t height = 100;
  double pixel_size_nm = 0.3;
  /// Sinusoid period along x.
  double period_px = 10.0;
};

/// Deterministic synthetic map; amplitude must lie in [0, 0.5] rad.
PhaseMap make_phantom(const PhantomSpec& spec);

/// Root-mean-square of a - b over all pixels.
double rms_difference(const PhaseMap& a, const PhaseMap& b);

} // namespace eaem
