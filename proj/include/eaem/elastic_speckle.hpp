#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "eaem/kinematics.hpp"
#include "eaem/specimen.hpp"

namespace eaem {

using complex = std::complex<double>;

enum class ProbeMode { focused, diverging };

/// Gaussian probe. In diverging mode the waist sits `defocus_nm` before the
/// specimen mid-plane and `waist_nm` is w0'.
struct ProbeGeometry {
  ProbeMode mode = ProbeMode::focused;
  double waist_nm = 0.0;
  double defocus_nm = 0.0;
  double wavenumber_per_nm = 0.0;

  static ProbeGeometry focused(const BeamParameters& beam, double waist_nm);
  /// Throws DomainError unless 0 < epsilon < 1.
  static ProbeGeometry diverging(const BeamParameters& beam, double waist_nm, double defocus_nm);
  static ProbeGeometry diverging_from_half_angle(const BeamParameters& beam, double half_angle_rad,
                                                 double defocus_nm);

  /// theta_G = 2 / (k w0).
  double half_angle() const { return 2.0 / (wavenumber_per_nm * waist_nm); }
  /// z_R = k w0^2 / 2.
  double rayleigh_range_nm() const { return 0.5 * wavenumber_per_nm * waist_nm * waist_nm; }
  /// z_R / defocus; zero in focused mode.
  double epsilon() const;
  /// 1/e amplitude radius of the beam in the specimen plane: w0, or w0'/epsilon.
  double footprint_nm() const;
};

struct Atom {
  double x_nm;
  double y_nm;
  Element element;
};

struct AtomConfiguration {
  std::vector<Atom> atoms;
  double radius_nm = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t index = 0;
};

/// Atoms of every element placed i.i.d. uniformly in a disc of radius
/// 4 x footprint; counts are round(areal density x disc area).
AtomConfiguration random_atom_configuration(const Composition& comp, const ProbeGeometry& geom,
                                            std::uint64_t seed, std::uint64_t index);

/// All far-field amplitudes below carry reduced units: the e^{ikr}/r factor is stripped.

/// (-i k w0^2 / 2) exp(-k^2 w0^2 theta^2 / 4).
complex transmitted_far_field(const ProbeGeometry& geom, double theta);

/// Sum_s exp(-(x^2+y^2)/w0^2) f_s(theta) exp(-i k x_s theta).
complex scattered_field_focused(const std::vector<Atom>& atoms, const ProbeGeometry& geom,
                                const AmplitudeSource& src, const BeamParameters& beam, double theta);

/// -i eps Sum_s exp(i k [(x_s - dz theta)^2 + y_s^2] / 2dz) exp(-eps k (x_s^2+y_s^2)/2dz)
///   f_s(theta - x_s/dz). Throws DomainError when eps >= 0.1.
complex scattered_field_diverging(const std::vector<Atom>& atoms, const ProbeGeometry& geom,
                                  const AmplitudeSource& src, const BeamParameters& beam,
                                  double theta);

/// Uniform sheet, focused beam: pi f(theta) n w0^2 exp(-k^2 w0^2 theta^2 / 4).
complex uniform_sheet_focused(const ProbeGeometry& geom, const AmplitudeSource& src, Element e,
                              double areal_density_per_nm2, const BeamParameters& beam, double theta);

/// Uniform sheet, diverging beam, with f replaced by f(0):
/// n pi w0'^2 f(0) / (1 + i eps) exp(-(theta/theta_G)^2 / (1 + i eps)).
complex uniform_sheet_diverging_closed_form(const ProbeGeometry& geom, double forward_amplitude_nm,
                                            double areal_density_per_nm2, double theta);

/// Uniform sheet, diverging beam, keeping the full f: the y integral is done
/// in closed form and the x integral by quadrature.
complex uniform_sheet_diverging(const ProbeGeometry& geom, const AmplitudeSource& src, Element e,
                                double areal_density_per_nm2, const BeamParameters& beam,
                                double theta);

struct SpeckleMoments {
  double mean_intensity = 0.0;
  double variance = 0.0;
};

/// Random-phase sum over atoms: mean = Sum_el (pi/2) n_el w0^2 f_el(theta)^2,
/// variance = mean^2. Throws DomainError for theta < 3 theta_G.
SpeckleMoments speckle_moments_focused(const Composition& comp, const AmplitudeSource& src,
                                       const ProbeGeometry& geom, const BeamParameters& beam,
                                       double theta);

struct SpeckleSample {
  std::size_t configurations = 0;
  double mean_intensity = 0.0;
  double mean_stderr = 0.0;
  double variance = 0.0;
  /// variance / mean^2 and its delta-method standard error.
  double variance_ratio = 0.0;
  double variance_ratio_stderr = 0.0;
};

/// |scattered_field_focused|^2 over `configurations` random atom sets; each
/// set uses stream (seed, index). Thread count does not change the result.
SpeckleSample speckle_monte_carlo(const Composition& comp, const AmplitudeSource& src,
                                  const ProbeGeometry& geom, const BeamParameters& beam,
                                  double theta, std::size_t configurations, std::uint64_t seed,
                                  unsigned threads = 0);

/// H(theta) = Sum_el N_el Int dgamma exp(-2 (gamma/theta_G)^2) g_el^2(theta - gamma),
/// evaluated over the amplitude argument theta - gamma in theta +- 5 theta_G.
double h_function(const Composition& comp, const AmplitudeSource& src, const ProbeGeometry& geom,
                  const BeamParameters& beam, double theta);

/// log(sqrt(pi/2) theta_G H) + 2 (theta/theta_G)^2. Non-negative where the
/// transmitted wave no longer dominates the speckle amplitude.
double failure_condition_margin(const Composition& comp, const AmplitudeSource& src,
                                const ProbeGeometry& geom, const BeamParameters& beam,
                                double theta);

struct FailureAnalysis {
  double theta_c = 0.0;
  double failure_probability = 0.0;
  double epsilon = 0.0;
  double half_angle = 0.0;
};

/// theta_c is the first root of the margin (0.5 mrad scan, bisection to
/// 1 urad); p'_d = sqrt(8 pi)/theta_G Int_{theta_c}^{pi} H sin(theta).
/// Throws DomainError when the margin never turns non-negative.
FailureAnalysis speckle_threshold_and_failure(const Composition& comp, const AmplitudeSource& src,
                                              const ProbeGeometry& geom,
                                              const BeamParameters& beam);

} // namespace eaem
