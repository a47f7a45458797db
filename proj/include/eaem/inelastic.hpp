#pragma once

#include "eaem/kinematics.hpp"

namespace eaem {

/// Lorentzian angular law of plasmon scattering, normalised on [0, theta_cut].
struct InelasticModel {
  double theta_e = 0.0;
  /// Bethe-ridge cutoff sqrt(2 theta_E).
  double theta_cut = 0.0;
  double energy_loss_ev = 0.0;
  double probability = 0.0;
  /// 1 / (k theta_E).
  double b_max_nm = 0.0;

  static InelasticModel from_beam(const BeamParameters& beam, double energy_loss_ev = 20.0,
                                  double probability = 0.10);
};

/// ln(1 + (theta/theta_E)^2) / ln(1 + (theta_cut/theta_E)^2); DomainError outside [0, theta_cut].
double angular_fraction(const InelasticModel& model, double theta);

/// Exact inverse of angular_fraction for u in [0, 1).
double sample_angle(const InelasticModel& model, double u);

double median_angle(const InelasticModel& model);
/// Closed-form mean of the truncated Lorentzian.
double mean_angle(const InelasticModel& model);

/// k d01 dtheta: path difference of a tilted exit wave across side-by-side regions.
double phase_error_focused(const BeamParameters& beam, double d01_nm, double dtheta);

/// k d01 dtheta^2 cos(chi).
double phase_error_diverging(const BeamParameters& beam, double d01_nm, double dtheta, double chi);
/// Azimuth-free magnitude k d01 dtheta^2 / 2.
double phase_error_diverging_magnitude(const BeamParameters& beam, double d01_nm, double dtheta);

/// exp(-r/b_max) / r, unnormalised. DomainError for r <= 0.
double delocalization_psf(const InelasticModel& model, double r_nm);

} // namespace eaem
