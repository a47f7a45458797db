#pragma once

namespace eaem {

/// Relativistic parameters of the probe electron.
///
/// `m_v_squared_kev` is m v^2 with the relativistic mass m = gamma m0; it is
/// the denominator of the characteristic inelastic angle.
struct BeamParameters {
  double kinetic_energy_kev = 0.0;
  double gamma = 1.0;
  double beta = 0.0;
  double wavenumber_per_nm = 0.0;
  double wavelength_pm = 0.0;
  double m_v_squared_kev = 0.0;

  double wavelength_nm() const { return wavelength_pm * 1e-3; }
};

/// Exact relativistic electron parameters at the given kinetic energy.
/// Throws DomainError for non-positive or non-finite energies.
BeamParameters electron_parameters(double kinetic_energy_kev);

/// theta_E = E / (m v^2) [rad] for an energy loss given in eV.
double characteristic_inelastic_angle(const BeamParameters& beam, double energy_loss_ev);

} // namespace eaem
