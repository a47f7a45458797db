#include "eaem/kinematics.hpp"

#include <cmath>
#include <sstream>

#include "eaem/constants.hpp"
#include "eaem/errors.hpp"

namespace eaem {

BeamParameters electron_parameters(double kinetic_energy_kev) {
  if (!(kinetic_energy_kev > 0.0) || !std::isfinite(kinetic_energy_kev)) {
    std::ostringstream msg;
    msg << "electron kinetic energy must be positive and finite, got " << kinetic_energy_kev
        << " keV";
    throw DomainError(msg.str());
  }
  const double rest = constants::electron_rest_energy_kev;
  const double total = kinetic_energy_kev + rest;

  BeamParameters p;
  p.kinetic_energy_kev = kinetic_energy_kev;
  p.gamma = total / rest;
  // p c = sqrt(E_r^2 - m0^2 c^4) written without cancellation at small T.
  const double pc_squared = kinetic_energy_kev * (kinetic_energy_kev + 2.0 * rest);
  const double beta_squared = pc_squared / (total * total);
  p.beta = std::sqrt(beta_squared);
  p.wavenumber_per_nm = std::sqrt(pc_squared) / constants::hbar_c_kev_nm;
  p.wavelength_pm = 2.0 * constants::pi / p.wavenumber_per_nm * 1e3;
  p.m_v_squared_kev = p.gamma * rest * beta_squared;
  return p;
}

double characteristic_inelastic_angle(const BeamParameters& beam, double energy_loss_ev) {
  if (!(energy_loss_ev > 0.0))
    throw DomainError("energy loss must be positive");
  return energy_loss_ev / (beam.m_v_squared_kev * constants::ev_per_kev);
}

} // namespace eaem
