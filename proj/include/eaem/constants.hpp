#pragma once

#include <numbers>

/// Physical constants (CODATA 2018) and the internal unit system.
///
/// Internally lengths are nanometres, angles radians, kinetic energies keV and
/// energy losses eV. Conversions happen only at file and CLI boundaries.
namespace eaem::constants {

inline constexpr double pi = std::numbers::pi;

/// Electron rest energy m0 c^2 [keV].
inline constexpr double electron_rest_energy_kev = 510.99895000;
/// hbar c [keV nm].
inline constexpr double hbar_c_kev_nm = 0.1973269804;
/// Bohr radius [nm].
inline constexpr double bohr_radius_nm = 0.0529177210903;
/// Rydberg energy [eV].
inline constexpr double rydberg_ev = 13.605693122994;
/// Avogadro constant [1/mol].
inline constexpr double avogadro = 6.02214076e23;

inline constexpr double nm_per_pm = 1e-3;
inline constexpr double ev_per_kev = 1e3;

} // namespace eaem::constants
