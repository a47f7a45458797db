#pragma once

#include <cstddef>
#include <vector>

namespace eaem {

/// Ring of N harmonic oscillators: nearest-neighbour spring C, on-site spring C'.
struct PlasmonChain {
  std::size_t sites = 2;
  double spacing = 1.0;
  double coupling = 0.0;
  double onsite = 1.0;
  double mass = 1.0;

  /// Throws ConfigurationError unless N >= 2, C >= 0, C' > 0, a > 0, m > 0.
  void validate() const;
  /// Bare oscillator frequency sqrt(C'/m).
  double bare_frequency() const;
  /// Closed-form dispersion [2C(1 - cos ka) + C'] / m.
  double frequency_squared(double wavenumber) const;
  /// k_n = 2 pi n / (N a), folded into (-pi/a, pi/a].
  double wavenumber(std::size_t n) const;
};

struct ChainMode {
  std::size_t index = 0;
  double wavenumber = 0.0;
  double frequency = 0.0;
};

/// Diagonalises the circulant coupling matrix and labels each eigenfrequency
/// with the Fourier index whose plane wave lies in its eigenspace. Returned in
/// Fourier-index order.
std::vector<ChainMode> plasmon_chain_modes(const PlasmonChain& chain);

/// Overlap of the exact one-plasmon creation operator for Fourier index n
/// with the plane-wave superposition of bare-site excitations.
double weak_coupling_operator_overlap(const PlasmonChain& chain, std::size_t mode_index);

} // namespace eaem
