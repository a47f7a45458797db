#include "eaem/plasmon_chain.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <sstream>

#include <Eigen/Dense>

#include "eaem/constants.hpp"
#include "eaem/errors.hpp"

namespace eaem {

void PlasmonChain::validate() const {
  if (sites < 2)
    throw ConfigurationError("plasmon chain needs at least two sites");
  if (!(coupling >= 0.0) || !(onsite > 0.0) || !(spacing > 0.0) || !(mass > 0.0))
    throw ConfigurationError("plasmon chain needs C >= 0 and positive C', a, m");
}

double PlasmonChain::bare_frequency() const { return std::sqrt(onsite / mass); }

double PlasmonChain::frequency_squared(double k) const {
  return (2.0 * coupling * (1.0 - std::cos(k * spacing)) + onsite) / mass;
}

double PlasmonChain::wavenumber(std::size_t n) const {
  const double N = static_cast<double>(sites);
  double m = static_cast<double>(n % sites);
  if (m > N / 2.0)
    m -= N;
  return 2.0 * constants::pi * m / (N * spacing);
}

namespace {

struct Spectrum {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd eigenvectors;
  /// [first, last) column ranges of numerically degenerate eigenvalues.
  std::vector<std::pair<Eigen::Index, Eigen::Index>> clusters;
};

Spectrum diagonalise(const PlasmonChain& chain) {
  chain.validate();
  const auto n = static_cast<Eigen::Index>(chain.sites);
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index s = 0; s < n; ++s) {
    K(s, s) += 2.0 * chain.coupling + chain.onsite;
    K(s, (s + 1) % n) -= chain.coupling;
    K(s, (s + n - 1) % n) -= chain.coupling;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(K);
  if (solver.info() != Eigen::Success)
    throw NumericError("plasmon chain diagonalisation did not converge");

  Spectrum sp;
  sp.eigenvalues = solver.eigenvalues();
  sp.eigenvectors = solver.eigenvectors();
  const double scale = sp.eigenvalues.cwiseAbs().maxCoeff();
  Eigen::Index first = 0;
  for (Eigen::Index j = 1; j <= n; ++j) {
    if (j == n || sp.eigenvalues(j) - sp.eigenvalues(j - 1) > 1e-10 * scale) {
      sp.clusters.emplace_back(first, j);
      first = j;
    }
  }
  return sp;
}

/// Squared norm of the projection of plane wave n onto each cluster.
std::vector<double> cluster_weights(const PlasmonChain& chain, const Spectrum& sp, std::size_t n) {
  const auto size = static_cast<Eigen::Index>(chain.sites);
  Eigen::VectorXcd plane(size);
  const double k = chain.wavenumber(n);
  for (Eigen::Index s = 0; s < size; ++s)
    plane(s) = std::polar(1.0 / std::sqrt(static_cast<double>(size)),
                          k * chain.spacing * static_cast<double>(s));
  const Eigen::VectorXcd coeff = sp.eigenvectors.transpose().cast<std::complex<double>>() * plane;
  std::vector<double> weights;
  for (const auto& [a, b] : sp.clusters)
    weights.push_back(coeff.segment(a, b - a).squaredNorm());
  return weights;
}

} // namespace

std::vector<ChainMode> plasmon_chain_modes(const PlasmonChain& chain) {
  const Spectrum sp = diagonalise(chain);
  std::vector<ChainMode> modes;
  for (std::size_t n = 0; n < chain.sites; ++n) {
    const auto w = cluster_weights(chain, sp, n);
    const auto best = static_cast<std::size_t>(std::max_element(w.begin(), w.end()) - w.begin());
    const double lambda = sp.eigenvalues(sp.clusters[best].first);
    modes.push_back({n, chain.wavenumber(n), std::sqrt(lambda / chain.mass)});
  }
  return modes;
}

double weak_coupling_operator_overlap(const PlasmonChain& chain, std::size_t mode_index) {
  if (mode_index >= chain.sites) {
    std::ostringstream msg;
    msg << "mode index " << mode_index << " out of range for " << chain.sites << " sites";
    throw ConfigurationError(msg.str());
  }
  const Spectrum sp = diagonalise(chain);
  const auto w = cluster_weights(chain, sp, mode_index);
  const auto best = static_cast<std::size_t>(std::max_element(w.begin(), w.end()) - w.begin());
  const double omega = std::sqrt(sp.eigenvalues(sp.clusters[best].first) / chain.mass);

  // c_k^dag = u A_k^dag + v A_{-k}, with A_k^dag the plane-wave sum of bare
  // creation operators; only the u part survives in the one-excitation overlap.
  const double r = omega / chain.bare_frequency();
  const double u = 0.5 * (std::sqrt(r) + 1.0 / std::sqrt(r));
  const double v = 0.5 * (std::sqrt(r) - 1.0 / std::sqrt(r));
  return w[best] * u * u / (u * u + v * v);
}

} // namespace eaem
