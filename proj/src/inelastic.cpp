#include "eaem/inelastic.hpp"

#include <cmath>
#include <sstream>

#include "eaem/errors.hpp"

namespace eaem {

InelasticModel InelasticModel::from_beam(const BeamParameters& beam, double energy_loss_ev,
                                         double probability) {
  if (!(probability >= 0.0 && probability <= 1.0))
    throw DomainError("inelastic probability must lie in [0, 1]");
  InelasticModel m;
  m.energy_loss_ev = energy_loss_ev;
  m.theta_e = characteristic_inelastic_angle(beam, energy_loss_ev);
  m.theta_cut = std::sqrt(2.0 * m.theta_e);
  m.probability = probability;
  m.b_max_nm = 1.0 / (beam.wavenumber_per_nm * m.theta_e);
  return m;
}

namespace {

double log_normaliser(const InelasticModel& m) {
  const double r = m.theta_cut / m.theta_e;
  return std::log1p(r * r);
}

} // namespace

double angular_fraction(const InelasticModel& model, double theta) {
  if (!(theta >= 0.0 && theta <= model.theta_cut)) {
    std::ostringstream msg;
    msg << "scattering angle " << theta << " rad outside [0, " << model.theta_cut << "]";
    throw DomainError(msg.str());
  }
  const double r = theta / model.theta_e;
  return std::log1p(r * r) / log_normaliser(model);
}

double sample_angle(const InelasticModel& model, double u) {
  return model.theta_e * std::sqrt(std::expm1(u * log_normaliser(model)));
}

double median_angle(const InelasticModel& model) { return sample_angle(model, 0.5); }

double mean_angle(const InelasticModel& model) {
  const double c = model.theta_cut;
  const double e = model.theta_e;
  return 2.0 * (c - e * std::atan(c / e)) / log_normaliser(model);
}

double phase_error_focused(const BeamParameters& beam, double d01_nm, double dtheta) {
  if (!(d01_nm > 0.0))
    throw DomainError("region separation must be positive");
  return beam.wavenumber_per_nm * d01_nm * dtheta;
}

double phase_error_diverging(const BeamParameters& beam, double d01_nm, double dtheta, double chi) {
  if (!(d01_nm > 0.0))
    throw DomainError("region separation must be positive");
  return beam.wavenumber_per_nm * d01_nm * dtheta * dtheta * std::cos(chi);
}

double phase_error_diverging_magnitude(const BeamParameters& beam, double d01_nm, double dtheta) {
  if (!(d01_nm > 0.0))
    throw DomainError("region separation must be positive");
  return 0.5 * beam.wavenumber_per_nm * d01_nm * dtheta * dtheta;
}

double delocalization_psf(const InelasticModel& model, double r_nm) {
  if (!(r_nm > 0.0))
    throw DomainError("delocalization profile is singular at r = 0");
  return std::exp(-r_nm / model.b_max_nm) / r_nm;
}

} // namespace eaem
