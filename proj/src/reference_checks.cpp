#include "eaem/reference_checks.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "eaem/constants.hpp"
#include "eaem/elastic_speckle.hpp"
#include "eaem/imaging.hpp"
#include "eaem/inelastic.hpp"
#include "eaem/kinematics.hpp"
#include "eaem/plasmon_chain.hpp"
#include "eaem/protocol.hpp"
#include "eaem/rng.hpp"
#include "eaem/specimen.hpp"
#include "eaem/statistics.hpp"

namespace eaem::reference {

namespace {

std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(5) << v;
  return s.str();
}

Item make(std::string label, double value, double target, double tolerance, Item::Kind kind) {
  Item it;
  it.label = std::move(label);
  it.value = value;
  it.target = target;
  it.tolerance = tolerance;
  it.kind = kind;
  switch (kind) {
  case Item::Kind::relative:
    it.pass = std::abs(value / target - 1.0) <= tolerance;
    break;
  case Item::Kind::absolute:
    it.pass = std::abs(value - target) <= tolerance;
    break;
  case Item::Kind::at_least:
    it.pass = value >= target;
    break;
  case Item::Kind::at_most:
    it.pass = value <= target;
    break;
  case Item::Kind::flag:
    it.pass = value != 0.0;
    break;
  }
  return it;
}

template <class F>
CriterionResult timed(int id, std::string title, F&& body) {
  const auto start = std::chrono::steady_clock::now();
  CriterionResult r;
  r.id = id;
  r.title = std::move(title);
  body(r.items);
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

const BeamParameters& beam300() {
  static const BeamParameters beam = electron_parameters(300.0);
  return beam;
}

} // namespace

Item relative(std::string label, double value, double target, double tolerance) {
  return make(std::move(label), value, target, tolerance, Item::Kind::relative);
}
Item absolute(std::string label, double value, double target, double tolerance) {
  return make(std::move(label), value, target, tolerance, Item::Kind::absolute);
}
Item at_least(std::string label, double value, double bound) {
  return make(std::move(label), value, bound, 0.0, Item::Kind::at_least);
}
Item at_most(std::string label, double value, double bound) {
  return make(std::move(label), value, bound, 0.0, Item::Kind::at_most);
}
Item flag(std::string label, bool ok) {
  return make(std::move(label), ok ? 1.0 : 0.0, 1.0, 0.0, Item::Kind::flag);
}

std::string Item::describe() const {
  std::string s = label;
  switch (kind) {
  case Kind::relative:
    s += " = " + fmt(value) + " (" + fmt(target) + " +-" + fmt(tolerance * 100.0) + "%)";
    break;
  case Kind::absolute:
    s += " = " + fmt(value) + " (" + fmt(target) + " +-" + fmt(tolerance) + ")";
    break;
  case Kind::at_least:
    s += " = " + fmt(value) + " (>= " + fmt(target) + ")";
    break;
  case Kind::at_most:
    s += " = " + fmt(value) + " (<= " + fmt(target) + ")";
    break;
  case Kind::flag:
    break;
  }
  return s + (pass ? " ok" : " MISS");
}

bool CriterionResult::pass() const {
  return std::all_of(items.begin(), items.end(), [](const Item& i) { return i.pass; });
}

std::string CriterionResult::line() const {
  std::ostringstream s;
  s << (pass() ? "PASS" : "FAIL") << " " << std::setw(2) << id << " " << title << ": ";
  for (std::size_t i = 0; i < items.size(); ++i)
    s << (i ? "; " : "") << items[i].describe();
  return s.str();
}

CriterionResult check_kinematics(const Settings&) {
  return timed(1, "Kinematics", [](std::vector<Item>& out) {
    const auto& beam = beam300();
    const auto model = InelasticModel::from_beam(beam, 20.0);
    out.push_back(relative("k [1/nm]", beam.wavenumber_per_nm, 3.2e3, 0.01));
    out.push_back(relative("lambda [pm]", beam.wavelength_pm, 2.0, 0.01));
    out.push_back(relative("theta_E [urad]", model.theta_e * 1e6, 41.0, 0.02));
    out.push_back(relative("b_max [nm]", model.b_max_nm, 7.6, 0.03));
    out.push_back(relative("theta_cut [mrad]", model.theta_cut * 1e3, 9.1, 0.02));
  });
}

CriterionResult check_inelastic_statistics(const Settings& s) {
  return timed(2, "Inelastic angular statistics", [&](std::vector<Item>& out) {
    const auto model = InelasticModel::from_beam(beam300(), 20.0);
    const std::size_t n = s.quick ? 1'000'000 : 10'000'000;
    std::vector<double> samples(n);
    auto stream = rng::make_stream(s.seed, rng::Domain::angle_sampling, 0);
    double sum = 0.0;
    for (double& v : samples) {
      v = sample_angle(model, stream.uniform());
      sum += v;
    }
    std::sort(samples.begin(), samples.end());
    const double median = 0.5 * (samples[(n - 1) / 2] + samples[n / 2]);
    const double d = stats::ks_statistic(samples, [&](double t) { return angular_fraction(model, t); });
    const double p = stats::ks_pvalue(d, n);
    out.push_back(relative("median [mrad]", median * 1e3, 0.61, 0.02));
    out.push_back(relative("mean [mrad]", sum / static_cast<double>(n) * 1e3, 1.8, 0.03));
    out.push_back(at_least("KS p-value", p, 0.01));
  });
}

CriterionResult check_phase_errors(const Settings&) {
  return timed(3, "Phase-error formulas", [](std::vector<Item>& out) {
    const auto& beam = beam300();
    out.push_back(relative("k d01 theta_bar [rad]", phase_error_focused(beam, 1.0, 1.8e-3), 5.7, 0.03));
    out.push_back(relative("k d01 theta_tilde^2/2 [mrad]",
                           phase_error_diverging_magnitude(beam, 30.0, 0.61e-3) * 1e3, 18.0, 0.05));
    out.push_back(relative("k d01 theta_bar^2/2 [mrad]",
                           phase_error_diverging_magnitude(beam, 30.0, 1.8e-3) * 1e3, 155.0, 0.05));
  });
}

CriterionResult check_protocol_scaling(const Settings& s) {
  return timed(4, "Protocol scaling", [&](std::vector<Item>& out) {
    const auto& beam = beam300();
    const std::size_t dose = 1'000'000;
    const auto none = ErrorModel::none(beam);
    for (std::size_t k : {1, 10, 100}) {
      const std::size_t reps = s.quick ? 300 : 6000;
      const auto v = protocol_variance(k, dose, 0.0, none, Estimator::linear, reps, s.seed + k, s.threads);
      out.push_back(relative("Var[Y] k=" + std::to_string(k) + " x kN", v.variance * static_cast<double>(k * dose),
                             1.0, 0.05));
    }
    {
      const double p_d = 0.052;
      const std::size_t k = 19;
      const auto em = ErrorModel::make(beam, p_d, 0.0, 30.0, FailurePolicy::discard);
      const std::size_t reps = s.quick ? 150 : 1500;
      const auto v = protocol_variance(k, dose, 0.0, em, Estimator::linear, reps, s.seed + 1000, s.threads);
      out.push_back(relative("Var[Y'] k=19 p_d=0.052 / (e^{kp}/kN)",
                             v.variance / loss_adjusted_variance(k, p_d, static_cast<double>(dose)), 1.0, 0.10));
    }
    for (double p : {0.052, 4.5e-3}) {
      const auto opt = optimal_k(p);
      const auto numeric = minimise_variance_k(p);
      out.push_back(absolute("argmin_k e^{kp}/k at p=" + fmt(p), static_cast<double>(numeric),
                             static_cast<double>(opt.k_m), 1.0));
    }
    out.push_back(absolute("k_m(0.052)", static_cast<double>(optimal_k(0.052).k_m), 19.0, 0.0));
    out.push_back(relative("gain sqrt(k_m/e)", optimal_k(0.052).contrast_gain, 2.7, 0.03));
    out.push_back(absolute("k_m(4.5e-3)", static_cast<double>(optimal_k(4.5e-3).k_m), 222.0, 1.0));
  });
}

CriterionResult check_speckle_law(const Settings& s) {
  return timed(5, "Speckle law", [&](std::vector<Item>& out) {
    const auto& beam = beam300();
    Composition carbon;
    carbon.thickness_nm = 30.0;
    carbon.number_density_per_nm3[index(Element::C)] = 6.4;
    const auto src = AmplitudeSource::analytic();
    const auto geom = ProbeGeometry::focused(beam, 0.5);
    const double theta = 10e-3;
    const std::size_t configs = s.quick ? 500 : 5000;
    const auto mc = speckle_monte_carlo(carbon, src, geom, beam, theta, configs, s.seed, s.threads);
    const auto analytic = speckle_moments_focused(carbon, src, geom, beam, theta);
    out.push_back(absolute("mean / analytic", mc.mean_intensity / analytic.mean_intensity, 1.0,
                           3.0 * mc.mean_stderr / analytic.mean_intensity));
    out.push_back(absolute("Var/E^2", mc.variance_ratio, 1.0, 0.15));
    out.push_back(at_least("configurations", static_cast<double>(configs), 500.0));
  });
}

CriterionResult check_diverging_failure(const Settings& s) {
  return timed(6, "Diverging-beam failure analysis", [&](std::vector<Item>& out) {
    const auto& beam = beam300();
    const auto comp = builtin_composition(30.0);
    const auto geom = ProbeGeometry::diverging_from_half_angle(beam, 40e-3, 22.5);
    const auto tab = AmplitudeSource::load_csv(s.amplitude_table);
    const auto t = speckle_threshold_and_failure(comp, tab, geom, beam);
    out.push_back(relative("tabulated theta_c [mrad]", t.theta_c * 1e3, 71.9, 0.10));
    out.push_back(relative("tabulated p'_d", t.failure_probability, 4.5e-3, 0.25));

    const auto analytic = AmplitudeSource::analytic();
    const auto a = speckle_threshold_and_failure(comp, analytic, geom, beam);
    // Dense scan at a tenth of the bracketing step.
    const double step = 0.05e-3;
    double root = 0.0;
    for (double th = 0.0; th < constants::pi; th += step)
      if (failure_condition_margin(comp, analytic, geom, beam, th) >= 0.0) {
        root = th;
        break;
      }
    out.push_back(absolute("analytic theta_c vs dense scan [mrad]", a.theta_c * 1e3, root * 1e3,
                           step * 1e3));
    out.push_back(absolute("analytic theta_c [mrad]", a.theta_c * 1e3, analytic_theta_c * 1e3, 2e-3));
    out.push_back(relative("analytic p'_d", a.failure_probability, analytic_failure_probability, 1e-3));
  });
}

CriterionResult check_elastic_probability(const Settings& s) {
  return timed(7, "Elastic and inner-shell probability", [&](std::vector<Item>& out) {
    const auto& beam = beam300();
    const auto comp = builtin_composition(30.0);
    const auto tab = AmplitudeSource::load_csv(s.amplitude_table);
    out.push_back(relative("tabulated p_d", total_elastic_probability(comp, tab, beam), 0.052, 0.10));
    out.push_back(relative("inner-shell probability",
                           inner_shell_probability(comp, default_inner_shell_table()), 8.6e-4, 1e-12));
  });
}

CriterionResult check_plasmon_chain(const Settings& s) {
  return timed(8, "Plasmon chain", [&](std::vector<Item>& out) {
    auto stream = rng::make_stream(s.seed, rng::Domain::generic, 8);
    double worst = 0.0;
    const int chains = s.quick ? 6 : 24;
    for (int c = 0; c < chains; ++c) {
      PlasmonChain chain;
      chain.sites = 2 + static_cast<std::size_t>(stream.uniform() * 255.0);
      if (c == 0)
        chain.sites = 256;
      chain.spacing = 0.1 + stream.uniform();
      chain.coupling = 5.0 * stream.uniform();
      chain.onsite = 0.1 + 5.0 * stream.uniform();
      chain.mass = 0.1 + 5.0 * stream.uniform();
      for (const auto& m : plasmon_chain_modes(chain)) {
        const double expected = chain.frequency_squared(m.wavenumber);
        worst = std::max(worst, std::abs(m.frequency * m.frequency / expected - 1.0));
      }
    }
    out.push_back(at_most("max |omega^2/closed form - 1|", worst, 1e-9));
    PlasmonChain weak;
    weak.sites = 64;
    weak.coupling = 1e-3;
    weak.onsite = 1.0;
    out.push_back(at_least("fidelity C/C'=1e-3 N=64 lowest k", weak_coupling_operator_overlap(weak, 1), 0.999));
  });
}

CriterionResult check_imaging(const Settings& s) {
  return timed(9, "Imaging", [&](std::vector<Item>& out) {
    const auto& beam = beam300();
    // Period-10 px sinusoid: the effective phase difference is non-zero over
    // the whole field, so the plasmon contribution to the RMS is resolvable.
    PhantomSpec spec;
    spec.kind = PhantomKind::sinusoid;
    spec.period_px = 10.0;
    ImageJob job;
    job.map = make_phantom(spec);
    job.dose_per_nm2 = 400.0;
    job.k = 36;
    job.errors = ErrorModel::make(beam, 0.0054, 0.10, 30.0);
    job.seed = s.seed;
    job.threads = 1;
    const PhaseMap truth = effective_delta_phi_map(job.map, job.footprints);

    const auto entangled = simulate_entangled_image(job);
    const auto conventional = simulate_conventional_image(job);
    const double rms_ent = rms_difference(entangled.estimate, truth);
    const double rms_conv = rms_difference(conventional, truth);
    out.push_back(at_least("conventional RMS / entangled RMS", rms_conv / rms_ent, 2.0));

    ImageJob clean = job;
    clean.errors = ErrorModel::make(beam, 0.0054, 0.0, 30.0);
    const double rms_clean = rms_difference(simulate_entangled_image(clean).estimate, truth);
    out.push_back(flag("RMS without plasmons " + fmt(rms_clean) + " < with " + fmt(rms_ent),
                       rms_clean < rms_ent));

    ImageJob threaded = job;
    threaded.threads = 4;
    const auto e4 = simulate_entangled_image(threaded);
    const auto c4 = simulate_conventional_image(threaded);
    out.push_back(flag("bit-identical across 1/4 threads",
                       e4.estimate.values == entangled.estimate.values &&
                           e4.spoil_rate.values == entangled.spoil_rate.values &&
                           c4.values == conventional.values));
  });
}

CriterionResult check_composition(const Settings&) {
  return timed(10, "Specimen composition", [](std::vector<Item>& out) {
    const auto mix = derive_composition(0.76, 0.94, 1.35,
                                        stoichiometry_from_residues(reference_residue_table()));
    const auto table = builtin_composition(1.0).number_density_per_nm3;
    for (Element e : all_elements)
      out.push_back(relative(std::string(symbol(e)) + " [1/nm^3]", mix[index(e)], table[index(e)], 0.15));

    const auto water = derive_composition(1.0, 0.94, 0.0, {});
    // 0.94 g/cm^3 / 18.015 g/mol x 6.022e23 / 1e21 nm^3.
    const double oracle = 0.94 / 18.015 * 602.214076;
    out.push_back(relative("pure water O", water[index(Element::O)], oracle, 0.01));
    out.push_back(relative("pure water H", water[index(Element::H)], 2.0 * oracle, 0.01));
  });
}

std::vector<CriterionResult> run_all(const Settings& s) {
  return {check_kinematics(s),       check_inelastic_statistics(s), check_phase_errors(s),
          check_protocol_scaling(s), check_speckle_law(s),          check_diverging_failure(s),
          check_elastic_probability(s), check_plasmon_chain(s),     check_imaging(s),
          check_composition(s)};
}

} // namespace eaem::reference
