#include "eaem/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <numeric>
#include <optional>
#include <sstream>

#include "eaem/elastic_speckle.hpp"
#include "eaem/errors.hpp"
#include "eaem/image_io.hpp"
#include "eaem/imaging.hpp"
#include "eaem/inelastic.hpp"
#include "eaem/kinematics.hpp"
#include "eaem/parallel.hpp"
#include "eaem/protocol.hpp"
#include "eaem/reference_checks.hpp"
#include "eaem/rng.hpp"
#include "eaem/specimen.hpp"
#include "eaem/statistics.hpp"

namespace eaem::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

constexpr const char* tabulated_file = "elastic_amplitudes_300keV.csv";

fs::path data_dir() {
  if (const char* env = std::getenv("EAEM_DATA_DIR"); env && *env)
    return env;
  return EAEM_DEFAULT_DATA_DIR;
}

AmplitudeSource resolve_amplitudes(const std::string& choice) {
  if (choice == "analytic")
    return AmplitudeSource::analytic();
  if (choice == "tabulated")
    return AmplitudeSource::load_csv(data_dir() / tabulated_file);
  return AmplitudeSource::load_csv(choice);
}

InnerShellTable resolve_inner_shell(const std::string& choice) {
  if (choice == "default")
    return default_inner_shell_table();
  return load_inner_shell_csv(choice);
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

/// Collects output paths and writes the run manifest next to them.
class Outputs {
public:
  explicit Outputs(std::string prefix) : prefix_(std::move(prefix)) {}

  fs::path file(const std::string& suffix) {
    fs::path p = prefix_ + "_" + suffix;
    if (p.has_parent_path())
      fs::create_directories(p.parent_path());
    files_.push_back(p.string());
    return p;
  }
  void also(const fs::path& p) { files_.push_back(p.string()); }

  fs::path write_json(const std::string& suffix, const json& j) {
    const auto p = file(suffix);
    std::ofstream f(p);
    if (!f)
      throw ConfigurationError("cannot write " + p.string());
    f << j.dump(2) << "\n";
    return p;
  }

  void manifest(const std::string& subcommand, const json& parameters,
                std::optional<std::uint64_t> seed) {
    json m;
    m["tool"] = "eaem";
    m["version"] = EAEM_VERSION;
    m["subcommand"] = subcommand;
    m["parameters"] = parameters;
    m["seed"] = seed ? json(*seed) : json(nullptr);
    m["outputs"] = files_;
    const fs::path p = prefix_ + "_manifest.json";
    if (p.has_parent_path())
      fs::create_directories(p.parent_path());
    std::ofstream f(p);
    if (!f)
      throw ConfigurationError("cannot write " + p.string());
    f << m.dump(2) << "\n";
  }

private:
  std::string prefix_;
  std::vector<std::string> files_;
};

/// Seed from --seed when given, otherwise generated and announced.
std::uint64_t resolve_seed(const CLI::Option* opt, std::uint64_t value, std::ostream& err) {
  if (opt->count() > 0)
    return value;
  const auto s = rng::generate_seed();
  err << "seed: " << s << "\n";
  return s;
}

json beam_json(const BeamParameters& b) {
  return {{"kinetic_energy_kev", b.kinetic_energy_kev},
          {"gamma", b.gamma},
          {"beta", b.beta},
          {"wavenumber_per_nm", b.wavenumber_per_nm},
          {"wavelength_pm", b.wavelength_pm},
          {"m_v_squared_kev", b.m_v_squared_kev}};
}

// ---------------------------------------------------------------- params

struct ParamsArgs {
  double energy = 300.0;
  double eloss = 20.0;
  double waist = 0.5;
  double half_angle_mrad = 40.0;
  double defocus = 22.5;
};

int cmd_params(const ParamsArgs& a, std::ostream& out) {
  const auto beam = electron_parameters(a.energy);
  const auto inel = InelasticModel::from_beam(beam, a.eloss);
  const auto focused = ProbeGeometry::focused(beam, a.waist);
  const auto div = ProbeGeometry::diverging_from_half_angle(beam, a.half_angle_mrad * 1e-3, a.defocus);
  json j = beam_json(beam);
  j["theta_e_rad"] = inel.theta_e;
  j["theta_cut_rad"] = inel.theta_cut;
  j["b_max_nm"] = inel.b_max_nm;
  j["focused"] = {{"waist_nm", focused.waist_nm},
                  {"half_angle_rad", focused.half_angle()},
                  {"rayleigh_range_nm", focused.rayleigh_range_nm()}};
  j["diverging"] = {{"half_angle_rad", div.half_angle()},
                    {"waist_nm", div.waist_nm},
                    {"defocus_nm", div.defocus_nm},
                    {"epsilon", div.epsilon()},
                    {"footprint_nm", div.footprint_nm()}};
  out << j.dump(2) << "\n";
  return 0;
}

// ----------------------------------------------------------- composition

struct CompositionArgs {
  double thickness = 30.0;
  double water = 0.76;
  double ice = 0.94;
  double protein = 1.35;
};

json composition_json(const Composition& c) {
  json j;
  for (auto e : all_elements)
    j[std::string(symbol(e))] = c.number_density_per_nm3[index(e)];
  return j;
}

int cmd_composition(const CompositionArgs& a, std::ostream& out) {
  const auto builtin = builtin_composition(a.thickness);
  const auto stoich = stoichiometry_from_residues(reference_residue_table());
  Composition derived;
  derived.thickness_nm = a.thickness;
  derived.number_density_per_nm3 = derive_composition(a.water, a.ice, a.protein, stoich);
  derived.validate();

  json j;
  j["thickness_nm"] = a.thickness;
  j["builtin_per_nm3"] = composition_json(builtin);
  j["derived_per_nm3"] = composition_json(derived);
  json ratio, areal, per_residue;
  for (auto e : all_elements) {
    const auto s = std::string(symbol(e));
    ratio[s] = derived.number_density_per_nm3[index(e)] / builtin.number_density_per_nm3[index(e)];
    areal[s] = builtin.areal_density(e);
    const auto it = stoich.find(e);
    per_residue[s] = it == stoich.end() ? 0.0 : it->second;
  }
  j["derived_over_builtin"] = ratio;
  j["builtin_areal_per_nm2"] = areal;
  j["mean_atoms_per_residue"] = per_residue;
  out << j.dump(2) << "\n";
  return 0;
}

// ------------------------------------------------------------------ xsec

struct XsecArgs {
  double energy = 300.0;
  double thickness = 30.0;
  std::string amplitudes = "analytic";
  std::string inner_shell = "default";
};

int cmd_xsec(const XsecArgs& a, std::ostream& out) {
  const auto beam = electron_parameters(a.energy);
  const auto src = resolve_amplitudes(a.amplitudes);
  const auto comp = builtin_composition(a.thickness);
  const auto shells = resolve_inner_shell(a.inner_shell);

  json elements;
  for (auto e : all_elements) {
    json el{{"cross_section_nm2", elastic_cross_section(src, e, beam)},
            {"forward_amplitude_nm", src.amplitude_nm(e, 0.0, beam)},
            {"inner_shell_nm2", shells[index(e)]}};
    if (!src.is_tabulated())
      el["screening_angle_rad"] = screening_angle(e, beam);
    elements[std::string(symbol(e))] = el;
  }
  const double pd = total_elastic_probability(comp, src, beam);
  json j;
  j["amplitudes"] = src.description();
  j["thickness_nm"] = a.thickness;
  j["elements"] = elements;
  j["elastic_probability"] = pd;
  j["inelastic_probability_estimate"] = inelastic_probability_from_elastic(pd);
  j["inner_shell_probability"] = inner_shell_probability(comp, shells);
  const auto opt = optimal_k(pd);
  j["optimal_k"] = opt.k_m;
  j["contrast_gain"] = opt.contrast_gain;
  out << j.dump(2) << "\n";
  return 0;
}

// --------------------------------------------------------------- speckle

struct SpeckleArgs {
  double energy = 300.0;
  double thickness = 30.0;
  std::string amplitudes = "analytic";
  double waist = 0.5;
  double half_angle_mrad = 40.0;
  double defocus = 22.5;
  double theta_max_mrad = 200.0;
  std::size_t points = 401;
  std::size_t configs = 500;
  double mc_theta_mrad = 10.0;
  std::uint64_t seed = 0;
  std::string out_prefix = "speckle";
};

int cmd_speckle(const SpeckleArgs& a, std::uint64_t seed, unsigned threads, Outputs& files,
                std::ostream& out) {
  if (a.points < 2)
    throw ConfigurationError("--points must be at least 2");
  const auto beam = electron_parameters(a.energy);
  const auto src = resolve_amplitudes(a.amplitudes);
  const auto comp = builtin_composition(a.thickness);
  const auto focused = ProbeGeometry::focused(beam, a.waist);
  const auto div = ProbeGeometry::diverging_from_half_angle(beam, a.half_angle_mrad * 1e-3, a.defocus);

  const double w0 = focused.waist_nm;
  const double w1 = div.waist_nm;
  {
    std::ofstream csv(files.file("curves.csv"));
    csv << "theta_rad,focused_transmitted,focused_speckle_mean,diverging_transmitted,"
           "diverging_speckle_mean,H\n";
    for (std::size_t i = 0; i < a.points; ++i) {
      const double th = a.theta_max_mrad * 1e-3 * static_cast<double>(i) / static_cast<double>(a.points - 1);
      double fmean = 0.0;
      for (auto e : all_elements) {
        const double f = src.amplitude_nm(e, th, beam);
        fmean += 0.5 * std::numbers::pi * comp.areal_density(e) * w0 * w0 * f * f;
      }
      const double h = h_function(comp, src, div, beam, th);
      const double dmean = std::sqrt(0.5 * std::numbers::pi) * beam.wavenumber_per_nm * w1 * w1 * w1 / 2.0 * h;
      csv << num(th) << "," << num(std::norm(transmitted_far_field(focused, th))) << "," << num(fmean)
          << "," << num(std::norm(transmitted_far_field(div, th))) << "," << num(dmean) << ","
          << num(h) << "\n";
    }
  }

  const double pd = total_elastic_probability(comp, src, beam);
  const auto fa = speckle_threshold_and_failure(comp, src, div, beam);
  const double th_mc = a.mc_theta_mrad * 1e-3;
  json j;
  j["amplitudes"] = src.description();
  j["thickness_nm"] = a.thickness;
  json jf{{"waist_nm", w0},
          {"half_angle_rad", focused.half_angle()},
          {"elastic_probability", pd},
          {"optimal_k", optimal_k(pd).k_m},
          {"contrast_gain", optimal_k(pd).contrast_gain}};
  if (a.configs > 0) {
    const auto mc = speckle_monte_carlo(comp, src, focused, beam, th_mc, a.configs, seed, threads);
    const auto theory = speckle_moments_focused(comp, src, focused, beam, th_mc);
    jf["monte_carlo"] = {{"theta_rad", th_mc},
                         {"configurations", mc.configurations},
                         {"mean_intensity", mc.mean_intensity},
                         {"mean_stderr", mc.mean_stderr},
                         {"predicted_mean", theory.mean_intensity},
                         {"variance_over_mean_squared", mc.variance_ratio},
                         {"variance_ratio_stderr", mc.variance_ratio_stderr}};
  }
  j["focused"] = jf;
  j["diverging"] = {{"half_angle_rad", fa.half_angle},
                    {"waist_nm", w1},
                    {"defocus_nm", div.defocus_nm},
                    {"epsilon", fa.epsilon},
                    {"theta_c_rad", fa.theta_c},
                    {"failure_probability", fa.failure_probability},
                    {"optimal_k", optimal_k(fa.failure_probability).k_m},
                    {"contrast_gain", optimal_k(fa.failure_probability).contrast_gain}};
  files.write_json("summary.json", j);
  out << j.dump(2) << "\n";
  return 0;
}

// ------------------------------------------------------------- inelastic

struct InelasticArgs {
  double energy = 300.0;
  double eloss = 20.0;
  std::size_t samples = 1000000;
  std::size_t bins = 200;
  std::size_t cdf_points = 401;
  std::uint64_t seed = 0;
  std::string out_prefix = "inelastic";
};

int cmd_inelastic(const InelasticArgs& a, std::uint64_t seed, unsigned threads, Outputs& files,
                  std::ostream& out) {
  if (a.bins == 0 || a.cdf_points < 2)
    throw ConfigurationError("--bins must be positive and --cdf-points at least 2");
  const auto beam = electron_parameters(a.energy);
  const auto model = InelasticModel::from_beam(beam, a.eloss);

  {
    std::ofstream csv(files.file("cdf.csv"));
    csv << "theta_rad,cdf\n";
    for (std::size_t i = 0; i < a.cdf_points; ++i) {
      const double th = model.theta_cut * static_cast<double>(i) / static_cast<double>(a.cdf_points - 1);
      csv << num(th) << "," << num(angular_fraction(model, th)) << "\n";
    }
  }

  json j{{"energy_kev", a.energy},
         {"energy_loss_ev", a.eloss},
         {"theta_e_rad", model.theta_e},
         {"theta_cut_rad", model.theta_cut},
         {"b_max_nm", model.b_max_nm},
         {"median_rad", median_angle(model)},
         {"mean_rad", mean_angle(model)}};

  if (a.samples > 0) {
    // One stream per block so the sample set is independent of the worker count.
    constexpr std::size_t block = 1 << 16;
    const std::size_t blocks = (a.samples + block - 1) / block;
    std::vector<double> angles(a.samples);
    parallel_for(blocks, threads, [&](std::size_t b) {
      auto stream = rng::make_stream(seed, rng::Domain::angle_sampling, b);
      const std::size_t end = std::min(a.samples, (b + 1) * block);
      for (std::size_t i = b * block; i < end; ++i)
        angles[i] = sample_angle(model, stream.uniform());
    });
    const double mean = std::accumulate(angles.begin(), angles.end(), 0.0) / static_cast<double>(a.samples);
    std::sort(angles.begin(), angles.end());
    const double median = a.samples % 2 ? angles[a.samples / 2]
                                        : 0.5 * (angles[a.samples / 2 - 1] + angles[a.samples / 2]);
    const double d = stats::ks_statistic(angles, [&](double t) { return angular_fraction(model, t); });

    std::vector<std::size_t> counts(a.bins, 0);
    const double width = model.theta_cut / static_cast<double>(a.bins);
    for (double t : angles)
      ++counts[std::min(a.bins - 1, static_cast<std::size_t>(t / width))];
    std::ofstream csv(files.file("histogram.csv"));
    csv << "theta_low_rad,theta_high_rad,count,density,model_density\n";
    for (std::size_t i = 0; i < a.bins; ++i) {
      const double lo = width * static_cast<double>(i), hi = lo + width;
      const double model_mass = angular_fraction(model, hi) - angular_fraction(model, lo);
      csv << num(lo) << "," << num(hi) << "," << counts[i] << ","
          << num(static_cast<double>(counts[i]) / (static_cast<double>(a.samples) * width)) << ","
          << num(model_mass / width) << "\n";
    }
    j["sampled"] = {{"samples", a.samples},
                    {"median_rad", median},
                    {"mean_rad", mean},
                    {"ks_statistic", d},
                    {"ks_pvalue", stats::ks_pvalue(d, a.samples)}};
  }
  files.write_json("summary.json", j);
  out << j.dump(2) << "\n";
  return 0;
}

// -------------------------------------------------------------- protocol

struct ProtocolArgs {
  std::size_t k = 36;
  std::size_t dose = 1000000;
  double dphi = 1e-3;
  double pfail = 0.0;
  double pinel = 0.0;
  double d01 = 30.0;
  double energy = 300.0;
  double eloss = 20.0;
  std::string estimator = "arcsine";
  std::string policy = "randomize";
  std::size_t repetitions = 1;
  std::uint64_t seed = 0;
  std::string out_prefix;
};

int cmd_protocol(const ProtocolArgs& a, std::uint64_t seed, unsigned threads,
                 std::optional<Outputs>& files, std::ostream& out) {
  if (a.k == 0)
    throw ConfigurationError("--k must be positive");
  if (a.repetitions == 0)
    throw ConfigurationError("--repetitions must be positive");
  const auto beam = electron_parameters(a.energy);
  const auto em = ErrorModel::make(beam, a.pfail, a.pinel, a.d01, parse_policy(a.policy), a.eloss);
  em.validate();
  const auto est = parse_estimator(a.estimator);
  const std::size_t processes = a.dose / a.k;
  if (processes == 0)
    throw ConfigurationError("--dose must be at least --k");

  const auto batch = run_process_batch(a.k, a.dphi, em, processes, seed, 0, threads);
  const auto pe = estimate_phase_from_counts(batch.left, batch.usable, a.k, est);
  const double n = static_cast<double>(processes);
  json j{{"k", a.k},
         {"dose", a.dose},
         {"processes", processes},
         {"unused_electrons", a.dose - processes * a.k},
         {"dphi_rad", a.dphi},
         {"estimator", std::string(to_string(est))},
         {"policy", std::string(to_string(em.policy))},
         {"estimate_rad", pe.value},
         {"stderr_rad", pe.standard_error},
         {"usable_processes", batch.usable},
         {"spoil_rate", static_cast<double>(batch.spoiled) / n},
         {"inelastic_events", batch.inelastic_events},
         {"error_free_variance", 1.0 / (static_cast<double>(a.k) * static_cast<double>(a.dose))}};
  if (a.pfail > 0.0) {
    const auto opt = optimal_k(a.pfail);
    j["predicted_variance"] = loss_adjusted_variance(a.k, a.pfail, static_cast<double>(a.dose));
    j["optimal_k"] = opt.k_m;
    j["contrast_gain"] = opt.contrast_gain;
  }
  if (a.repetitions > 1) {
    const auto v = protocol_variance(a.k, a.dose, a.dphi, em, est, a.repetitions, seed + 1, threads);
    j["repetitions"] = {{"count", v.repetitions},
                        {"mean_estimate_rad", v.mean_estimate},
                        {"empirical_variance", v.variance},
                        {"variance_stderr", v.variance_stderr},
                        {"mean_usable", v.mean_usable},
                        {"spoil_rate", v.spoil_rate}};
  }
  if (files)
    files->write_json("result.json", j);
  out << j.dump(2) << "\n";
  return 0;
}

// ----------------------------------------------------------------- image

struct ImageArgs {
  std::string map;
  std::string phantom = "blob-cluster";
  double amplitude = 5e-3;
  std::size_t size = 100;
  double pixel = 0.3;
  double period = 10.0;
  double dose = 400.0;
  std::size_t k = 36;
  double pinel = 0.0;
  double pfail = 0.0;
  double d01 = 30.0;
  double sigma_inner = 0.3;
  double sigma_outer = 1.5;
  double energy = 300.0;
  double eloss = 20.0;
  std::string estimator = "arcsine";
  std::string policy = "randomize";
  std::uint64_t seed = 0;
  double smooth_sigma = 0.0;
  std::string filter = "none";
  std::string format = "all";
  std::string out_prefix = "image";
};

int cmd_image(const ImageArgs& a, std::uint64_t seed, unsigned threads, Outputs& files,
              std::ostream& out) {
  if (a.filter != "none" && a.filter != "laplacian")
    throw ConfigurationError("--filter must be none or laplacian");
  const bool csv = a.format == "csv" || a.format == "all";
  const bool pgm = a.format == "pgm" || a.format == "pgm-ascii" || a.format == "all";
  if (!csv && !pgm)
    throw ConfigurationError("--format must be csv, pgm, pgm-ascii or all");
  const auto pgm_format = a.format == "pgm-ascii" ? io::PgmFormat::ascii : io::PgmFormat::binary;

  const auto beam = electron_parameters(a.energy);
  ImageJob job;
  if (!a.map.empty()) {
    job.map = io::read_map(a.map, a.pixel);
  } else {
    PhantomSpec spec;
    spec.kind = parse_phantom(a.phantom);
    spec.amplitude_rad = a.amplitude;
    spec.width = spec.height = a.size;
    spec.pixel_size_nm = a.pixel;
    spec.period_px = a.period;
    job.map = make_phantom(spec);
  }
  job.dose_per_nm2 = a.dose;
  job.k = a.k;
  job.footprints = {a.sigma_inner, a.sigma_outer, a.d01};
  job.errors = ErrorModel::make(beam, a.pfail, a.pinel, a.d01, parse_policy(a.policy), a.eloss);
  job.estimator = parse_estimator(a.estimator);
  job.seed = seed;
  job.threads = threads;
  job.validate();

  auto save = [&](const std::string& name, const PhaseMap& m) {
    if (csv)
      io::write_csv(files.file(name + ".csv"), m);
    if (pgm) {
      const auto p = files.file(name + ".pgm");
      io::write_pgm(p, m, pgm_format);
      files.also(io::sidecar_path(p));
    }
  };
  auto process = [&](const PhaseMap& m) {
    PhaseMap r = a.smooth_sigma > 0.0 ? gaussian_smooth(m, a.smooth_sigma) : m;
    return a.filter == "laplacian" ? laplacian_filter(r) : r;
  };
  const bool processed = a.smooth_sigma > 0.0 || a.filter != "none";

  const auto effective = effective_delta_phi_map(job.map, job.footprints, threads);
  const auto ent = simulate_entangled_image(job);
  const auto conv = simulate_conventional_image(job);
  save("phantom", job.map);
  save("effective", effective);
  save("entangled", ent.estimate);
  save("conventional", conv);
  save("spoil_rate", ent.spoil_rate);
  if (processed) {
    save("entangled_processed", process(ent.estimate));
    save("conventional_processed", process(conv));
  }

  const double spoil = std::accumulate(ent.spoil_rate.values.begin(), ent.spoil_rate.values.end(), 0.0) /
                       static_cast<double>(ent.spoil_rate.size());
  json j{{"width", job.map.width},
         {"height", job.map.height},
         {"pixel_size_nm", job.map.pixel_size_nm},
         {"electrons_per_pixel", job.electrons_per_pixel()},
         {"processes_per_pixel", ent.processes_per_pixel},
         {"unused_electrons_per_pixel", ent.unused_electrons_per_pixel},
         {"empty_pixels", ent.empty_pixels},
         {"mean_spoil_rate", spoil},
         {"rms_entangled_rad", rms_difference(ent.estimate, effective)},
         {"rms_conventional_rad", rms_difference(conv, effective)}};
  if (processed) {
    const auto ref = process(effective);
    j["rms_entangled_processed_rad"] = rms_difference(process(ent.estimate), ref);
    j["rms_conventional_processed_rad"] = rms_difference(process(conv), ref);
  }
  files.write_json("summary.json", j);
  out << j.dump(2) << "\n";
  return 0;
}

// ------------------------------------------------------- reproduce-paper

struct ReproduceArgs {
  std::uint64_t seed = 42;
  bool quick = false;
  std::string amplitudes = "tabulated";
  std::string out_prefix = "reproduce";
};

int cmd_reproduce(const ReproduceArgs& a, std::uint64_t seed, unsigned threads, Outputs& files,
                  std::ostream& out) {
  reference::Settings s;
  s.seed = seed;
  s.threads = threads;
  s.quick = a.quick;
  s.amplitude_table = a.amplitudes == "tabulated" ? data_dir() / tabulated_file : fs::path(a.amplitudes);

  const auto results = reference::run_all(s);
  std::ostringstream text;
  json criteria = json::array();
  int failed = 0;
  for (const auto& r : results) {
    text << r.line() << "\n";
    out << r.line() << "  (" << num(r.seconds) << " s)\n";
    failed += r.pass() ? 0 : 1;
    json items = json::array();
    for (const auto& it : r.items)
      items.push_back({{"label", it.label},
                       {"value", it.value},
                       {"target", it.target},
                       {"tolerance", it.tolerance},
                       {"pass", it.pass}});
    criteria.push_back({{"id", r.id}, {"title", r.title}, {"pass", r.pass()}, {"items", items}});
  }
  text << failed << " of " << results.size() << " criteria failed\n";
  out << failed << " of " << results.size() << " criteria failed\n";

  {
    std::ofstream f(files.file("report.txt"));
    f << text.str();
  }
  files.write_json("report.json", json{{"seed", seed},
                                       {"quick", a.quick},
                                       {"failed", failed},
                                       {"criteria", criteria}});
  return 0;
}

// ---------------------------------------------------------------- replay

std::vector<std::string> replay_arguments(const fs::path& manifest_path,
                                          const std::string& prefix_override) {
  std::ifstream f(manifest_path);
  if (!f)
    throw ConfigurationError("cannot read manifest " + manifest_path.string());
  json m;
  try {
    m = json::parse(f);
  } catch (const json::exception& e) {
    throw ConfigurationError("malformed manifest: " + std::string(e.what()));
  }
  if (!m.contains("subcommand") || !m.contains("parameters"))
    throw ConfigurationError("manifest lacks subcommand or parameters");

  std::vector<std::string> args{m["subcommand"].get<std::string>()};
  for (const auto& [key, value] : m["parameters"].items()) {
    if (key == "seed")
      continue;
    std::string v;
    if (key == "out-prefix" && !prefix_override.empty())
      v = prefix_override;
    else if (value.is_boolean()) {
      if (value.get<bool>())
        args.push_back("--" + key);
      continue;
    } else if (value.is_string())
      v = value.get<std::string>();
    else
      v = value.dump();
    if (key == "out-prefix" && v.empty())
      continue;
    args.push_back("--" + key);
    args.push_back(v);
  }
  if (!m["seed"].is_null()) {
    args.push_back("--seed");
    args.push_back(std::to_string(m["seed"].get<std::uint64_t>()));
  }
  return args;
}

/// Manifest parameters keyed by long flag name, read back from the parsed app.
json parameters_of(const CLI::App* sub) {
  json p;
  for (const CLI::Option* opt : sub->get_options()) {
    const auto& name = opt->get_lnames();
    if (name.empty() || name.front() == "help" || name.front() == "seed")
      continue;
    const std::string& key = name.front();
    if (opt->get_type_size() == 0) {
      p[key] = opt->count() > 0;
      continue;
    }
    const auto results = opt->results();
    const std::string text = results.empty() ? opt->get_default_str() : results.front();
    // Numbers stay numbers so manifests remain easy to read.
    const auto parsed = json::parse(text, nullptr, false);
    p[key] = !parsed.is_discarded() && parsed.is_number() ? parsed : json(text);
  }
  return p;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Simulation of entanglement-assisted electron microscopy", "eaem"};
  app.set_version_flag("--version", std::string(EAEM_VERSION));

  unsigned threads = 0;
  std::string replay;
  std::string replay_prefix;
  app.add_option("--threads", threads, "Worker threads (0 = all cores); results do not depend on it");
  app.add_option("--replay", replay, "Re-run the command recorded in a manifest");
  app.add_option("--replay-prefix", replay_prefix, "Output prefix for --replay")->needs("--replay");
  app.require_subcommand(0, 1);

  std::function<int()> action;

  auto* p = app.add_subcommand("params", "Beam and probe parameters as JSON");
  ParamsArgs pa;
  p->add_option("--energy", pa.energy, "Kinetic energy [keV]")->capture_default_str();
  p->add_option("--eloss", pa.eloss, "Plasmon energy loss [eV]")->capture_default_str();
  p->add_option("--waist", pa.waist, "Focused waist w0 [nm]")->capture_default_str();
  p->add_option("--half-angle-mrad", pa.half_angle_mrad, "Diverging half-angle [mrad]")->capture_default_str();
  p->add_option("--defocus", pa.defocus, "Diverging defocus [nm]")->capture_default_str();
  p->callback([&] { action = [&] { return cmd_params(pa, out); }; });

  auto* c = app.add_subcommand("composition", "Builtin and derived specimen number densities");
  CompositionArgs ca;
  c->add_option("--thickness", ca.thickness, "Specimen thickness [nm]")->capture_default_str();
  c->add_option("--water", ca.water, "Water mass fraction")->capture_default_str();
  c->add_option("--ice", ca.ice, "Vitreous ice density [g/cm^3]")->capture_default_str();
  c->add_option("--protein", ca.protein, "Protein density [g/cm^3]")->capture_default_str();
  c->callback([&] { action = [&] { return cmd_composition(ca, out); }; });

  auto* x = app.add_subcommand("xsec", "Elastic cross sections and event probabilities");
  XsecArgs xa;
  x->add_option("--energy", xa.energy, "Kinetic energy [keV]")->capture_default_str();
  x->add_option("--thickness", xa.thickness, "Specimen thickness [nm]")->capture_default_str();
  x->add_option("--amplitudes", xa.amplitudes, "analytic, tabulated or a CSV path")->capture_default_str();
  x->add_option("--inner-shell", xa.inner_shell, "default or a CSV path")->capture_default_str();
  x->callback([&] { action = [&] { return cmd_xsec(xa, out); }; });

  auto* s = app.add_subcommand("speckle", "Speckle curves and diverging-beam failure analysis");
  SpeckleArgs sa;
  s->add_option("--energy", sa.energy, "Kinetic energy [keV]")->capture_default_str();
  s->add_option("--thickness", sa.thickness, "Specimen thickness [nm]")->capture_default_str();
  s->add_option("--amplitudes", sa.amplitudes, "analytic, tabulated or a CSV path")->capture_default_str();
  s->add_option("--waist", sa.waist, "Focused waist w0 [nm]")->capture_default_str();
  s->add_option("--half-angle-mrad", sa.half_angle_mrad, "Diverging half-angle [mrad]")->capture_default_str();
  s->add_option("--defocus", sa.defocus, "Diverging defocus [nm]")->capture_default_str();
  s->add_option("--theta-max-mrad", sa.theta_max_mrad, "Upper angle of the curves [mrad]")->capture_default_str();
  s->add_option("--points", sa.points, "Curve samples")->capture_default_str();
  s->add_option("--configs", sa.configs, "Monte Carlo atom configurations (0 = none)")->capture_default_str();
  s->add_option("--mc-theta-mrad", sa.mc_theta_mrad, "Monte Carlo angle [mrad]")->capture_default_str();
  auto* s_seed = s->add_option("--seed", sa.seed, "RNG seed");
  s->add_option("--out-prefix", sa.out_prefix, "Output path prefix")->capture_default_str();
  s->callback([&] {
    action = [&] {
      const auto seed = resolve_seed(s_seed, sa.seed, err);
      Outputs files(sa.out_prefix);
      const int rc = cmd_speckle(sa, seed, threads, files, out);
      files.manifest("speckle", parameters_of(s), seed);
      return rc;
    };
  });

  auto* i = app.add_subcommand("inelastic", "Plasmon angular law and sampling");
  InelasticArgs ia;
  i->add_option("--energy", ia.energy, "Kinetic energy [keV]")->capture_default_str();
  i->add_option("--eloss", ia.eloss, "Plasmon energy loss [eV]")->capture_default_str();
  i->add_option("--samples", ia.samples, "Sampled angles (0 = analytic summary only)")->capture_default_str();
  i->add_option("--bins", ia.bins, "Histogram bins")->capture_default_str();
  i->add_option("--cdf-points", ia.cdf_points, "CDF samples")->capture_default_str();
  auto* i_seed = i->add_option("--seed", ia.seed, "RNG seed");
  i->add_option("--out-prefix", ia.out_prefix, "Output path prefix")->capture_default_str();
  i->callback([&] {
    action = [&] {
      std::optional<std::uint64_t> seed;
      if (ia.samples > 0)
        seed = resolve_seed(i_seed, ia.seed, err);
      Outputs files(ia.out_prefix);
      const int rc = cmd_inelastic(ia, seed.value_or(0), threads, files, out);
      files.manifest("inelastic", parameters_of(i), seed);
      return rc;
    };
  });

  auto* r = app.add_subcommand("protocol", "Entangled k-electron phase measurement");
  ProtocolArgs ra;
  r->add_option("--k", ra.k, "Electrons per process")->capture_default_str();
  r->add_option("--dose", ra.dose, "Total electrons N")->capture_default_str();
  r->add_option("--dphi", ra.dphi, "Phase difference [rad]")->capture_default_str();
  r->add_option("--pfail", ra.pfail, "Elastic failure probability per electron")->capture_default_str();
  r->add_option("--pinel", ra.pinel, "Plasmon probability per electron")->capture_default_str();
  r->add_option("--d01", ra.d01, "Probe separation [nm]")->capture_default_str();
  r->add_option("--energy", ra.energy, "Kinetic energy [keV]")->capture_default_str();
  r->add_option("--eloss", ra.eloss, "Plasmon energy loss [eV]")->capture_default_str();
  r->add_option("--estimator", ra.estimator, "linear or arcsine")->capture_default_str();
  r->add_option("--policy", ra.policy, "randomize or discard")->capture_default_str();
  r->add_option("--repetitions", ra.repetitions, "Repeated measurements for the empirical variance")
      ->capture_default_str();
  auto* r_seed = r->add_option("--seed", ra.seed, "RNG seed");
  r->add_option("--out-prefix", ra.out_prefix, "Write JSON and manifest under this prefix");
  r->callback([&] {
    action = [&] {
      const auto seed = resolve_seed(r_seed, ra.seed, err);
      std::optional<Outputs> files;
      if (!ra.out_prefix.empty())
        files.emplace(ra.out_prefix);
      const int rc = cmd_protocol(ra, seed, threads, files, out);
      if (files)
        files->manifest("protocol", parameters_of(r), seed);
      return rc;
    };
  });

  auto* im = app.add_subcommand("image", "Entangled and conventional phase images");
  ImageArgs ma;
  im->add_option("--map", ma.map, "Input phase map (.csv or .pgm with sidecar); overrides --phantom");
  im->add_option("--phantom", ma.phantom, "disc, shell, sinusoid or blob-cluster")->capture_default_str();
  im->add_option("--amplitude", ma.amplitude, "Phantom amplitude [rad]")->capture_default_str();
  im->add_option("--size", ma.size, "Phantom width and height [px]")->capture_default_str();
  im->add_option("--pixel", ma.pixel, "Pixel size [nm]")->capture_default_str();
  im->add_option("--period", ma.period, "Sinusoid period [px]")->capture_default_str();
  im->add_option("--dose", ma.dose, "Dose [electrons/nm^2]")->capture_default_str();
  im->add_option("--k", ma.k, "Electrons per process")->capture_default_str();
  im->add_option("--pinel", ma.pinel, "Plasmon probability per electron")->capture_default_str();
  im->add_option("--pfail", ma.pfail, "Elastic failure probability per electron")->capture_default_str();
  im->add_option("--d01", ma.d01, "Probe separation [nm]")->capture_default_str();
  im->add_option("--sigma-inner", ma.sigma_inner, "Inner footprint sigma [nm]")->capture_default_str();
  im->add_option("--sigma-outer", ma.sigma_outer, "Outer footprint sigma [nm]")->capture_default_str();
  im->add_option("--energy", ma.energy, "Kinetic energy [keV]")->capture_default_str();
  im->add_option("--eloss", ma.eloss, "Plasmon energy loss [eV]")->capture_default_str();
  im->add_option("--estimator", ma.estimator, "linear or arcsine")->capture_default_str();
  im->add_option("--policy", ma.policy, "randomize or discard")->capture_default_str();
  auto* m_seed = im->add_option("--seed", ma.seed, "RNG seed");
  im->add_option("--smooth-sigma", ma.smooth_sigma, "Gaussian smoothing sigma [nm] (0 = off)")
      ->capture_default_str();
  im->add_option("--filter", ma.filter, "none or laplacian")->capture_default_str();
  im->add_option("--format", ma.format, "csv, pgm, pgm-ascii or all")->capture_default_str();
  im->add_option("--out-prefix", ma.out_prefix, "Output path prefix")->capture_default_str();
  im->callback([&] {
    action = [&] {
      const auto seed = resolve_seed(m_seed, ma.seed, err);
      Outputs files(ma.out_prefix);
      const int rc = cmd_image(ma, seed, threads, files, out);
      files.manifest("image", parameters_of(im), seed);
      return rc;
    };
  });

  auto* rp = app.add_subcommand("reproduce-paper", "Run every reference check and write a report");
  ReproduceArgs pa2;
  auto* rp_seed = rp->add_option("--seed", pa2.seed, "RNG seed");
  rp->add_flag("--quick", pa2.quick, "Reduced Monte Carlo budgets");
  rp->add_option("--amplitudes", pa2.amplitudes, "tabulated or a CSV path")->capture_default_str();
  rp->add_option("--out-prefix", pa2.out_prefix, "Output path prefix")->capture_default_str();
  rp->callback([&] {
    action = [&] {
      const auto seed = resolve_seed(rp_seed, pa2.seed, err);
      Outputs files(pa2.out_prefix);
      const int rc = cmd_reproduce(pa2, seed, threads, files, out);
      files.manifest("reproduce-paper", parameters_of(rp), seed);
      return rc;
    };
  });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (!replay.empty()) {
      if (app.get_subcommands().size() > 0) {
        err << "--replay cannot be combined with a subcommand\n";
        return 2;
      }
      auto replayed = replay_arguments(replay, replay_prefix);
      if (threads > 0) {
        replayed.insert(replayed.begin(), std::to_string(threads));
        replayed.insert(replayed.begin(), "--threads");
      }
      return run(replayed, out, err);
    }
    if (!action) {
      err << app.help();
      return 2;
    }
    return action();
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

} // namespace eaem::cli
