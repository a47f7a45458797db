#include "eaem/elastic_speckle.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

#include <boost/math/quadrature/gauss.hpp>

#include "eaem/constants.hpp"
#include "eaem/errors.hpp"
#include "eaem/parallel.hpp"
#include "eaem/quadrature.hpp"
#include "eaem/rng.hpp"

namespace eaem {

namespace {

constexpr complex I{0.0, 1.0};
constexpr double disc_footprints = 4.0;
constexpr double scan_step = 0.5e-3;
constexpr double root_tolerance = 1e-6;

void require_mode(const ProbeGeometry& geom, ProbeMode mode, const char* what) {
  if (geom.mode != mode)
    throw DomainError(std::string(what) + " requires a " +
                      (mode == ProbeMode::focused ? "focused" : "diverging") + " probe");
}

} // namespace

ProbeGeometry ProbeGeometry::focused(const BeamParameters& beam, double waist_nm) {
  if (!(waist_nm > 0.0))
    throw DomainError("beam waist must be positive");
  ProbeGeometry g;
  g.mode = ProbeMode::focused;
  g.waist_nm = waist_nm;
  g.wavenumber_per_nm = beam.wavenumber_per_nm;
  return g;
}

ProbeGeometry ProbeGeometry::diverging(const BeamParameters& beam, double waist_nm, double defocus_nm) {
  if (!(waist_nm > 0.0) || !(defocus_nm > 0.0))
    throw DomainError("beam waist and defocus must be positive");
  ProbeGeometry g;
  g.mode = ProbeMode::diverging;
  g.waist_nm = waist_nm;
  g.defocus_nm = defocus_nm;
  g.wavenumber_per_nm = beam.wavenumber_per_nm;
  const double eps = g.epsilon();
  if (!(eps > 0.0 && eps < 1.0)) {
    std::ostringstream msg;
    msg << "diverging probe needs 0 < epsilon < 1, got " << eps;
    throw DomainError(msg.str());
  }
  return g;
}

ProbeGeometry ProbeGeometry::diverging_from_half_angle(const BeamParameters& beam,
                                                       double half_angle_rad, double defocus_nm) {
  if (!(half_angle_rad > 0.0))
    throw DomainError("divergence half-angle must be positive");
  return diverging(beam, 2.0 / (beam.wavenumber_per_nm * half_angle_rad), defocus_nm);
}

double ProbeGeometry::epsilon() const {
  return mode == ProbeMode::diverging ? rayleigh_range_nm() / defocus_nm : 0.0;
}

double ProbeGeometry::footprint_nm() const {
  return mode == ProbeMode::diverging ? waist_nm / epsilon() : waist_nm;
}

AtomConfiguration random_atom_configuration(const Composition& comp, const ProbeGeometry& geom,
                                            std::uint64_t seed, std::uint64_t config_index) {
  comp.validate();
  AtomConfiguration cfg;
  cfg.radius_nm = disc_footprints * geom.footprint_nm();
  cfg.seed = seed;
  cfg.index = config_index;
  const double area = constants::pi * cfg.radius_nm * cfg.radius_nm;

  std::size_t total = 0;
  PerElement<std::size_t> counts{};
  for (Element e : all_elements) {
    counts[index(e)] = static_cast<std::size_t>(std::llround(comp.areal_density(e) * area));
    total += counts[index(e)];
  }
  cfg.atoms.reserve(total);

  auto stream = rng::make_stream(seed, rng::Domain::atom_configuration, config_index);
  for (Element e : all_elements) {
    for (std::size_t i = 0; i < counts[index(e)]; ++i) {
      const double r = cfg.radius_nm * std::sqrt(stream.uniform());
      const double phi = 2.0 * constants::pi * stream.uniform();
      cfg.atoms.push_back({r * std::cos(phi), r * std::sin(phi), e});
    }
  }
  return cfg;
}

complex transmitted_far_field(const ProbeGeometry& geom, double theta) {
  const double kw = geom.wavenumber_per_nm * geom.waist_nm;
  return -I * (0.5 * kw * geom.waist_nm) * std::exp(-0.25 * kw * kw * theta * theta);
}

complex scattered_field_focused(const std::vector<Atom>& atoms, const ProbeGeometry& geom,
                                const AmplitudeSource& src, const BeamParameters& beam,
                                double theta) {
  require_mode(geom, ProbeMode::focused, "focused scattered field");
  PerElement<double> f{};
  for (Element e : all_elements)
    f[index(e)] = src.amplitude_nm(e, theta, beam);
  const double inv_w2 = 1.0 / (geom.waist_nm * geom.waist_nm);
  const double kt = geom.wavenumber_per_nm * theta;
  double re = 0.0;
  double im = 0.0;
  for (const Atom& a : atoms) {
    const double w = std::exp(-(a.x_nm * a.x_nm + a.y_nm * a.y_nm) * inv_w2) * f[index(a.element)];
    const double phase = kt * a.x_nm;
    re += w * std::cos(phase);
    im -= w * std::sin(phase);
  }
  return {re, im};
}

complex scattered_field_diverging(const std::vector<Atom>& atoms, const ProbeGeometry& geom,
                                  const AmplitudeSource& src, const BeamParameters& beam,
                                  double theta) {
  require_mode(geom, ProbeMode::diverging, "diverging scattered field");
  const double eps = geom.epsilon();
  if (eps >= 0.1) {
    std::ostringstream msg;
    msg << "diverging scattered field needs epsilon < 0.1, got " << eps;
    throw DomainError(msg.str());
  }
  const double dz = geom.defocus_nm;
  const double a = geom.wavenumber_per_nm / (2.0 * dz);
  double re = 0.0;
  double im = 0.0;
  for (const Atom& s : atoms) {
    const double dx = s.x_nm - dz * theta;
    const double r2 = s.x_nm * s.x_nm + s.y_nm * s.y_nm;
    const double w = std::exp(-eps * a * r2) * src.amplitude_nm(s.element, theta - s.x_nm / dz, beam);
    const double phase = a * (dx * dx + s.y_nm * s.y_nm);
    re += w * std::cos(phase);
    im += w * std::sin(phase);
  }
  return -I * eps * complex(re, im);
}

complex uniform_sheet_focused(const ProbeGeometry& geom, const AmplitudeSource& src, Element e,
                              double areal_density_per_nm2, const BeamParameters& beam,
                              double theta) {
  const double kw = geom.wavenumber_per_nm * geom.waist_nm;
  return constants::pi * src.amplitude_nm(e, theta, beam) * areal_density_per_nm2 * geom.waist_nm *
         geom.waist_nm * std::exp(-0.25 * kw * kw * theta * theta);
}

complex uniform_sheet_diverging_closed_form(const ProbeGeometry& geom, double forward_amplitude_nm,
                                            double areal_density_per_nm2, double theta) {
  const complex denom = 1.0 + I * geom.epsilon();
  const double t = theta / geom.half_angle();
  return areal_density_per_nm2 * constants::pi * geom.waist_nm * geom.waist_nm *
         forward_amplitude_nm / denom * std::exp(-t * t / denom);
}

complex uniform_sheet_diverging(const ProbeGeometry& geom, const AmplitudeSource& src, Element e,
                                double areal_density_per_nm2, const BeamParameters& beam,
                                double theta) {
  require_mode(geom, ProbeMode::diverging, "uniform diverging sheet");
  const double eps = geom.epsilon();
  const double dz = geom.defocus_nm;
  const double a = geom.wavenumber_per_nm / (2.0 * dz);
  const complex y_integral = std::sqrt(constants::pi / (a * (eps - I)));

  // Gaussian envelope exp(-eps a x^2) truncated at e^-40.
  const double half_width = std::sqrt(40.0 / (eps * a));
  const double shift = std::abs(dz * theta);
  const double span_phase = 2.0 * a * (half_width + shift) * (half_width + shift);
  const auto pieces = static_cast<std::size_t>(std::max(64.0, std::ceil(span_phase / 10.0)));
  const double h = 2.0 * half_width / static_cast<double>(pieces);

  const auto integrand = [&](double x, bool imaginary) {
    const double dx = x - dz * theta;
    const double w = src.amplitude_nm(e, theta - x / dz, beam) * std::exp(-eps * a * x * x);
    const double phase = a * dx * dx;
    return w * (imaginary ? std::sin(phase) : std::cos(phase));
  };
  quadrature::Options opts;
  opts.relative_tolerance = 1e-9;
  double re = 0.0;
  double im = 0.0;
  for (std::size_t p = 0; p < pieces; ++p) {
    const double lo = -half_width + h * static_cast<double>(p);
    const double hi = lo + h;
    re += quadrature::integrate([&](double x) { return integrand(x, false); }, lo, hi, opts,
                                "uniform sheet (real part)").value;
    im += quadrature::integrate([&](double x) { return integrand(x, true); }, lo, hi, opts,
                                "uniform sheet (imaginary part)").value;
  }
  return -I * eps * areal_density_per_nm2 * y_integral * complex(re, im);
}

SpeckleMoments speckle_moments_focused(const Composition& comp, const AmplitudeSource& src,
                                       const ProbeGeometry& geom, const BeamParameters& beam,
                                       double theta) {
  require_mode(geom, ProbeMode::focused, "speckle moments");
  if (theta < 3.0 * geom.half_angle()) {
    std::ostringstream msg;
    msg << "speckle law needs theta >= 3 theta_G = " << 3.0 * geom.half_angle() << " rad, got "
        << theta;
    throw DomainError(msg.str());
  }
  comp.validate();
  double mean = 0.0;
  for (Element e : all_elements) {
    const double f = src.amplitude_nm(e, theta, beam);
    mean += 0.5 * constants::pi * comp.areal_density(e) * geom.waist_nm * geom.waist_nm * f * f;
  }
  return {mean, mean * mean};
}

SpeckleSample speckle_monte_carlo(const Composition& comp, const AmplitudeSource& src,
                                  const ProbeGeometry& geom, const BeamParameters& beam,
                                  double theta, std::size_t configurations, std::uint64_t seed,
                                  unsigned threads) {
  if (configurations < 2)
    throw ConfigurationError("speckle Monte Carlo needs at least two configurations");
  std::vector<double> intensity(configurations);
  parallel_for(configurations, threads, [&](std::size_t i) {
    const auto cfg = random_atom_configuration(comp, geom, seed, i);
    intensity[i] = std::norm(scattered_field_focused(cfg.atoms, geom, src, beam, theta));
  });

  const double n = static_cast<double>(configurations);
  double mean = 0.0;
  for (double v : intensity)
    mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : intensity)
    var += (v - mean) * (v - mean);
  var /= n - 1.0;

  SpeckleSample out;
  out.configurations = configurations;
  out.mean_intensity = mean;
  out.mean_stderr = std::sqrt(var / n);
  out.variance = var;
  if (mean > 0.0) {
    out.variance_ratio = var / (mean * mean);
    // Influence function of var/mean^2.
    double s2 = 0.0;
    for (double v : intensity) {
      const double d = v - mean;
      const double psi = (d * d - var) / (mean * mean) - 2.0 * var * d / (mean * mean * mean);
      s2 += psi * psi;
    }
    out.variance_ratio_stderr = std::sqrt(s2 / (n - 1.0) / n);
  }
  return out;
}

namespace {

/// Int_{v0}^{v1} exp(-2 ((theta - sign v)/theta_G)^2) g(v)^2 dv for a piecewise-linear
/// table g, one 7-point Gauss-Legendre rule per table segment.
double tabulated_window(const std::vector<double>& grid, const std::vector<double>& g,
                        double theta, double tg, double sign, double v0, double v1) {
  using rule = boost::math::quadrature::gauss<double, 7>;
  const auto weight = [&](double v) {
    const double t = (theta - sign * v) / tg;
    return std::exp(-2.0 * t * t);
  };
  double sum = 0.0;
  if (v1 > grid.back()) {
    const double tail = g.back() * g.back();
    const double a = std::max(v0, grid.back());
    sum += tail * rule::integrate(weight, a, v1);
    v1 = grid.back();
  }
  if (v0 >= v1)
    return sum;
  auto i = static_cast<std::size_t>(std::upper_bound(grid.begin(), grid.end(), v0) - grid.begin());
  i = i == 0 ? 0 : i - 1;
  for (; i + 1 < grid.size() && grid[i] < v1; ++i) {
    const double a = std::max(v0, grid[i]);
    const double b = std::min(v1, grid[i + 1]);
    if (b <= a)
      continue;
    const double slope = (g[i + 1] - g[i]) / (grid[i + 1] - grid[i]);
    sum += rule::integrate(
        [&](double v) {
          const double gv = g[i] + slope * (v - grid[i]);
          return weight(v) * gv * gv;
        },
        a, b);
  }
  return sum;
}

} // namespace

double h_function(const Composition& comp, const AmplitudeSource& src, const ProbeGeometry& geom,
                  const BeamParameters& beam, double theta) {
  require_mode(geom, ProbeMode::diverging, "H function");
  comp.validate();
  const double tg = geom.half_angle();
  const double a0 = constants::bohr_radius_nm;
  // Integrate over the amplitude argument u = theta - gamma, u in theta +- 5 theta_G.
  const double lo = theta - 5.0 * tg;
  const double hi = theta + 5.0 * tg;
  quadrature::Options opts;
  opts.relative_tolerance = 1e-9;
  const std::array<double, 1> fold{0.0};
  double h = 0.0;
  for (Element e : all_elements) {
    const double n_bohr = comp.atoms_per_bohr_area(e);
    if (n_bohr == 0.0)
      continue;
    double G = 0.0;
    if (const auto* t = src.table()) {
      const auto& g = t->g[index(e)];
      if (hi > 0.0)
        G += tabulated_window(t->theta_rad, g, theta, tg, 1.0, std::max(lo, 0.0), hi);
      if (lo < 0.0)
        G += tabulated_window(t->theta_rad, g, theta, tg, -1.0, std::max(-hi, 0.0), -lo);
    } else {
      const auto integrand = [&](double u) {
        const double t = (theta - u) / tg;
        const double g = src.amplitude_nm(e, u, beam) / a0;
        return std::exp(-2.0 * t * t) * g * g;
      };
      G = quadrature::integrate_piecewise(integrand, lo, hi, fold, opts,
                                          "H function " + std::string(symbol(e)))
              .value;
    }
    h += n_bohr * G;
  }
  return h;
}

double failure_condition_margin(const Composition& comp, const AmplitudeSource& src,
                                const ProbeGeometry& geom, const BeamParameters& beam,
                                double theta) {
  const double tg = geom.half_angle();
  const double h = h_function(comp, src, geom, beam, theta);
  if (!(h > 0.0))
    return -std::numeric_limits<double>::infinity();
  const double t = theta / tg;
  return std::log(std::sqrt(constants::pi / 2.0) * tg * h) + 2.0 * t * t;
}

FailureAnalysis speckle_threshold_and_failure(const Composition& comp, const AmplitudeSource& src,
                                              const ProbeGeometry& geom,
                                              const BeamParameters& beam) {
  require_mode(geom, ProbeMode::diverging, "failure analysis");
  const auto margin = [&](double t) { return failure_condition_margin(comp, src, geom, beam, t); };

  double lo = 0.0;
  double hi = -1.0;
  if (margin(0.0) >= 0.0) {
    hi = 0.0;
  } else {
    for (double t = scan_step; t <= constants::pi; t += scan_step) {
      if (margin(t) >= 0.0) {
        hi = t;
        break;
      }
      lo = t;
    }
  }
  if (hi < 0.0)
    throw DomainError("failure condition never met on (0, pi): specimen scatters too weakly");
  if (hi > 0.0) {
    while (hi - lo > root_tolerance) {
      const double mid = 0.5 * (lo + hi);
      (margin(mid) >= 0.0 ? hi : lo) = mid;
    }
  }

  FailureAnalysis out;
  out.theta_c = hi;
  out.epsilon = geom.epsilon();
  out.half_angle = geom.half_angle();
  quadrature::Options opts;
  opts.relative_tolerance = 1e-8;
  static constexpr std::array<double, 6> breaks{0.1, 0.15, 0.2, 0.3, 0.5, 1.0};
  const double integral =
      quadrature::integrate_piecewise(
          [&](double t) { return h_function(comp, src, geom, beam, t) * std::sin(t); }, hi,
          constants::pi, breaks, opts, "failure probability")
          .value;
  out.failure_probability = std::sqrt(8.0 * constants::pi) / out.half_angle * integral;
  return out;
}

} // namespace eaem
