#include "eaem/specimen.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "eaem/constants.hpp"
#include "eaem/errors.hpp"
#include "eaem/quadrature.hpp"

namespace eaem {

namespace {

constexpr PerElement<std::string_view> symbols{"H", "C", "N", "O", "S"};
constexpr PerElement<int> atomic_numbers{1, 6, 7, 8, 16};
constexpr PerElement<double> atomic_masses{1.008, 12.011, 14.007, 15.999, 32.06};
constexpr PerElement<double> builtin_densities{62.0, 6.4, 1.8, 28.0, 0.067};
constexpr double water_molar_mass = 2.0 * 1.008 + 15.999;

// g/cm^3 divided by g/mol -> units per nm^3.
constexpr double per_nm3_per_mol_cm3 = constants::avogadro * 1e-21;

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos)
    return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ','))
    out.push_back(trim(cell));
  return out;
}

double parse_double(const std::string& text, const std::string& where) {
  double value = 0.0;
  const auto* begin = text.data();
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end)
    throw ConfigurationError(where + ": cannot parse number '" + text + "'");
  return value;
}

double linear_interpolate(const std::vector<double>& x, const std::vector<double>& y, double t) {
  if (t <= x.front())
    return y.front();
  if (t >= x.back())
    return y.back();
  const auto it = std::upper_bound(x.begin(), x.end(), t);
  const std::size_t hi = static_cast<std::size_t>(it - x.begin());
  const std::size_t lo = hi - 1;
  const double w = (t - x[lo]) / (x[hi] - x[lo]);
  return y[lo] + w * (y[hi] - y[lo]);
}

} // namespace

std::string_view symbol(Element e) { return symbols[index(e)]; }
int atomic_number(Element e) { return atomic_numbers[index(e)]; }
double atomic_mass(Element e) { return atomic_masses[index(e)]; }

std::optional<Element> parse_element(std::string_view text) {
  for (Element e : all_elements)
    if (symbol(e) == text)
      return e;
  return std::nullopt;
}

double Composition::atoms_per_bohr_area(Element e) const {
  return areal_density(e) * constants::bohr_radius_nm * constants::bohr_radius_nm;
}

void Composition::validate() const {
  if (!(thickness_nm > 0.0))
    throw ConfigurationError("specimen thickness must be positive");
  for (Element e : all_elements)
    if (number_density_per_nm3[index(e)] < 0.0)
      throw ConfigurationError("negative number density for " + std::string(symbol(e)));
}

Composition builtin_composition(double thickness_nm) {
  if (!(thickness_nm > 0.0))
    throw DomainError("specimen thickness must be positive");
  Composition c;
  c.number_density_per_nm3 = builtin_densities;
  c.thickness_nm = thickness_nm;
  return c;
}

PerElement<double> derive_composition(double water_mass_fraction, double ice_density,
                                      double protein_density, const Stoichiometry& protein) {
  if (!(water_mass_fraction >= 0.0 && water_mass_fraction <= 1.0))
    throw DomainError("water mass fraction must lie in [0, 1]");
  const double protein_fraction = 1.0 - water_mass_fraction;
  if (water_mass_fraction > 0.0 && !(ice_density > 0.0))
    throw DomainError("ice density must be positive");
  if (protein_fraction > 0.0) {
    if (!(protein_density > 0.0))
      throw DomainError("protein density must be positive");
    if (protein.empty())
      throw ConfigurationError("protein stoichiometry table is empty");
  }

  // Partial volumes add: 1 g of mixture occupies w/rho_ice + (1-w)/rho_protein cm^3.
  double specific_volume = 0.0;
  if (water_mass_fraction > 0.0)
    specific_volume += water_mass_fraction / ice_density;
  if (protein_fraction > 0.0)
    specific_volume += protein_fraction / protein_density;
  const double mixture_density = 1.0 / specific_volume;

  PerElement<double> density{};
  if (water_mass_fraction > 0.0) {
    const double water = water_mass_fraction * mixture_density / water_molar_mass * per_nm3_per_mol_cm3;
    density[index(Element::H)] += 2.0 * water;
    density[index(Element::O)] += water;
  }
  if (protein_fraction > 0.0) {
    double unit_mass = 0.0;
    for (const auto& [e, count] : protein) {
      if (count < 0.0)
        throw ConfigurationError("negative stoichiometry for " + std::string(symbol(e)));
      unit_mass += count * atomic_mass(e);
    }
    if (!(unit_mass > 0.0))
      throw ConfigurationError("protein stoichiometry has zero mass");
    const double units = protein_fraction * mixture_density / unit_mass * per_nm3_per_mol_cm3;
    for (const auto& [e, count] : protein)
      density[index(e)] += units * count;
  }
  return density;
}

const std::vector<ResidueEntry>& reference_residue_table() {
  // Residue formulas, atom counts in Element order (H, C, N, O, S).
  static const std::vector<ResidueEntry> table{
      {"Ala", 7.5, {5, 3, 1, 1, 0}},  {"Arg", 5.2, {12, 6, 4, 1, 0}}, {"Asn", 4.6, {6, 4, 2, 2, 0}},
      {"Asp", 5.2, {5, 4, 1, 3, 0}},  {"Cys", 1.8, {5, 3, 1, 1, 1}},  {"Gln", 4.1, {8, 5, 2, 2, 0}},
      {"Glu", 6.3, {7, 5, 1, 3, 0}},  {"Gly", 7.1, {3, 2, 1, 1, 0}},  {"His", 2.2, {7, 6, 3, 1, 0}},
      {"Ile", 5.5, {11, 6, 1, 1, 0}}, {"Leu", 9.1, {11, 6, 1, 1, 0}}, {"Lys", 5.8, {12, 6, 2, 1, 0}},
      {"Met", 2.8, {9, 5, 1, 1, 1}},  {"Phe", 3.9, {9, 9, 1, 1, 0}},  {"Pro", 5.0, {7, 5, 1, 1, 0}},
      {"Ser", 7.4, {5, 3, 1, 2, 0}},  {"Thr", 6.0, {7, 4, 1, 2, 0}},  {"Trp", 1.3, {10, 11, 2, 1, 0}},
      {"Tyr", 3.3, {9, 9, 1, 2, 0}},  {"Val", 6.9, {9, 5, 1, 1, 0}},
  };
  return table;
}

Stoichiometry stoichiometry_from_residues(const std::vector<ResidueEntry>& table) {
  double total = 0.0;
  for (const auto& r : table)
    total += r.frequency_percent;
  if (table.empty() || !(total > 0.0))
    throw ConfigurationError("residue frequency table is empty");
  Stoichiometry out;
  for (Element e : all_elements) {
    double sum = 0.0;
    for (const auto& r : table)
      sum += r.frequency_percent * r.atoms[index(e)];
    out[e] = sum / total;
  }
  return out;
}

AmplitudeSource AmplitudeSource::tabulated(TabulatedAmplitude table) {
  const auto& theta = table.theta_rad;
  if (theta.size() < 2)
    throw ConfigurationError("amplitude table needs at least two angles");
  if (theta.front() != 0.0)
    throw ConfigurationError("amplitude table must start at theta = 0");
  for (std::size_t i = 1; i < theta.size(); ++i)
    if (!(theta[i] > theta[i - 1]))
      throw ConfigurationError("amplitude table angles must be strictly increasing");
  if (theta.back() < 0.2)
    throw ConfigurationError("amplitude table must extend to at least 0.2 rad");
  for (Element e : all_elements) {
    const auto& g = table.g[index(e)];
    if (g.size() != theta.size())
      throw ConfigurationError("amplitude column for " + std::string(symbol(e)) +
                               " has the wrong length");
    for (double v : g)
      if (!(v >= 0.0) || !std::isfinite(v))
        throw ConfigurationError("amplitude column for " + std::string(symbol(e)) +
                                 " contains a negative or non-finite value");
  }
  AmplitudeSource src;
  src.model_ = std::move(table);
  return src;
}

AmplitudeSource AmplitudeSource::load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in)
    throw ConfigurationError("cannot open amplitude table " + path.string());
  std::string line;
  if (!std::getline(in, line))
    throw ConfigurationError(path.string() + ": empty file");
  const auto header = split_csv(line);
  const std::vector<std::string> expected{"theta_rad", "g_H", "g_C", "g_N", "g_O", "g_S"};
  if (header != expected)
    throw ConfigurationError(path.string() + ": header must be theta_rad,g_H,g_C,g_N,g_O,g_S");

  TabulatedAmplitude table;
  std::size_t line_number = 1;
  while (std::getline(in, line)) {
    ++line_number;
    if (trim(line).empty())
      continue;
    const auto cells = split_csv(line);
    const std::string where = path.string() + ":" + std::to_string(line_number);
    if (cells.size() != expected.size())
      throw ConfigurationError(where + ": expected 6 columns");
    table.theta_rad.push_back(parse_double(cells[0], where));
    for (std::size_t i = 0; i < element_count; ++i)
      table.g[i].push_back(parse_double(cells[i + 1], where));
  }
  return tabulated(std::move(table));
}

std::string AmplitudeSource::description() const {
  if (const auto* t = table()) {
    std::ostringstream s;
    s << "tabulated (" << t->theta_rad.size() << " angles up to " << t->theta_rad.back() << " rad)";
    return s.str();
  }
  return "analytic screened atom";
}

double screening_angle(Element e, const BeamParameters& beam) {
  const double z = atomic_number(e);
  return std::cbrt(z) / (beam.wavenumber_per_nm * constants::bohr_radius_nm);
}

double AmplitudeSource::amplitude_nm(Element e, double theta, const BeamParameters& beam) const {
  theta = std::abs(theta);
  if (const auto* t = table())
    return constants::bohr_radius_nm * linear_interpolate(t->theta_rad, t->g[index(e)], theta);
  const double z = atomic_number(e);
  const double k = beam.wavenumber_per_nm;
  const double theta0 = screening_angle(e, beam);
  return 2.0 * beam.gamma * z / (constants::bohr_radius_nm * k * k * (theta * theta + theta0 * theta0));
}

double elastic_cross_section(const AmplitudeSource& src, Element e, const BeamParameters& beam) {
  const auto integrand = [&](double theta) {
    const double f = src.amplitude_nm(e, theta, beam);
    return f * f * 2.0 * constants::pi * std::sin(theta);
  };
  const std::string label = "elastic cross section " + std::string(symbol(e));
  // A tabulated curve is piecewise linear: integrate node to node.
  if (const auto* t = src.table())
    return quadrature::integrate_piecewise(integrand, 0.0, constants::pi, t->theta_rad, {}, label)
        .value;
  // The integrand peaks near the screening angle (~10 mrad); split there.
  static constexpr std::array<double, 7> breaks{1e-3, 5e-3, 0.02, 0.05, 0.1, 0.3, 1.0};
  return quadrature::integrate_piecewise(integrand, 0.0, constants::pi, breaks, {}, label).value;
}

double total_elastic_probability(const Composition& comp, const AmplitudeSource& src,
                                 const BeamParameters& beam) {
  comp.validate();
  double p = 0.0;
  for (Element e : all_elements) {
    const double n = comp.areal_density(e);
    if (n > 0.0)
      p += n * elastic_cross_section(src, e, beam);
  }
  return p;
}

InnerShellTable default_inner_shell_table() {
  // Shell occupancy / ionization edge [eV]: K shells of C, N, O; L2,3 + K of S.
  const InnerShellTable weights{0.0, 2.0 / 284.0, 2.0 / 401.0, 2.0 / 532.0, 6.0 / 165.0 + 2.0 / 2472.0};
  const Composition reference = builtin_composition(30.0);
  double weighted = 0.0;
  for (Element e : all_elements)
    weighted += reference.areal_density(e) * weights[index(e)];
  const double scale = 8.6e-4 / weighted;
  InnerShellTable table{};
  for (Element e : all_elements)
    table[index(e)] = weights[index(e)] * scale;
  return table;
}

InnerShellTable inner_shell_table_from_map(const std::map<Element, double>& entries) {
  std::string missing;
  InnerShellTable table{};
  for (Element e : all_elements) {
    const auto it = entries.find(e);
    if (it == entries.end()) {
      missing += (missing.empty() ? "" : ", ") + std::string(symbol(e));
      continue;
    }
    if (!(it->second >= 0.0))
      throw ConfigurationError("inner-shell cross section for " + std::string(symbol(e)) +
                               " must be non-negative");
    table[index(e)] = it->second;
  }
  if (!missing.empty())
    throw ConfigurationError("inner-shell table is missing entries for: " + missing);
  return table;
}

InnerShellTable load_inner_shell_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in)
    throw ConfigurationError("cannot open inner-shell table " + path.string());
  std::string line;
  if (!std::getline(in, line) || split_csv(line) != std::vector<std::string>{"element", "sigma_nm2"})
    throw ConfigurationError(path.string() + ": header must be element,sigma_nm2");
  std::map<Element, double> entries;
  std::size_t line_number = 1;
  while (std::getline(in, line)) {
    ++line_number;
    if (trim(line).empty())
      continue;
    const auto cells = split_csv(line);
    const std::string where = path.string() + ":" + std::to_string(line_number);
    if (cells.size() != 2)
      throw ConfigurationError(where + ": expected 2 columns");
    const auto e = parse_element(cells[0]);
    if (!e)
      throw ConfigurationError(where + ": unknown element '" + cells[0] + "'");
    entries[*e] = parse_double(cells[1], where);
  }
  return inner_shell_table_from_map(entries);
}

double inner_shell_probability(const Composition& comp, const InnerShellTable& table) {
  comp.validate();
  double p = 0.0;
  for (Element e : all_elements)
    p += comp.areal_density(e) * table[index(e)];
  return p;
}

} // namespace eaem
