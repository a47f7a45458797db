#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "eaem/kinematics.hpp"

namespace eaem {

/// Elements present in a frozen-hydrated biological specimen.
enum class Element : std::size_t { H = 0, C, N, O, S };

inline constexpr std::size_t element_count = 5;
inline constexpr std::array<Element, element_count> all_elements{Element::H, Element::C, Element::N,
                                                                 Element::O, Element::S};

template <class T>
using PerElement = std::array<T, element_count>;

inline constexpr std::size_t index(Element e) { return static_cast<std::size_t>(e); }
std::string_view symbol(Element e);
int atomic_number(Element e);
/// Standard atomic weight [g/mol].
double atomic_mass(Element e);
std::optional<Element> parse_element(std::string_view text);

/// Volumetric number densities of a specimen slab of given thickness.
struct Composition {
  PerElement<double> number_density_per_nm3{};
  double thickness_nm = 0.0;

  /// Atoms per nm^2 seen by a beam crossing the slab.
  double areal_density(Element e) const { return number_density_per_nm3[index(e)] * thickness_nm; }
  /// Atoms within an area a0^2 (dimensionless).
  double atoms_per_bohr_area(Element e) const;

  /// Throws ConfigurationError when a density is negative or the thickness is not positive.
  void validate() const;
};

/// Typical frozen-hydrated specimen: H 62, C 6.4, N 1.8, O 28, S 0.067 atoms/nm^3.
Composition builtin_composition(double thickness_nm);

/// Atoms of each element per formula unit of the dry (protein) phase.
using Stoichiometry = std::map<Element, double>;

/// Number densities [atoms/nm^3] of a water + protein mixture with additive
/// partial volumes. Densities are in g/cm^3. `protein` may be empty only when
/// the mixture is pure water; missing elements count as zero.
PerElement<double> derive_composition(double water_mass_fraction, double ice_density,
                                      double protein_density, const Stoichiometry& protein);

/// One amino-acid residue type: occurrence frequency and the residue formula
/// (amino acid minus one water, as incorporated in a chain).
struct ResidueEntry {
  std::string name;
  double frequency_percent;
  PerElement<int> atoms;
};

/// Average amino-acid composition of representative proteins (Doolittle's
/// compilation of sequence databases, 1989).
const std::vector<ResidueEntry>& reference_residue_table();

/// Mean atoms per residue for a residue table (frequencies renormalised).
Stoichiometry stoichiometry_from_residues(const std::vector<ResidueEntry>& table);

/// Screened-atom (Wentzel) amplitude parameters: depends only on Z.
struct AnalyticScreenedAmplitude {};

/// Amplitudes g = f / a0 sampled on a strictly increasing angle grid starting at 0.
struct TabulatedAmplitude {
  std::vector<double> theta_rad;
  PerElement<std::vector<double>> g;
};

/// Source of elastic scattering amplitudes. The analytic model is the default;
/// a tabulated curve (e.g. from a CSV of published amplitudes) overrides it.
class AmplitudeSource {
public:
  AmplitudeSource() = default;

  static AmplitudeSource analytic() { return AmplitudeSource(); }
  /// Validates the grid (starts at 0, strictly increasing, reaches >= 0.2 rad,
  /// g >= 0) and throws ConfigurationError otherwise.
  static AmplitudeSource tabulated(TabulatedAmplitude table);
  /// CSV with header `theta_rad,g_H,g_C,g_N,g_O,g_S`.
  static AmplitudeSource load_csv(const std::filesystem::path& path);

  bool is_tabulated() const { return std::holds_alternative<TabulatedAmplitude>(model_); }
  const TabulatedAmplitude* table() const { return std::get_if<TabulatedAmplitude>(&model_); }
  std::string description() const;

  /// Elastic amplitude f(theta) [nm]. Negative angles are folded to |theta|.
  double amplitude_nm(Element e, double theta, const BeamParameters& beam) const;

private:
  std::variant<AnalyticScreenedAmplitude, TabulatedAmplitude> model_;
};

/// Characteristic screening angle theta_0 = 1 / (k a0 Z^{-1/3}) of the analytic model.
double screening_angle(Element e, const BeamParameters& beam);

/// Total elastic cross section [nm^2], integral of |f|^2 over the sphere.
double elastic_cross_section(const AmplitudeSource& src, Element e, const BeamParameters& beam);

/// Single-scattering probability of an elastic event in the slab.
double total_elastic_probability(const Composition& comp, const AmplitudeSource& src,
                                 const BeamParameters& beam);

/// K- and L-shell ionization cross sections per element [nm^2].
using InnerShellTable = PerElement<double>;

/// Inner-shell table for 300 keV electrons, scaled so that the 30 nm builtin
/// composition gives an aggregate ionization probability of 8.6e-4.
/// Relative weights follow shell occupancy over edge energy.
InnerShellTable default_inner_shell_table();

/// CSV `element,sigma_nm2`. All five elements are required; the error lists
/// the missing ones.
InnerShellTable load_inner_shell_csv(const std::filesystem::path& path);
InnerShellTable inner_shell_table_from_map(const std::map<Element, double>& entries);

double inner_shell_probability(const Composition& comp, const InnerShellTable& table);

/// Inelastic events are about twice as frequent as elastic ones in organic matter.
inline constexpr double inelastic_to_elastic_ratio = 2.0;
/// Default plasmon probability per electron: 2 x 5.2 % rounded to one decimal.
inline constexpr double default_inelastic_probability = 0.10;

inline double inelastic_probability_from_elastic(double elastic_probability) {
  return inelastic_to_elastic_ratio * elastic_probability;
}

} // namespace eaem
