#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace eaem::reference {

/// One measured quantity against its reference value.
struct Item {
  enum class Kind { relative, absolute, at_least, at_most, flag };

  std::string label;
  double value = 0.0;
  double target = 0.0;
  double tolerance = 0.0;
  Kind kind = Kind::relative;
  bool pass = false;

  std::string describe() const;
};

Item relative(std::string label, double value, double target, double tolerance);
Item absolute(std::string label, double value, double target, double tolerance);
Item at_least(std::string label, double value, double bound);
Item at_most(std::string label, double value, double bound);
Item flag(std::string label, bool ok);

struct CriterionResult {
  int id = 0;
  std::string title;
  std::vector<Item> items;
  double seconds = 0.0;

  bool pass() const;
  /// `PASS  3 Phase-error formulas: ...` on one line.
  std::string line() const;
};

struct Settings {
  std::filesystem::path amplitude_table;
  std::uint64_t seed = 42;
  unsigned threads = 0;
  /// Smaller Monte Carlo budgets for smoke runs; tolerances are unchanged.
  bool quick = false;
};

CriterionResult check_kinematics(const Settings& s);
CriterionResult check_inelastic_statistics(const Settings& s);
CriterionResult check_phase_errors(const Settings& s);
CriterionResult check_protocol_scaling(const Settings& s);
CriterionResult check_speckle_law(const Settings& s);
CriterionResult check_diverging_failure(const Settings& s);
CriterionResult check_elastic_probability(const Settings& s);
CriterionResult check_plasmon_chain(const Settings& s);
CriterionResult check_imaging(const Settings& s);
CriterionResult check_composition(const Settings& s);

std::vector<CriterionResult> run_all(const Settings& s);

/// Frozen outputs of the analytic screened-atom model in the diverging-beam
/// configuration (theta_G = 40 mrad, dz = 22.5 nm, 30 nm builtin specimen).
inline constexpr double analytic_theta_c = 0.07798231;
inline constexpr double analytic_failure_probability = 1.974036e-3;

} // namespace eaem::reference
