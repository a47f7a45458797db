#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

#include "eaem/inelastic.hpp"
#include "eaem/kinematics.hpp"
#include "eaem/rng.hpp"

namespace eaem {

/// Charge-qubit memory c0|0> + c1|1>.
struct CpbState {
  std::complex<double> c0;
  std::complex<double> c1;

  /// (|0> + |1>) / sqrt(2).
  static CpbState plus();
  double norm() const { return std::norm(c0) + std::norm(c1); }
  /// Probability of the |<-> = (|0> + i|1>)/sqrt(2) readout outcome.
  double probability_left() const;
};

/// c1 <- c1 exp(i (dphi + injected_error)).
CpbState single_electron_update(const CpbState& state, double dphi, double injected_error);

enum class FailurePolicy { randomize, discard };
enum class Estimator { linear, arcsine };

std::string_view to_string(FailurePolicy p);
std::string_view to_string(Estimator e);
FailurePolicy parse_policy(std::string_view text);
Estimator parse_estimator(std::string_view text);

struct ErrorModel {
  double p_fail = 0.0;
  double p_inel = 0.0;
  double d01_nm = 30.0;
  BeamParameters beam{};
  InelasticModel inelastic{};
  FailurePolicy policy = FailurePolicy::randomize;

  static ErrorModel none(const BeamParameters& beam);
  /// Plasmon angles follow the Lorentzian law at `energy_loss_ev`.
  static ErrorModel make(const BeamParameters& beam, double p_fail, double p_inel, double d01_nm,
                         FailurePolicy policy = FailurePolicy::randomize,
                         double energy_loss_ev = 20.0);
  /// Throws ConfigurationError on invalid probabilities or geometry.
  void validate() const;
};

struct ProcessOutcome {
  bool left = false;
  bool spoiled = false;
  /// Spoiled under the discard policy: dose spent, no readout used.
  bool excluded = false;
  double phase_error = 0.0;
  int inelastic_count = 0;
};

/// Precomputed single k-electron process for fixed (k, dphi, error model).
/// Electrons without any event are skipped geometrically, so the cost per
/// process scales with the number of events rather than with k.
class ProcessKernel {
public:
  ProcessKernel(std::size_t k, double dphi, const ErrorModel& em);
  ProcessOutcome run(rng::Xoshiro256ss& stream) const;

  std::size_t k() const { return k_; }
  bool error_free() const { return p_event_ == 0.0; }
  double base_probability() const { return base_probability_; }

private:
  std::size_t skip(rng::Xoshiro256ss& stream) const;

  std::size_t k_;
  double phase_;
  double base_probability_;
  double p_event_;
  double fail_fraction_;
  double log_no_event_;
  ErrorModel em_;
};

ProcessOutcome k_electron_process(std::size_t k, double dphi, const ErrorModel& em,
                                  rng::Xoshiro256ss& stream);

struct PhaseEstimate {
  double value = 0.0;
  double standard_error = 0.0;
  std::size_t usable = 0;
};

/// Y from the fraction of left readouts among usable outcomes. Throws
/// EstimationError when no outcome is usable.
PhaseEstimate estimate_phase(std::span<const ProcessOutcome> outcomes, std::size_t k,
                             Estimator estimator);
PhaseEstimate estimate_phase_from_counts(std::size_t left, std::size_t usable, std::size_t k,
                                         Estimator estimator);

struct BatchSummary {
  std::size_t processes = 0;
  std::size_t usable = 0;
  std::size_t left = 0;
  std::size_t spoiled = 0;
  std::size_t inelastic_events = 0;
  double phase_error_sum = 0.0;
  double phase_error_square_sum = 0.0;
};

/// Processes per RNG stream in batch runs.
inline constexpr std::size_t protocol_block_size = 4096;

/// `processes` independent k-electron processes. Block b of run r draws from
/// stream (seed, protocol_block, r << 24 | b); results do not depend on `threads`.
BatchSummary run_process_batch(std::size_t k, double dphi, const ErrorModel& em,
                               std::size_t processes, std::uint64_t seed, std::uint64_t run_index,
                               unsigned threads = 0);

struct VarianceExperiment {
  std::size_t k = 0;
  std::size_t dose = 0;
  std::size_t repetitions = 0;
  double mean_estimate = 0.0;
  double variance = 0.0;
  double variance_stderr = 0.0;
  double mean_usable = 0.0;
  double spoil_rate = 0.0;
};

/// Repeats an n = floor(dose / k) process measurement and collects the
/// empirical distribution of the estimate.
VarianceExperiment protocol_variance(std::size_t k, std::size_t dose, double dphi,
                                     const ErrorModel& em, Estimator estimator,
                                     std::size_t repetitions, std::uint64_t seed,
                                     unsigned threads = 0);

/// e^{k p} / (k N).
double loss_adjusted_variance(std::size_t k, double p_d, double dose);

struct OptimalK {
  std::size_t k_m = 1;
  double contrast_gain = 1.0;
};

/// k_m = round(1/p_d) (at least 1), gain sqrt(k_m / e).
OptimalK optimal_k(double p_d);
/// Integer k minimising e^{k p} / k by direct search.
std::size_t minimise_variance_k(double p_d);

} // namespace eaem
