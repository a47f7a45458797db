#include "eaem/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "eaem/constants.hpp"
#include "eaem/errors.hpp"
#include "eaem/parallel.hpp"

namespace eaem {

CpbState CpbState::plus() {
  const double h = 1.0 / std::sqrt(2.0);
  return {{h, 0.0}, {h, 0.0}};
}

double CpbState::probability_left() const {
  // |<-|psi>|^2 with <-| = (<0| - i<1|) / sqrt(2).
  return 0.5 * std::norm(c0 - std::complex<double>(0.0, 1.0) * c1);
}

CpbState single_electron_update(const CpbState& state, double dphi, double injected_error) {
  return {state.c0, state.c1 * std::polar(1.0, dphi + injected_error)};
}

std::string_view to_string(FailurePolicy p) {
  return p == FailurePolicy::randomize ? "randomize" : "discard";
}

std::string_view to_string(Estimator e) { return e == Estimator::linear ? "linear" : "arcsine"; }

FailurePolicy parse_policy(std::string_view text) {
  if (text == "randomize")
    return FailurePolicy::randomize;
  if (text == "discard")
    return FailurePolicy::discard;
  throw ConfigurationError("unknown failure policy '" + std::string(text) + "'");
}

Estimator parse_estimator(std::string_view text) {
  if (text == "linear")
    return Estimator::linear;
  if (text == "arcsine")
    return Estimator::arcsine;
  throw ConfigurationError("unknown estimator '" + std::string(text) + "'");
}

ErrorModel ErrorModel::none(const BeamParameters& beam) { return make(beam, 0.0, 0.0, 30.0); }

ErrorModel ErrorModel::make(const BeamParameters& beam, double p_fail, double p_inel,
                            double d01_nm, FailurePolicy policy, double energy_loss_ev) {
  ErrorModel em;
  em.p_fail = p_fail;
  em.p_inel = p_inel;
  em.d01_nm = d01_nm;
  em.beam = beam;
  em.inelastic = InelasticModel::from_beam(beam, energy_loss_ev, std::clamp(p_inel, 0.0, 1.0));
  em.policy = policy;
  em.validate();
  return em;
}

void ErrorModel::validate() const {
  if (!(p_fail >= 0.0) || !(p_inel >= 0.0) || !(p_fail + p_inel <= 1.0)) {
    std::ostringstream msg;
    msg << "error model needs p_fail, p_inel >= 0 and p_fail + p_inel <= 1 (got " << p_fail << ", "
        << p_inel << ")";
    throw ConfigurationError(msg.str());
  }
  if (!(d01_nm > 0.0))
    throw ConfigurationError("region separation d01 must be positive");
}

ProcessKernel::ProcessKernel(std::size_t k, double dphi, const ErrorModel& em)
    : k_(k), phase_(static_cast<double>(k) * dphi), em_(em) {
  if (k == 0)
    throw ConfigurationError("a k-electron process needs k >= 1");
  em.validate();
  base_probability_ = 0.5 * (1.0 + std::sin(phase_));
  p_event_ = em.p_fail + em.p_inel;
  fail_fraction_ = p_event_ > 0.0 ? em.p_fail / p_event_ : 0.0;
  log_no_event_ = std::log1p(-p_event_);
}

std::size_t ProcessKernel::skip(rng::Xoshiro256ss& stream) const {
  const double g = std::floor(std::log(stream.uniform_positive()) / log_no_event_);
  return g >= static_cast<double>(k_) ? k_ : static_cast<std::size_t>(g);
}

ProcessOutcome ProcessKernel::run(rng::Xoshiro256ss& stream) const {
  ProcessOutcome out;
  if (p_event_ == 0.0) {
    out.left = stream.uniform() < base_probability_;
    return out;
  }

  for (std::size_t pos = skip(stream); pos < k_; pos += 1 + skip(stream)) {
    if (stream.uniform() < fail_fraction_) {
      out.spoiled = true;
      continue;
    }
    const double theta = sample_angle(em_.inelastic, stream.uniform());
    const double chi = 2.0 * constants::pi * stream.uniform();
    out.phase_error += phase_error_diverging(em_.beam, em_.d01_nm, theta, chi);
    ++out.inelastic_count;
  }

  if (out.spoiled) {
    if (em_.policy == FailurePolicy::discard)
      out.excluded = true;
    else
      out.left = stream.uniform() < 0.5;
    return out;
  }
  double p = base_probability_;
  if (out.inelastic_count > 0) {
    // Postponed phase correction: the whole process acts on c1 at once.
    const CpbState s = single_electron_update(CpbState::plus(), phase_, out.phase_error);
    p = s.probability_left();
  }
  out.left = stream.uniform() < p;
  return out;
}

ProcessOutcome k_electron_process(std::size_t k, double dphi, const ErrorModel& em,
                                  rng::Xoshiro256ss& stream) {
  return ProcessKernel(k, dphi, em).run(stream);
}

PhaseEstimate estimate_phase(std::span<const ProcessOutcome> outcomes, std::size_t k,
                             Estimator estimator) {
  std::size_t left = 0;
  std::size_t usable = 0;
  for (const auto& o : outcomes) {
    if (o.excluded)
      continue;
    ++usable;
    left += o.left ? 1 : 0;
  }
  return estimate_phase_from_counts(left, usable, k, estimator);
}

PhaseEstimate estimate_phase_from_counts(std::size_t left, std::size_t usable, std::size_t k,
                                         Estimator estimator) {
  if (usable == 0)
    throw EstimationError("no usable k-electron processes: every process was discarded");
  if (k == 0)
    throw ConfigurationError("estimator needs k >= 1");
  const double n = static_cast<double>(usable);
  const double kd = static_cast<double>(k);
  const double s = 2.0 * static_cast<double>(left) / n - 1.0;
  PhaseEstimate est;
  est.usable = usable;
  if (estimator == Estimator::linear) {
    est.value = s / kd;
    est.standard_error = std::sqrt(std::max(0.0, 1.0 - s * s) / n) / kd;
  } else {
    est.value = std::asin(std::clamp(s, -1.0, 1.0)) / kd;
    // d asin(s)/ds = 1/sqrt(1 - s^2) cancels the binomial factor.
    est.standard_error = 1.0 / (kd * std::sqrt(n));
  }
  return est;
}

BatchSummary run_process_batch(std::size_t k, double dphi, const ErrorModel& em,
                               std::size_t processes, std::uint64_t seed, std::uint64_t run_index,
                               unsigned threads) {
  const ProcessKernel kernel(k, dphi, em);
  const std::size_t blocks = (processes + protocol_block_size - 1) / protocol_block_size;
  if (blocks >= (std::size_t{1} << 24) || run_index >= (std::uint64_t{1} << 24))
    throw ConfigurationError("protocol batch too large for the stream layout");
  std::vector<BatchSummary> partial(blocks);
  parallel_for(blocks, threads, [&](std::size_t b) {
    auto stream = rng::make_stream(seed, rng::Domain::protocol_block, (run_index << 24) | b);
    const std::size_t begin = b * protocol_block_size;
    const std::size_t end = std::min(processes, begin + protocol_block_size);
    BatchSummary& s = partial[b];
    if (kernel.error_free()) {
      // Same draws as ProcessKernel::run, without the outcome bookkeeping.
      const double p = kernel.base_probability();
      std::size_t left = 0;
      for (std::size_t i = begin; i < end; ++i)
        left += stream.uniform() < p ? 1 : 0;
      s.processes = s.usable = end - begin;
      s.left = left;
      return;
    }
    for (std::size_t i = begin; i < end; ++i) {
      const ProcessOutcome o = kernel.run(stream);
      ++s.processes;
      s.spoiled += o.spoiled ? 1 : 0;
      s.inelastic_events += static_cast<std::size_t>(o.inelastic_count);
      s.phase_error_sum += o.phase_error;
      s.phase_error_square_sum += o.phase_error * o.phase_error;
      if (!o.excluded) {
        ++s.usable;
        s.left += o.left ? 1 : 0;
      }
    }
  });
  BatchSummary total;
  for (const auto& s : partial) {
    total.processes += s.processes;
    total.usable += s.usable;
    total.left += s.left;
    total.spoiled += s.spoiled;
    total.inelastic_events += s.inelastic_events;
    total.phase_error_sum += s.phase_error_sum;
    total.phase_error_square_sum += s.phase_error_square_sum;
  }
  return total;
}

VarianceExperiment protocol_variance(std::size_t k, std::size_t dose, double dphi,
                                     const ErrorModel& em, Estimator estimator,
                                     std::size_t repetitions, std::uint64_t seed,
                                     unsigned threads) {
  if (k == 0 || dose < k)
    throw ConfigurationError("dose must cover at least one k-electron process");
  if (repetitions < 2)
    throw ConfigurationError("variance experiment needs at least two repetitions");
  const std::size_t n = dose / k;
  std::vector<double> estimates(repetitions);
  std::vector<BatchSummary> summaries(repetitions);
  parallel_for(repetitions, threads, [&](std::size_t r) {
    summaries[r] = run_process_batch(k, dphi, em, n, seed, r, 1);
    estimates[r] = estimate_phase_from_counts(summaries[r].left, summaries[r].usable, k, estimator).value;
  });

  VarianceExperiment out;
  out.k = k;
  out.dose = dose;
  out.repetitions = repetitions;
  const double R = static_cast<double>(repetitions);
  double usable = 0.0;
  double spoiled = 0.0;
  for (std::size_t r = 0; r < repetitions; ++r) {
    out.mean_estimate += estimates[r];
    usable += static_cast<double>(summaries[r].usable);
    spoiled += static_cast<double>(summaries[r].spoiled);
  }
  out.mean_estimate /= R;
  out.mean_usable = usable / R;
  out.spoil_rate = spoiled / (R * static_cast<double>(n));
  double m2 = 0.0;
  double m4 = 0.0;
  for (double y : estimates) {
    const double d = (y - out.mean_estimate) * (y - out.mean_estimate);
    m2 += d;
    m4 += d * d;
  }
  out.variance = m2 / (R - 1.0);
  const double central4 = m4 / R;
  const double v = m2 / R;
  out.variance_stderr = std::sqrt(std::max(0.0, central4 - v * v) / R);
  return out;
}

double loss_adjusted_variance(std::size_t k, double p_d, double dose) {
  const double kd = static_cast<double>(k);
  return std::exp(kd * p_d) / (kd * dose);
}

OptimalK optimal_k(double p_d) {
  if (!(p_d > 0.0 && p_d <= 1.0))
    throw DomainError("destructive-event probability must lie in (0, 1]");
  OptimalK out;
  out.k_m = static_cast<std::size_t>(std::max(1.0, std::round(1.0 / p_d)));
  out.contrast_gain = std::sqrt(static_cast<double>(out.k_m) / std::exp(1.0));
  return out;
}

std::size_t minimise_variance_k(double p_d) {
  if (!(p_d > 0.0 && p_d <= 1.0))
    throw DomainError("destructive-event probability must lie in (0, 1]");
  const auto limit = static_cast<std::size_t>(std::ceil(10.0 / p_d)) + 1;
  std::size_t best = 1;
  double best_value = std::exp(p_d);
  for (std::size_t k = 2; k <= limit; ++k) {
    const double v = std::exp(static_cast<double>(k) * p_d) / static_cast<double>(k);
    if (v < best_value) {
      best_value = v;
      best = k;
    }
  }
  return best;
}

} // namespace eaem
