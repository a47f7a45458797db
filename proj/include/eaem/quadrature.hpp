#pragma once

#include <functional>
#include <span>
#include <string>

namespace eaem::quadrature {

struct Options {
  double relative_tolerance = 1e-10;
  unsigned max_depth = 18;
  /// Failure threshold: the estimated error may exceed the requested
  /// tolerance by this factor before the integral is rejected.
  double acceptance_factor = 1e3;
};

struct Result {
  double value = 0.0;
  double error_estimate = 0.0;
  double l1_norm = 0.0;
};

/// Adaptive 31-point Gauss-Kronrod integral of f over [a, b].
/// Throws NumericError (with `label` in the message) when the error estimate
/// stays above the tolerance.
Result integrate(const std::function<double(double)>& f, double a, double b,
                 const Options& options = {}, const std::string& label = "integral");

/// Same, split at the interior points of `breakpoints` that fall inside (a, b).
/// Used where the integrand has known kinks or sharply peaked regions.
Result integrate_piecewise(const std::function<double(double)>& f, double a, double b,
                           std::span<const double> breakpoints,
                           const Options& options = {}, const std::string& label = "integral");

} // namespace eaem::quadrature
