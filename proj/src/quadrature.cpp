#include "eaem/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "eaem/errors.hpp"

namespace eaem::quadrature {

Result integrate(const std::function<double(double)>& f, double a, double b,
                 const Options& options, const std::string& label) {
  Result r;
  if (a == b)
    return r;
  double error = 0.0;
  double l1 = 0.0;
  r.value = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
      f, a, b, options.max_depth, options.relative_tolerance, &error, &l1);
  r.error_estimate = error;
  r.l1_norm = l1;
  const double scale = std::max(std::abs(r.value), l1);
  if (!std::isfinite(r.value) ||
      (scale > 0.0 && error > options.acceptance_factor * options.relative_tolerance * scale)) {
    std::ostringstream msg;
    msg << label << ": quadrature did not converge on [" << a << ", " << b
        << "] (value " << r.value << ", error estimate " << error << ", |f| integral " << l1
        << ")";
    throw NumericError(msg.str());
  }
  return r;
}

Result integrate_piecewise(const std::function<double(double)>& f, double a, double b,
                           std::span<const double> breakpoints, const Options& options,
                           const std::string& label) {
  std::vector<double> edges{a};
  for (double p : breakpoints)
    if (p > a && p < b)
      edges.push_back(p);
  edges.push_back(b);
  std::sort(edges.begin(), edges.end());
  // Drop slivers left by breakpoints that nearly coincide.
  const double min_gap = 1e-12 * (b - a);
  std::vector<double> kept{edges.front()};
  for (std::size_t i = 1; i < edges.size(); ++i)
    if (edges[i] - kept.back() > min_gap)
      kept.push_back(edges[i]);
  kept.back() = b;
  edges.swap(kept);

  Result total;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    const Result part = integrate(f, edges[i], edges[i + 1], options, label);
    total.value += part.value;
    total.error_estimate += part.error_estimate;
    total.l1_norm += part.l1_norm;
  }
  return total;
}

} // namespace eaem::quadrature
