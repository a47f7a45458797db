#pragma once

#include <functional>
#include <span>

namespace eaem::stats {

/// Two-sided Kolmogorov-Smirnov distance between sorted samples and a CDF.
double ks_statistic(std::span<const double> sorted_samples, const std::function<double(double)>& cdf);

/// Asymptotic p-value of the one-sample KS statistic (Stephens' small-n correction).
double ks_pvalue(double statistic, std::size_t n);

} // namespace eaem::stats
