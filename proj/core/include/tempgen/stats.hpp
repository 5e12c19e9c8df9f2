#pragma once

#include <span>
#include <vector>

namespace tempgen::stats {

double mean(std::span<const double> x);
/// Divide-by-N standard deviation.
double population_std(std::span<const double> x);

/// Linear interpolation between order statistics: position p*(n-1) of the
/// sorted values. `sorted` must be ascending and non-empty; p in [0, 1].
double quantile_sorted(std::span<const double> sorted, double p);
double quantile(std::vector<double> values, double p);

}  // namespace tempgen::stats
