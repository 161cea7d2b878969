#pragma once

#include <span>
#include <vector>

namespace adamwarm::stats {

/// Sample quantiles by linear interpolation between order statistics
/// (Hyndman-Fan type 7: h = (n-1)q). qs must be ascending and inside (0, 1).
/// Uses successive partial selection, so the cost is close to O(n) for a
/// handful of levels.
std::vector<double> quantiles(std::span<const double> samples, std::span<const double> qs);

/// In-place variant; reorders `work`.
std::vector<double> quantiles_inplace(std::span<double> work, std::span<const double> qs);

double median(std::span<const double> samples);

double mean(std::span<const double> samples);

/// Product-moment correlation. Throws UndefinedStatistic when either input
/// has zero variance, ShapeError on length mismatch or fewer than 2 points.
double pearson_correlation(std::span<const double> x, std::span<const double> y);

/// Sample standard deviation (n-1) divided by |mean|. Throws
/// UndefinedStatistic when the mean is exactly zero.
double coefficient_of_variation(std::span<const double> samples);

} // namespace adamwarm::stats
