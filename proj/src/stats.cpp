#include "adamwarm/stats.hpp"

#include "adamwarm/errors.hpp"

#include <algorithm>
#include <cmath>

namespace adamwarm::stats {

namespace {

void require_finite_nonempty(std::span<const double> s, const char* what) {
    if (s.empty()) throw InvalidArgument(std::string(what) + ": empty sample");
    for (double x : s) {
        if (!std::isfinite(x)) throw InvalidArgument(std::string(what) + ": non-finite sample");
    }
}

void require_levels(std::span<const double> qs) {
    double prev = 0.0;
    for (double q : qs) {
        if (!(q > 0.0 && q < 1.0)) throw InvalidArgument("quantile levels must lie in (0, 1)");
        if (q < prev) throw InvalidArgument("quantile levels must be ascending");
        prev = q;
    }
}

} // namespace

std::vector<double> quantiles_inplace(std::span<double> work, std::span<const double> qs) {
    require_finite_nonempty(work, "quantiles");
    require_levels(qs);
    const std::size_t n = work.size();
    std::vector<double> out;
    out.reserve(qs.size());
    // Levels ascend, so everything left of the last selected position is
    // already <= it and the next selection can start there.
    std::size_t lo_bound = 0;
    for (double q : qs) {
        const double h = static_cast<double>(n - 1) * q;
        const auto k = static_cast<std::size_t>(std::floor(h));
        const double frac = h - static_cast<double>(k);
        std::nth_element(work.begin() + static_cast<std::ptrdiff_t>(lo_bound),
                         work.begin() + static_cast<std::ptrdiff_t>(k), work.end());
        lo_bound = k;
        const double a = work[k];
        double value = a;
        if (frac > 0.0 && k + 1 < n) {
            const double b = *std::min_element(work.begin() + static_cast<std::ptrdiff_t>(k + 1), work.end());
            value = a + frac * (b - a);
        }
        out.push_back(value);
    }
    return out;
}

std::vector<double> quantiles(std::span<const double> samples, std::span<const double> qs) {
    std::vector<double> work(samples.begin(), samples.end());
    return quantiles_inplace(work, qs);
}

double median(std::span<const double> samples) {
    const double half[] = {0.5};
    return quantiles(samples, half).front();
}

double mean(std::span<const double> samples) {
    require_finite_nonempty(samples, "mean");
    double acc = 0.0;
    for (double x : samples) acc += x;
    return acc / static_cast<double>(samples.size());
}

double pearson_correlation(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw ShapeError("pearson_correlation: lengths differ");
    if (x.size() < 2) throw ShapeError("pearson_correlation: need at least 2 points");
    const double mx = mean(x);
    const double my = mean(y);
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw UndefinedStatistic("pearson_correlation: zero variance");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double coefficient_of_variation(std::span<const double> samples) {
    if (samples.size() < 2) throw InvalidArgument("coefficient_of_variation: need at least 2 samples");
    const double mu = mean(samples);
    if (mu == 0.0) throw UndefinedStatistic("coefficient_of_variation: zero mean");
    double ss = 0.0;
    for (double x : samples) ss += (x - mu) * (x - mu);
    const double sd = std::sqrt(ss / static_cast<double>(samples.size() - 1));
    return sd / std::abs(mu);
}

} // namespace adamwarm::stats
