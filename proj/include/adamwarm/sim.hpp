#pragma once

// Adam at a simulated local minimum: every parameter sees i.i.d. zero-mean
// Gaussian gradients, and we track the cross-parameter distribution of
// |update| / alpha per iteration.

#include "adamwarm/optim.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace adamwarm::sim {

struct SimConfig {
    std::uint64_t n_params = 25000;
    std::uint64_t n_iters = 1000;
    double grad_variance = 1e-9;
    /// alpha is factored out of every reported magnitude; only beta1, beta2
    /// and epsilon matter here.
    AdamHyperparams hp{1.0, 0.9, 0.999, 0.0, 0.0};
    std::vector<double> quantiles{0.025, 0.25, 0.5, 0.75, 0.975};
    std::uint64_t seed = 0;
    /// Worker threads for the per-iteration parameter sweep. Results do not
    /// depend on this value.
    unsigned threads = 1;

    void validate() const;
};

struct SimRow {
    std::int64_t t = 0;
    std::vector<double> values;
};

struct SimTrajectory {
    std::vector<double> levels;
    std::vector<SimRow> rows;

    /// Index of `level` in levels; throws InvalidArgument if absent.
    std::size_t column(double level) const;
};

/// Gradient for parameter `param` at iteration t (1-based) is
/// sqrt(grad_variance) * z, with z drawn from Philox substream `param`.
/// Standard-normal draws therefore do not depend on grad_variance.
SimTrajectory run_local_minimum_sim(const SimConfig& config);

/// Cross-parameter median |update| / alpha at the final iteration.
/// The stationary figure uses n_iters = 10000.
double stationary_median(const SimConfig& config);

/// "t,q2.5,q25,..." then one row per iteration, 9 significant digits.
void write_csv(std::ostream& os, const SimTrajectory& trajectory);

/// Column label for a quantile level, e.g. 0.025 -> "q2.5".
std::string quantile_label(double level);

} // namespace adamwarm::sim
