#include "adamwarm/sim.hpp"

#include "adamwarm/errors.hpp"
#include "adamwarm/rng.hpp"
#include "adamwarm/simd/kernels.hpp"
#include "adamwarm/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <thread>

namespace adamwarm::sim {

namespace {

// Fills g[begin, end) for iteration t and advances the Adam recurrence on
// that slice. Normal draws come in pairs: iterations 2k+1 and 2k+2 share
// block k of the parameter's substream.
void sweep(std::size_t begin, std::size_t end, std::int64_t t, double sigma, std::uint64_t seed,
           std::vector<double>& m, std::vector<double>& v, std::vector<double>& spare, std::vector<double>& g,
           std::vector<double>& mag, const simd::AdamCoeffs& coeffs) {
    const bool fresh_pair = (t - 1) % 2 == 0;
    const auto pair_index = static_cast<std::uint64_t>((t - 1) / 2);
    for (std::size_t i = begin; i < end; ++i) {
        double z;
        if (fresh_pair) {
            const auto zz = normal_pair(seed, i, pair_index);
            z = zz[0];
            spare[i] = zz[1];
        } else {
            z = spare[i];
        }
        g[i] = sigma * z;
    }
    const std::size_t n = end - begin;
    std::span<double> upd(mag.data() + begin, n);
    simd::active_kernels().adam(std::span<double>(m.data() + begin, n), std::span<double>(v.data() + begin, n),
                                std::span<const double>(g.data() + begin, n), upd, coeffs);
    for (double& u : upd) u = std::abs(u);
}

} // namespace

void SimConfig::validate() const {
    if (n_params == 0) throw InvalidArgument("n_params must be positive");
    if (n_iters == 0) throw InvalidArgument("n_iters must be positive");
    if (!(grad_variance > 0.0) || !std::isfinite(grad_variance)) {
        throw InvalidArgument("grad_variance must be positive");
    }
    if (!(hp.beta1 > 0.0 && hp.beta1 < 1.0) || !(hp.beta2 > 0.0 && hp.beta2 < 1.0)) {
        throw InvalidArgument("beta1 and beta2 must lie in (0, 1)");
    }
    if (!(hp.epsilon >= 0.0)) throw InvalidArgument("epsilon must be non-negative");
    if (quantiles.empty()) throw InvalidArgument("at least one quantile level is required");
    if (!std::is_sorted(quantiles.begin(), quantiles.end())) throw InvalidArgument("quantiles must be ascending");
    for (double q : quantiles) {
        if (!(q > 0.0 && q < 1.0)) throw InvalidArgument("quantile levels must lie in (0, 1)");
    }
    if (threads == 0) throw InvalidArgument("threads must be positive");
}

std::size_t SimTrajectory::column(double level) const {
    for (std::size_t i = 0; i < levels.size(); ++i) {
        if (levels[i] == level) return i;
    }
    throw InvalidArgument("quantile level not recorded in this trajectory");
}

SimTrajectory run_local_minimum_sim(const SimConfig& config) {
    config.validate();
    const std::size_t p = config.n_params;
    const double sigma = std::sqrt(config.grad_variance);

    std::vector<double> m(p, 0.0), v(p, 0.0), spare(p, 0.0), g(p, 0.0), mag(p, 0.0);
    SimTrajectory out;
    out.levels = config.quantiles;
    out.rows.reserve(config.n_iters);

    const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(config.threads, p));
    const std::size_t chunk = (p + workers - 1) / workers;

    for (std::int64_t t = 1; t <= static_cast<std::int64_t>(config.n_iters); ++t) {
        const auto coeffs = simd::make_adam_coeffs(config.hp.beta1, config.hp.beta2, config.hp.epsilon, 1.0, t);
        if (workers == 1) {
            sweep(0, p, t, sigma, config.seed, m, v, spare, g, mag, coeffs);
        } else {
            std::vector<std::jthread> pool;
            pool.reserve(workers);
            for (unsigned w = 0; w < workers; ++w) {
                const std::size_t b = w * chunk;
                const std::size_t e = std::min(p, b + chunk);
                if (b >= e) break;
                pool.emplace_back(
                    [&, b, e] { sweep(b, e, t, sigma, config.seed, m, v, spare, g, mag, coeffs); });
            }
        }
        out.rows.push_back({t, stats::quantiles_inplace(mag, config.quantiles)});
    }
    return out;
}

double stationary_median(const SimConfig& config) {
    SimConfig c = config;
    c.quantiles = {0.5};
    const SimTrajectory traj = run_local_minimum_sim(c);
    return traj.rows.back().values.front();
}

std::string quantile_label(double level) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "q%g", level * 100.0);
    return buf;
}

void write_csv(std::ostream& os, const SimTrajectory& trajectory) {
    os << 't';
    for (double q : trajectory.levels) os << ',' << quantile_label(q);
    os << '\n';
    char buf[40];
    for (const auto& row : trajectory.rows) {
        os << row.t;
        for (double x : row.values) {
            std::snprintf(buf, sizeof buf, ",%.9g", x);
            os << buf;
        }
        os << '\n';
    }
}

} // namespace adamwarm::sim
