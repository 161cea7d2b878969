// Acceptance runner: one PASS/FAIL line per criterion, tolerances fixed here.
//   acceptance            run everything
//   acceptance --only N   run criterion N

#include "adamwarm/cli/commands.hpp"
#include "adamwarm/optim.hpp"
#include "adamwarm/rng.hpp"
#include "adamwarm/schedules.hpp"
#include "adamwarm/sim.hpp"
#include "adamwarm/train/mlp.hpp"
#include "adamwarm/train/trainer.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

using namespace adamwarm;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

std::string fmt(double x, int digits = 6) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, x);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double rel(double a, double b) {
    if (a == b) return 0.0;
    return std::abs(a - b) / std::max(std::abs(a), std::abs(b));
}

const std::string kData = ADAMWARM_TEST_DATA_DIR;

const train::IdxDataset& mnist5k() {
    static const train::IdxDataset d =
        train::load_idx(kData + "/mnist5k-images-idx3-ubyte.gz", kData + "/mnist5k-labels-idx1-ubyte.gz");
    return d;
}

Outcome fact1_sweep() {
    const fs::path dir = fs::temp_directory_path() / ("adamwarm_acceptance_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    std::ostringstream out, err;
    const auto t0 = std::chrono::steady_clock::now();
    const int code = cli::run_cli({"--out-dir", dir.string(), "fact1"}, out, err);
    const double secs = seconds_since(t0);
    fs::remove_all(dir);
    const bool verified = code == 0 && out.str().find("verified") != std::string::npos;
    return {verified && secs < 30.0,
            std::string(verified ? "zero counterexamples" : "counterexamples found") + " over 202 beta2 values, t <= 1e5, " +
                fmt(secs, 3) + " s (limit 30 s)"};
}

Outcome rho5_at_08() {
    const double r = radam_rho(5, 0.8).rho_t;
    return {std::abs(r - 4.14) <= 0.01, "rho(5, 0.8) = " + fmt(r, 10) + ", expected 4.14 +/- 0.01"};
}

Outcome sim_first_step() {
    sim::SimConfig c;
    c.n_iters = 1;
    const auto tr = sim::run_local_minimum_sim(c);
    bool all_one = true;
    for (double v : tr.rows.at(0).values) all_one &= v == 1.0;
    return {all_one, "t=1 quantiles " + std::string(all_one ? "all exactly 1" : "not all 1") + " (25000 params, eps=0)"};
}

Outcome sim_stationary() {
    sim::SimConfig c;
    c.n_iters = 10000;
    const auto t0 = std::chrono::steady_clock::now();
    const double med = sim::stationary_median(c);
    const double secs = seconds_since(t0);
    return {std::abs(med - 0.153) <= 0.005 && secs < 120.0,
            "median |update|/alpha at t=10000: " + fmt(med) + " (0.153 +/- 0.005), " + fmt(secs, 3) +
                " s single-threaded (limit 120 s)"};
}

Outcome sim_settling() {
    sim::SimConfig c;
    c.n_iters = 100;
    const auto tr = sim::run_local_minimum_sim(c);
    const std::size_t q = tr.column(0.5);
    const double m40 = tr.rows.at(39).values[q];
    const double m100 = tr.rows.at(99).values[q];
    return {m40 >= 0.15 && m40 <= 0.18 && std::abs(m40 - m100) <= 0.01,
            "median t=40 " + fmt(m40) + " (in [0.15, 0.18]), t=100 " + fmt(m100) + " (|diff| <= 0.01)"};
}

Outcome sim_scale_invariance() {
    sim::SimConfig a;
    a.grad_variance = 1e-9;
    sim::SimConfig b = a;
    b.grad_variance = 1.0;
    const auto ta = sim::run_local_minimum_sim(a);
    const auto tb = sim::run_local_minimum_sim(b);
    double worst = 0.0;
    for (std::size_t i = 0; i < ta.rows.size(); ++i) {
        for (std::size_t j = 0; j < ta.rows[i].values.size(); ++j) {
            worst = std::max(worst, rel(ta.rows[i].values[j], tb.rows[i].values[j]));
        }
    }
    return {worst <= 1e-12, "max relative difference over " + std::to_string(ta.rows.size()) +
                                " iterations: " + fmt(worst, 3) + " (limit 1e-12)"};
}

Outcome radam_structure() {
    const AdamHyperparams hp{1e-3, 0.9, 0.999, 1e-8, 0.0};
    constexpr std::size_t kStreams = 1000, kLen = 200, kParams = 64;
    double worst = 0.0;
    std::size_t momentum_mismatch = 0;
    for (std::size_t s = 0; s < kStreams; ++s) {
        RandomStream rng(20240, s);
        // per-stream scale spread over many orders of magnitude
        const double scale = std::pow(10.0, rng.uniform(-6.0, 2.0));
        std::vector<double> p(kParams, 0.0), g(kParams);
        for (auto& x : p) x = rng.normal();
        std::vector<double> pa = p;
        auto sr = OptimizerState::zeros(kParams);
        auto sa = OptimizerState::zeros(kParams);
        for (std::size_t k = 1; k <= kLen; ++k) {
            const auto t = static_cast<std::int64_t>(k);
            for (auto& x : g) x = scale * (rng.normal() + 0.3);
            const auto r = radam_step(p, g, sr, hp);
            if (t <= 4) {
                const double c1 = 1.0 - std::pow(hp.beta1, static_cast<double>(t));
                for (std::size_t i = 0; i < kParams; ++i) {
                    if (r.update[i] != hp.alpha * sr.m[i] / c1) ++momentum_mismatch;
                }
                // keep the Adam reference on the same trajectory
                adam_step(pa, g, sa, hp, 0.0);
                pa = r.new_params;
            } else {
                const auto a = adam_step(pa, g, sa, hp, *radam_warmup_factor(t, hp.beta2));
                for (std::size_t i = 0; i < kParams; ++i) worst = std::max(worst, rel(r.update[i], a.update[i]));
                pa = a.new_params;
            }
            p = r.new_params;
        }
    }
    return {worst <= 1e-12 && momentum_mismatch == 0,
            "1000 streams x 200 steps x 64 params: t>=5 max relative diff " + fmt(worst, 3) +
                " (limit 1e-12); t<=4 inexact momentum updates: " + std::to_string(momentum_mismatch)};
}

Outcome effective_periods() {
    double worst_pair = 0.0, worst_closed = 0.0;
    std::ostringstream d;
    for (double b : {0.99, 0.997, 0.999}) {
        const double tl = untuned_linear_tau(b), te = untuned_exponential_tau(b);
        const double lin = effective_warmup_period(WarmupSchedule::linear(tl));
        const double exp_ = effective_warmup_period(WarmupSchedule::exponential(te));
        worst_pair = std::max(worst_pair, rel(lin, exp_));
        worst_closed = std::max(worst_closed, rel(lin, (tl - 1.0) / 2.0));
        worst_closed = std::max(worst_closed, rel(exp_, 1.0 / (std::exp(1.0 - b) - 1.0)));
        d << "beta2=" << b << ": linear " << fmt(lin, 8) << ", expo " << fmt(exp_, 8) << "; ";
    }
    d << "max linear/expo gap " << fmt(worst_pair, 3) << " (limit 0.01), max closed-form error " << fmt(worst_closed, 3)
      << " (limit 1e-6)";
    return {worst_pair <= 0.01 && worst_closed <= 1e-6, d.str()};
}

Outcome finite_differences() {
    using namespace adamwarm::train;
    RandomStream rng(777, 0);
    const double h = 1e-5;
    double worst = 0.0, worst_abs = 0.0, worst_large = 0.0;
    std::size_t checked = 0;
    for (int config = 0; config < 100; ++config) {
        Mlp m = init_mlp(4, 2, rng, {3, 3, 3});
        for (double& p : m.params()) p = rng.uniform(-1.0, 1.0);
        const std::size_t rows = 1 + rng.below(4);
        Batch b{rows, 4, std::vector<double>(rows * 4), std::vector<std::uint32_t>(rows)};
        for (auto& x : b.x) x = rng.uniform(-1.0, 1.0);
        for (auto& y : b.y) y = static_cast<std::uint32_t>(rng.below(2));
        const auto lg = forward_backward(m, b);
        for (std::size_t i = 0; i < m.params().size(); ++i) {
            const double keep = m.params()[i];
            m.params()[i] = keep + h;
            const double up = evaluate_loss(m, b);
            m.params()[i] = keep - h;
            const double down = evaluate_loss(m, b);
            m.params()[i] = keep;
            const double fd = (up - down) / (2 * h);
            // absolute floor: central differences carry ~1e-10 truncation and rounding error
            const double diff = std::abs(lg.grad[i] - fd);
            const double scale = std::max(std::abs(lg.grad[i]), std::abs(fd));
            if (diff > 1e-9) worst = std::max(worst, diff / scale);
            if (scale >= 1e-3) worst_large = std::max(worst_large, diff / scale);
            worst_abs = std::max(worst_abs, diff);
            ++checked;
        }
    }
    return {worst <= 1e-6, "100 configs (4-3-3-3-2), " + std::to_string(checked) +
                               " gradients: max relative error " + fmt(worst, 3) +
                               " (limit 1e-6, differences below 1e-9 count as agreement); max abs diff " +
                               fmt(worst_abs, 3) + ", max relative error where |grad| >= 1e-3: " + fmt(worst_large, 3)};
}

Outcome interchangeability() {
    const auto t0 = std::chrono::steady_clock::now();
    train::TrainConfig base;
    const auto cmp = train::compare_warmups(base, mnist5k(), 3, [](const train::ComparisonRun& r) {
        std::cout << "    " << train::to_string(r.method) << " seed " << r.seed << ": " << fmt(r.initial_loss)
                  << " -> " << fmt(r.final_loss) << std::endl;
    });
    const double secs = seconds_since(t0);
    return {cmp.interchangeable && cmp.all_halved && secs < 900.0,
            "mnist5k, 2000 iters, 3 seeds: max method gap " + fmt(cmp.max_method_gap, 4) + " vs 2x max seed std " +
                fmt(2.0 * cmp.max_seed_std, 4) + "; all halved: " + (cmp.all_halved ? "yes" : "no") + "; " +
                fmt(secs, 3) + " s (limit 900 s)"};
}

Outcome probe_sanity() {
    train::TrainConfig c;
    c.optimizer = OptimizerKind::Radam;
    c.n_iters = 1;
    c.probe.enabled = true;
    c.evaluate_full = false;
    const auto r = train::train(c, mnist5k());
    const auto& p = r.probes.at(0);
    const bool corr = std::abs(p.moment_correlation - 1.0) <= 1e-12;
    const bool mag = p.median_update_magnitude == 1.0;
    std::string soft = p.median_cv < 1.0 ? "below 1" : "not below 1, report-only on this dataset";
    return {corr && mag, "t=1 moment correlation " + fmt(p.moment_correlation, 17) + " (1 within 1e-12), median update " +
                             fmt(p.median_update_magnitude, 17) + " (exactly 1); median CV " + fmt(p.median_cv, 4) +
                             " (" + soft + ")"};
}

struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
};

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance checks"};
    int only = 0;
    app.add_option("--only", only, "Run a single criterion")->check(CLI::Range(1, 11));
    CLI11_PARSE(app, argc, argv);

    const std::vector<Criterion> all{
        {1, "rectifier activation sweep", fact1_sweep},
        {2, "rho(5, 0.8)", rho5_at_08},
        {3, "simulation first step", sim_first_step},
        {4, "stationary median", sim_stationary},
        {5, "simulation settling", sim_settling},
        {6, "variance invariance", sim_scale_invariance},
        {7, "RAdam as scheduled Adam", radam_structure},
        {8, "effective warmup periods", effective_periods},
        {9, "gradient check", finite_differences},
        {10, "warmup interchangeability", interchangeability},
        {11, "probe sanity", probe_sanity},
    };

    int failures = 0;
    for (const auto& c : all) {
        if (only != 0 && c.id != only) continue;
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::cout << (o.pass ? "[PASS]" : "[FAIL]") << " criterion " << c.id << " (" << c.name << "): " << o.detail
                  << std::endl;
        failures += o.pass ? 0 : 1;
    }
    return failures == 0 ? 0 : 1;
}
