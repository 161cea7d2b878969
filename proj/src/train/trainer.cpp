#include "adamwarm/train/trainer.hpp"

#include "adamwarm/errors.hpp"
#include "adamwarm/stats.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>

namespace adamwarm::train {

namespace {

constexpr std::uint64_t kInitStream = 0;
constexpr std::uint64_t kBatchStream = 1;
constexpr std::uint64_t kProbeCoordStream = 2;
constexpr std::uint64_t kProbeBatchStream = 3;

bool probe_due(const ProbeSettings& p, std::int64_t t) {
    if (!p.enabled) return false;
    if (p.until > 0 && t > p.until) return false;
    return (t - 1) % p.every == 0;
}

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", x);
    return buf;
}

} // namespace

void TrainConfig::validate(const IdxDataset& data) const {
    hp.validate();
    warmup.validate();
    if (data.count == 0) throw InvalidArgument("dataset is empty");
    if (batch_size == 0) throw InvalidArgument("batch_size must be positive");
    if (batch_size > data.count) {
        throw InvalidArgument("batch_size " + std::to_string(batch_size) + " exceeds dataset size " +
                              std::to_string(data.count));
    }
    if (n_iters <= 0) throw InvalidArgument("n_iters must be positive");
    if (probe.enabled) {
        if (optimizer == OptimizerKind::Sgd) {
            throw InvalidConfiguration("probes read Adam moment estimates; use adam or radam");
        }
        if (probe.grad_samples < 2) throw InvalidArgument("probe needs at least 2 gradient samples");
        if (probe.params_per_matrix == 0) throw InvalidArgument("probe needs at least one coordinate per matrix");
        if (probe.every <= 0) throw InvalidArgument("probe interval must be positive");
    }
}

BatchSampler::BatchSampler(std::size_t dataset_size, std::uint64_t seed, std::uint64_t stream)
    : perm_(dataset_size), rng_(seed, stream) {
    std::iota(perm_.begin(), perm_.end(), std::size_t{0});
}

std::vector<std::size_t> BatchSampler::next(std::size_t batch_size) {
    // Partial Fisher-Yates over a persistent permutation: each call yields a
    // uniformly random subset regardless of the current order.
    const std::size_t n = perm_.size();
    for (std::size_t i = 0; i < batch_size; ++i) {
        const std::size_t j = i + rng_.below(n - i);
        std::swap(perm_[i], perm_[j]);
    }
    return {perm_.begin(), perm_.begin() + static_cast<std::ptrdiff_t>(batch_size)};
}

std::vector<std::size_t> sample_probe_coordinates(const Mlp& model, std::size_t per_matrix, RandomStream& rng) {
    std::vector<std::size_t> out;
    for (const auto& layer : model.layers()) {
        const std::size_t n = layer.weight_count();
        const std::size_t k = std::min(n, per_matrix);
        std::vector<std::size_t> pick(n);
        std::iota(pick.begin(), pick.end(), std::size_t{0});
        for (std::size_t i = 0; i < k; ++i) {
            const std::size_t j = i + rng.below(n - i);
            std::swap(pick[i], pick[j]);
        }
        pick.resize(k);
        std::sort(pick.begin(), pick.end());
        for (auto p : pick) out.push_back(layer.weight_offset + p);
    }
    return out;
}

std::uint64_t parameter_checksum(std::span<const double> params) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (double x : params) {
        auto bits = std::bit_cast<std::uint64_t>(x);
        for (int b = 0; b < 8; ++b) {
            h ^= (bits & 0xFF);
            h *= 0x100000001b3ull;
            bits >>= 8;
        }
    }
    return h;
}

std::vector<double> collect_gradient_samples(const Mlp& model, const IdxDataset& data, BatchSampler& sampler,
                                             std::span<const std::size_t> coords, std::size_t n_samples,
                                             std::size_t batch_size) {
    const std::size_t k = coords.size();
    std::vector<double> samples(n_samples * k, 0.0);
    for (std::size_t r = 0; r < n_samples; ++r) {
        const auto idx = sampler.next(batch_size);
        const auto lg = forward_backward(model, make_batch(data, idx));
        for (std::size_t c = 0; c < k; ++c) samples[r * k + c] = lg.grad[coords[c]];
    }
    return samples;
}

TrainResult train(const TrainConfig& config, const IdxDataset& data, const ProbeObserver& observer) {
    config.validate(data);
    if (data.n_classes < 2) throw InvalidArgument("dataset needs at least two classes");

    RandomStream init_rng(config.seed, kInitStream);
    TrainResult result;
    result.model = init_mlp(data.input_dim(), data.n_classes, init_rng, config.hidden);
    Mlp& model = result.model;

    Optimizer opt = scheduled_optimizer(config.optimizer, config.hp, config.warmup, config.ablation);
    BatchSampler batches(data.count, config.seed, kBatchStream);
    BatchSampler probe_batches(data.count, config.seed, kProbeBatchStream);

    std::vector<std::size_t> coords;
    if (config.probe.enabled) {
        RandomStream coord_rng(config.seed, kProbeCoordStream);
        coords = sample_probe_coordinates(model, config.probe.params_per_matrix, coord_rng);
    }

    const double nan = std::numeric_limits<double>::quiet_NaN();
    result.initial_loss = config.evaluate_full ? dataset_loss(model, data) : nan;
    result.loss_curve.reserve(static_cast<std::size_t>(config.n_iters));

    const std::size_t k = coords.size();
    std::vector<double> samples; // grad_samples x k
    std::vector<double> column(config.probe.grad_samples);
    std::vector<double> m_prev(k), v_prev(k), g_sel(k);

    for (std::int64_t t = 1; t <= config.n_iters; ++t) {
        const bool probing = probe_due(config.probe, t);
        ProbeRecord rec;
        if (probing) {
            rec.t = t;
            rec.sampled_coordinates = k;
            const std::size_t s = config.probe.grad_samples;
            samples = collect_gradient_samples(model, data, probe_batches, coords, s, config.batch_size);
            std::vector<double> cvs;
            cvs.reserve(k);
            for (std::size_t c = 0; c < k; ++c) {
                for (std::size_t r = 0; r < s; ++r) column[r] = samples[r * k + c];
                try {
                    cvs.push_back(stats::coefficient_of_variation(column));
                } catch (const UndefinedStatistic&) {
                    ++rec.skipped_cv;
                }
            }
            rec.median_cv = cvs.empty() ? nan : stats::median(cvs);
        }

        const auto idx = batches.next(config.batch_size);
        const auto lg = forward_backward(model, make_batch(data, idx));
        result.loss_curve.push_back(lg.loss);

        if (probing) {
            const auto& st = opt.state();
            for (std::size_t c = 0; c < k; ++c) {
                m_prev[c] = st.m.empty() ? 0.0 : st.m[coords[c]];
                v_prev[c] = st.v.empty() ? 0.0 : st.v[coords[c]];
                g_sel[c] = lg.grad[coords[c]];
            }
            const auto dir = adam_direction(m_prev, v_prev, g_sel, t, config.hp.beta1, config.hp.beta2, 0.0);
            std::vector<double> mags;
            mags.reserve(k);
            for (std::size_t c = 0; c < k; ++c) {
                if (v_prev[c] == 0.0 && g_sel[c] == 0.0) {
                    ++rec.skipped_update;
                } else {
                    mags.push_back(std::abs(dir[c]));
                }
            }
            rec.median_update_magnitude = mags.empty() ? nan : stats::median(mags);
        }

        StepResult step = opt.step(model.params(), lg.grad);
        model.set_params(step.new_params);

        if (probing) {
            const auto& st = opt.state();
            std::vector<double> abs_m(k), sqrt_v(k);
            for (std::size_t c = 0; c < k; ++c) {
                abs_m[c] = std::abs(st.m[coords[c]]);
                sqrt_v[c] = std::sqrt(st.v[coords[c]]);
            }
            try {
                rec.moment_correlation = stats::pearson_correlation(abs_m, sqrt_v);
            } catch (const UndefinedStatistic&) {
                rec.moment_correlation = nan;
            }
            result.probes.push_back(rec);
            if (observer) observer(rec);
        }
    }

    result.final_loss = config.evaluate_full ? dataset_loss(model, data) : nan;
    result.optimizer_checkpoint = opt.to_json();
    return result;
}

std::string_view to_string(WarmupMethod method) {
    switch (method) {
    case WarmupMethod::ExponentialUntuned: return "expo-untuned";
    case WarmupMethod::LinearUntuned: return "linear-untuned";
    case WarmupMethod::Radam: return "radam";
    }
    return "unknown";
}

TrainConfig with_warmup_method(TrainConfig base, WarmupMethod method) {
    switch (method) {
    case WarmupMethod::ExponentialUntuned:
        base.optimizer = OptimizerKind::Adam;
        base.warmup = WarmupSchedule::exponential_untuned(base.hp.beta2);
        break;
    case WarmupMethod::LinearUntuned:
        base.optimizer = OptimizerKind::Adam;
        base.warmup = WarmupSchedule::linear_untuned(base.hp.beta2);
        break;
    case WarmupMethod::Radam:
        base.optimizer = OptimizerKind::Radam;
        base.warmup = WarmupSchedule::constant_one();
        base.ablation = RadamAblation::Standard;
        break;
    }
    return base;
}

WarmupComparison compare_warmups(const TrainConfig& base, const IdxDataset& data, std::size_t n_seeds,
                                 const std::function<void(const ComparisonRun&)>& on_run) {
    if (n_seeds < 2) throw InvalidArgument("comparing warmups needs at least 2 seeds");
    constexpr WarmupMethod kMethods[] = {WarmupMethod::ExponentialUntuned, WarmupMethod::LinearUntuned,
                                         WarmupMethod::Radam};
    WarmupComparison out;
    out.all_halved = true;
    std::vector<double> means;
    for (WarmupMethod method : kMethods) {
        std::vector<double> finals;
        for (std::size_t s = 0; s < n_seeds; ++s) {
            TrainConfig cfg = with_warmup_method(base, method);
            cfg.seed = base.seed + s;
            cfg.probe.enabled = false;
            cfg.evaluate_full = true;
            TrainResult r = train(cfg, data);
            ComparisonRun run{method, cfg.seed, r.initial_loss, r.final_loss, std::move(r.loss_curve)};
            out.all_halved = out.all_halved && run.final_loss < 0.5 * run.initial_loss;
            finals.push_back(run.final_loss);
            if (on_run) on_run(run);
            out.runs.push_back(std::move(run));
        }
        const double mu = stats::mean(finals);
        double ss = 0.0;
        for (double f : finals) ss += (f - mu) * (f - mu);
        out.max_seed_std = std::max(out.max_seed_std, std::sqrt(ss / static_cast<double>(finals.size() - 1)));
        means.push_back(mu);
    }
    for (std::size_t i = 0; i < means.size(); ++i) {
        for (std::size_t j = i + 1; j < means.size(); ++j) {
            out.max_method_gap = std::max(out.max_method_gap, std::abs(means[i] - means[j]));
        }
    }
    out.interchangeable = out.max_method_gap <= 2.0 * out.max_seed_std;
    return out;
}

void write_loss_csv(std::ostream& os, std::span<const double> loss_curve) {
    os << "t,loss\n";
    for (std::size_t i = 0; i < loss_curve.size(); ++i) os << (i + 1) << ',' << format_double(loss_curve[i]) << '\n';
}

void write_probe_csv(std::ostream& os, std::span<const ProbeRecord> probes) {
    os << "t,median_cv,moment_corr,median_update_mag\n";
    for (const auto& p : probes) {
        os << p.t << ',' << format_double(p.median_cv) << ',' << format_double(p.moment_correlation) << ','
           << format_double(p.median_update_magnitude) << '\n';
    }
}

} // namespace adamwarm::train
