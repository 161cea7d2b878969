#pragma once

// Minibatch training loop with optional gradient-statistics probes.
//
// A probe at iteration t draws `grad_samples` extra minibatches, runs a
// backward pass on each without touching the parameters, and summarises a
// fixed random subset of weight-matrix coordinates:
//   - median over coordinates of the gradient coefficient of variation,
//   - Pearson correlation of |m_t| and sqrt(v_t) from the optimizer state
//     right after step t,
//   - median of |m_hat / sqrt(v_hat)| for step t (epsilon = 0, no warmup
//     factor), i.e. the update magnitude in units of alpha.

#include "adamwarm/optim.hpp"
#include "adamwarm/train/idx.hpp"
#include "adamwarm/train/mlp.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string_view>
#include <vector>

namespace adamwarm::train {

struct ProbeSettings {
    bool enabled = false;
    std::size_t grad_samples = 64;
    std::size_t params_per_matrix = 500;
    /// Probe at t = 1, 1 + every, 1 + 2*every, ...
    std::int64_t every = 10;
    /// Last iteration to probe; 0 means no limit.
    std::int64_t until = 0;
};

struct TrainConfig {
    AdamHyperparams hp{1e-3, 0.9, 0.999, 1e-8, 1e-4};
    OptimizerKind optimizer = OptimizerKind::Adam;
    WarmupSchedule warmup = WarmupSchedule::constant_one();
    RadamAblation ablation = RadamAblation::Standard;
    std::size_t batch_size = 256;
    std::int64_t n_iters = 2000;
    std::vector<std::size_t> hidden = kDefaultHidden;
    ProbeSettings probe;
    std::uint64_t seed = 0;
    /// Evaluate the full-dataset loss before and after training.
    bool evaluate_full = true;

    void validate(const IdxDataset& data) const;
};

struct ProbeRecord {
    std::int64_t t = 0;
    double median_cv = 0.0;
    double moment_correlation = 0.0;
    double median_update_magnitude = 0.0;
    std::size_t sampled_coordinates = 0;
    /// Coordinates whose sampled gradient mean was exactly zero (CV undefined).
    std::size_t skipped_cv = 0;
    /// Coordinates with zero second-moment estimate (no update direction).
    std::size_t skipped_update = 0;
};

struct TrainResult {
    Mlp model;
    std::vector<double> loss_curve; ///< minibatch loss at t = 1..n_iters
    std::vector<ProbeRecord> probes;
    double initial_loss = 0.0; ///< full-dataset loss before the first step (NaN if not evaluated)
    double final_loss = 0.0;   ///< full-dataset loss after the last step (NaN if not evaluated)
    nlohmann::json optimizer_checkpoint;
};

/// Uniform without-replacement sampling of minibatches.
class BatchSampler {
public:
    BatchSampler(std::size_t dataset_size, std::uint64_t seed, std::uint64_t stream);
    /// Fresh batch of distinct indices, independent of previous batches.
    std::vector<std::size_t> next(std::size_t batch_size);

private:
    std::vector<std::size_t> perm_;
    RandomStream rng_;
};

/// Flat parameter indices of up to `per_matrix` distinct weights from every
/// weight matrix (biases excluded), drawn uniformly without replacement.
std::vector<std::size_t> sample_probe_coordinates(const Mlp& model, std::size_t per_matrix, RandomStream& rng);

/// Runs `n_samples` backward passes on fresh minibatches at the current
/// parameters and returns the gradients at `coords`, n_samples x coords.size(),
/// row-major. The model is only read.
std::vector<double> collect_gradient_samples(const Mlp& model, const IdxDataset& data, BatchSampler& sampler,
                                             std::span<const std::size_t> coords, std::size_t n_samples,
                                             std::size_t batch_size);

using ProbeObserver = std::function<void(const ProbeRecord&)>;

TrainResult train(const TrainConfig& config, const IdxDataset& data, const ProbeObserver& observer = {});

/// The three warmup methods compared head to head.
enum class WarmupMethod { ExponentialUntuned, LinearUntuned, Radam };

std::string_view to_string(WarmupMethod method);

/// Applies a warmup method to a base configuration: Adam with an untuned
/// schedule, or RAdam with the constant schedule.
TrainConfig with_warmup_method(TrainConfig base, WarmupMethod method);

struct ComparisonRun {
    WarmupMethod method{};
    std::uint64_t seed = 0;
    double initial_loss = 0.0;
    double final_loss = 0.0;
    std::vector<double> loss_curve;
};

struct WarmupComparison {
    std::vector<ComparisonRun> runs;
    /// Largest pairwise difference between per-method mean final losses.
    double max_method_gap = 0.0;
    /// Largest per-method sample standard deviation of final loss across seeds.
    double max_seed_std = 0.0;
    /// Every run's final loss below half its initial loss.
    bool all_halved = false;
    /// max_method_gap <= 2 * max_seed_std.
    bool interchangeable = false;
};

/// Trains every method for seeds base.seed, base.seed + 1, ... (n_seeds of
/// them). Runs sharing a seed share initial weights and minibatch order.
WarmupComparison compare_warmups(const TrainConfig& base, const IdxDataset& data, std::size_t n_seeds,
                                 const std::function<void(const ComparisonRun&)>& on_run = {});

/// FNV-1a over the bit patterns of a parameter vector.
std::uint64_t parameter_checksum(std::span<const double> params);

void write_loss_csv(std::ostream& os, std::span<const double> loss_curve);
void write_probe_csv(std::ostream& os, std::span<const ProbeRecord> probes);

} // namespace adamwarm::train
