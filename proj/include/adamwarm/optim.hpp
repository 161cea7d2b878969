#pragma once

// Per-iteration update rules: SGD, Adam, RAdam (with the ablations of its
// first four iterations) and a stateful stepper that applies a warmup
// schedule. Weight decay is decoupled: it shrinks the parameters by
// alpha * omega_t * weight_decay * theta and never enters m or v.

#include "adamwarm/schedules.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace adamwarm {

struct AdamHyperparams {
    double alpha = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    /// Outside the square root. Zero is allowed; 0/0 coordinates get a zero update.
    double epsilon = 1e-8;
    double weight_decay = 0.0;

    void validate() const;
};

struct OptimizerState {
    std::int64_t t = 0;
    std::vector<double> m;
    std::vector<double> v;

    /// Empty state of dimension p (t = 0, m = v = 0).
    static OptimizerState zeros(std::size_t p);
};

struct StepResult {
    std::vector<double> new_params;
    /// What was subtracted from the parameters, excluding weight decay.
    std::vector<double> update;
    double warmup_factor_applied = 1.0;
};

enum class RadamAblation {
    Standard,       ///< heavy-ball momentum while the rectifier is inactive
    DoNothing,      ///< zero update for t <= 4 (moments still accumulate)
    JumpToOmega5,   ///< Adam at alpha * omega_5 for t <= 4
    LinearToOmega5, ///< Adam at alpha * (t/5) * omega_5 for t <= 4
};

std::string_view to_string(RadamAblation mode);
RadamAblation radam_ablation_from_string(std::string_view name);

StepResult sgd_step(std::span<const double> params, std::span<const double> grad, double alpha);

/// One Adam iteration at t = state.t + 1 with learning rate alpha * warmup_factor.
StepResult adam_step(std::span<const double> params, std::span<const double> grad, OptimizerState& state,
                     const AdamHyperparams& hp, double warmup_factor);

/// One RAdam iteration. Once the rectifier is active this is exactly
/// adam_step with warmup_factor = radam_warmup_factor(t, beta2).
/// The non-standard ablations need beta2 in [0.8, 1), where omega_5 exists.
StepResult radam_step(std::span<const double> params, std::span<const double> grad, OptimizerState& state,
                      const AdamHyperparams& hp, RadamAblation ablation = RadamAblation::Standard);

/// The bracketed Adam direction m_hat / (sqrt(v_hat) + eps) that the step at
/// t = prev.t + 1 would produce, without touching the state. Used by the
/// training probes, which report update magnitudes in units of alpha.
std::vector<double> adam_direction(std::span<const double> m_prev, std::span<const double> v_prev,
                                   std::span<const double> grad, std::int64_t t, double beta1, double beta2,
                                   double epsilon);

enum class OptimizerKind { Sgd, Adam, Radam };

std::string_view to_string(OptimizerKind kind);
OptimizerKind optimizer_kind_from_string(std::string_view name);

/// Stateful stepper. The k-th call to step() runs iteration t = k and, for
/// SGD and Adam, scales the learning rate by schedule.factor(t).
class Optimizer {
public:
    Optimizer(OptimizerKind kind, AdamHyperparams hp, WarmupSchedule schedule,
              RadamAblation ablation = RadamAblation::Standard);

    StepResult step(std::span<const double> params, std::span<const double> grad);

    OptimizerKind kind() const noexcept { return kind_; }
    const AdamHyperparams& hyperparams() const noexcept { return hp_; }
    const WarmupSchedule& schedule() const noexcept { return schedule_; }
    RadamAblation ablation() const noexcept { return ablation_; }
    const OptimizerState& state() const noexcept { return state_; }
    std::int64_t iteration() const noexcept { return state_.t; }

    /// Versioned JSON checkpoint: kind, hyperparameters, schedule, ablation, t, m, v.
    nlohmann::json to_json() const;
    static Optimizer from_json(const nlohmann::json& j);

private:
    OptimizerKind kind_;
    AdamHyperparams hp_;
    WarmupSchedule schedule_;
    RadamAblation ablation_;
    OptimizerState state_;
};

/// Validating factory. RAdam's rectifier is its schedule, so it only accepts
/// ConstantOne; anything else is an InvalidConfiguration.
Optimizer scheduled_optimizer(OptimizerKind kind, const AdamHyperparams& hp, const WarmupSchedule& schedule,
                              RadamAblation ablation = RadamAblation::Standard);

inline constexpr int kOptimizerCheckpointVersion = 1;

} // namespace adamwarm
