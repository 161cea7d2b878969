#include "adamwarm/optim.hpp"

#include "adamwarm/errors.hpp"
#include "adamwarm/simd/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace adamwarm {

namespace {

void require_same_length(std::span<const double> params, std::span<const double> grad) {
    if (params.size() != grad.size()) {
        throw ShapeError("params has " + std::to_string(params.size()) + " entries but grad has " +
                         std::to_string(grad.size()));
    }
}

void prepare_state(OptimizerState& state, std::size_t p) {
    if (state.t < 0) throw InvalidArgument("optimizer iteration counter is negative");
    if (state.t == 0 && state.m.empty() && state.v.empty()) {
        state.m.assign(p, 0.0);
        state.v.assign(p, 0.0);
    }
    if (state.m.size() != p || state.v.size() != p) {
        throw ShapeError("optimizer state has " + std::to_string(state.m.size()) + "/" +
                         std::to_string(state.v.size()) + " moment slots for " + std::to_string(p) + " parameters");
    }
}

// new_params = params - update - lr * wd * params
std::vector<double> apply_update(std::span<const double> params, std::span<const double> update, double lr,
                                 double weight_decay) {
    std::vector<double> out(params.size());
    const double shrink = lr * weight_decay;
    for (std::size_t i = 0; i < params.size(); ++i) {
        out[i] = params[i] - update[i];
        if (shrink != 0.0) out[i] -= shrink * params[i];
    }
    return out;
}

// Advances the moments and fills result.update with alpha*omega*m_hat/(sqrt(v_hat)+eps).
StepResult adam_core(std::span<const double> params, std::span<const double> grad, OptimizerState& state,
                     const AdamHyperparams& hp, double warmup_factor, std::int64_t t) {
    StepResult r;
    r.update.resize(params.size());
    r.warmup_factor_applied = warmup_factor;
    const auto c = simd::make_adam_coeffs(hp.beta1, hp.beta2, hp.epsilon, hp.alpha * warmup_factor, t);
    simd::active_kernels().adam(state.m, state.v, grad, r.update, c);
    state.t = t;
    return r;
}

double omega5(double beta2) {
    const auto w = radam_warmup_factor(5, beta2);
    if (!w || !(radam_rho(4, beta2).rho_t <= 4.0)) {
        throw InvalidConfiguration("RAdam ablations need beta2 in [0.8, 1) so that omega_5 exists");
    }
    return *w;
}

} // namespace

void AdamHyperparams::validate() const {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw InvalidArgument("alpha must be positive");
    if (!(beta1 > 0.0 && beta1 < 1.0)) throw InvalidArgument("beta1 must lie in (0, 1)");
    if (!(beta2 > 0.0 && beta2 < 1.0)) throw InvalidArgument("beta2 must lie in (0, 1)");
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw InvalidArgument("epsilon must be non-negative");
    if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay)) {
        throw InvalidArgument("weight_decay must be non-negative");
    }
}

OptimizerState OptimizerState::zeros(std::size_t p) {
    return {0, std::vector<double>(p, 0.0), std::vector<double>(p, 0.0)};
}

std::string_view to_string(RadamAblation mode) {
    switch (mode) {
    case RadamAblation::Standard: return "standard";
    case RadamAblation::DoNothing: return "do-nothing";
    case RadamAblation::JumpToOmega5: return "jump-to-omega5";
    case RadamAblation::LinearToOmega5: return "linear-to-omega5";
    }
    return "unknown";
}

RadamAblation radam_ablation_from_string(std::string_view name) {
    if (name == "standard") return RadamAblation::Standard;
    if (name == "do-nothing") return RadamAblation::DoNothing;
    if (name == "jump-to-omega5") return RadamAblation::JumpToOmega5;
    if (name == "linear-to-omega5") return RadamAblation::LinearToOmega5;
    throw InvalidArgument("unknown RAdam ablation '" + std::string(name) + "'");
}

std::string_view to_string(OptimizerKind kind) {
    switch (kind) {
    case OptimizerKind::Sgd: return "sgd";
    case OptimizerKind::Adam: return "adam";
    case OptimizerKind::Radam: return "radam";
    }
    return "unknown";
}

OptimizerKind optimizer_kind_from_string(std::string_view name) {
    if (name == "sgd") return OptimizerKind::Sgd;
    if (name == "adam") return OptimizerKind::Adam;
    if (name == "radam") return OptimizerKind::Radam;
    throw InvalidArgument("unknown optimizer '" + std::string(name) + "'");
}

StepResult sgd_step(std::span<const double> params, std::span<const double> grad, double alpha) {
    require_same_length(params, grad);
    if (!(alpha > 0.0)) throw InvalidArgument("alpha must be positive");
    StepResult r;
    r.update.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) r.update[i] = alpha * grad[i];
    r.new_params = apply_update(params, r.update, alpha, 0.0);
    return r;
}

StepResult adam_step(std::span<const double> params, std::span<const double> grad, OptimizerState& state,
                     const AdamHyperparams& hp, double warmup_factor) {
    require_same_length(params, grad);
    hp.validate();
    if (!(warmup_factor >= 0.0 && warmup_factor <= 1.0)) throw InvalidArgument("warmup factor must lie in [0, 1]");
    prepare_state(state, params.size());
    StepResult r = adam_core(params, grad, state, hp, warmup_factor, state.t + 1);
    r.new_params = apply_update(params, r.update, hp.alpha * warmup_factor, hp.weight_decay);
    return r;
}

StepResult radam_step(std::span<const double> params, std::span<const double> grad, OptimizerState& state,
                      const AdamHyperparams& hp, RadamAblation ablation) {
    require_same_length(params, grad);
    hp.validate();
    prepare_state(state, params.size());
    const std::int64_t t = state.t + 1;
    if (const auto omega = radam_warmup_factor(t, hp.beta2)) {
        StepResult r = adam_core(params, grad, state, hp, *omega, t);
        r.new_params = apply_update(params, r.update, hp.alpha * *omega, hp.weight_decay);
        return r;
    }

    StepResult r;
    switch (ablation) {
    case RadamAblation::Standard: {
        r = adam_core(params, grad, state, hp, 1.0, t);
        // Bias-corrected heavy ball: alpha * m_t / (1 - beta1^t); v is accumulated but unused.
        const double c1 = 1.0 - std::pow(hp.beta1, static_cast<double>(t));
        for (std::size_t i = 0; i < params.size(); ++i) r.update[i] = hp.alpha * state.m[i] / c1;
        break;
    }
    case RadamAblation::DoNothing:
        omega5(hp.beta2);
        r = adam_core(params, grad, state, hp, 0.0, t);
        std::fill(r.update.begin(), r.update.end(), 0.0);
        break;
    case RadamAblation::JumpToOmega5: r = adam_core(params, grad, state, hp, omega5(hp.beta2), t); break;
    case RadamAblation::LinearToOmega5:
        r = adam_core(params, grad, state, hp, static_cast<double>(t) / 5.0 * omega5(hp.beta2), t);
        break;
    }
    r.new_params = apply_update(params, r.update, hp.alpha * r.warmup_factor_applied, hp.weight_decay);
    return r;
}

std::vector<double> adam_direction(std::span<const double> m_prev, std::span<const double> v_prev,
                                   std::span<const double> grad, std::int64_t t, double beta1, double beta2,
                                   double epsilon) {
    if (m_prev.size() != grad.size() || v_prev.size() != grad.size()) {
        throw ShapeError("adam_direction: moment and gradient lengths differ");
    }
    if (t < 1) throw InvalidArgument("iteration t must be >= 1");
    std::vector<double> m(m_prev.begin(), m_prev.end());
    std::vector<double> v(v_prev.begin(), v_prev.end());
    std::vector<double> out(grad.size());
    const auto c = simd::make_adam_coeffs(beta1, beta2, epsilon, 1.0, t);
    simd::active_kernels().adam(m, v, grad, out, c);
    return out;
}

Optimizer::Optimizer(OptimizerKind kind, AdamHyperparams hp, WarmupSchedule schedule, RadamAblation ablation)
    : kind_(kind), hp_(hp), schedule_(schedule), ablation_(ablation) {
    hp_.validate();
    schedule_.validate();
    if (kind_ == OptimizerKind::Radam && schedule_.kind != ScheduleKind::ConstantOne) {
        throw InvalidConfiguration("RAdam applies its own rectifier; combine it with the constant schedule only");
    }
    if (kind_ == OptimizerKind::Radam && ablation_ != RadamAblation::Standard) omega5(hp_.beta2);
}

StepResult Optimizer::step(std::span<const double> params, std::span<const double> grad) {
    switch (kind_) {
    case OptimizerKind::Sgd: {
        require_same_length(params, grad);
        const std::int64_t t = state_.t + 1;
        const double omega = schedule_.factor(t);
        const double lr = hp_.alpha * omega;
        StepResult r;
        r.update.resize(params.size());
        for (std::size_t i = 0; i < params.size(); ++i) r.update[i] = lr * grad[i];
        r.new_params = apply_update(params, r.update, lr, hp_.weight_decay);
        r.warmup_factor_applied = omega;
        state_.t = t;
        return r;
    }
    case OptimizerKind::Adam: return adam_step(params, grad, state_, hp_, schedule_.factor(state_.t + 1));
    case OptimizerKind::Radam: return radam_step(params, grad, state_, hp_, ablation_);
    }
    throw InvalidConfiguration("unknown optimizer kind");
}

nlohmann::json Optimizer::to_json() const {
    return {
        {"version", kOptimizerCheckpointVersion},
        {"kind", to_string(kind_)},
        {"hyperparams",
         {{"alpha", hp_.alpha},
          {"beta1", hp_.beta1},
          {"beta2", hp_.beta2},
          {"epsilon", hp_.epsilon},
          {"weight_decay", hp_.weight_decay}}},
        {"schedule", {{"kind", to_string(schedule_.kind)}, {"tau", schedule_.tau}, {"beta2", schedule_.beta2}}},
        {"ablation", to_string(ablation_)},
        {"t", state_.t},
        {"m", state_.m},
        {"v", state_.v},
    };
}

Optimizer Optimizer::from_json(const nlohmann::json& j) {
    const int version = j.at("version").get<int>();
    if (version != kOptimizerCheckpointVersion) {
        throw InvalidArgument("unsupported optimizer checkpoint version " + std::to_string(version));
    }
    AdamHyperparams hp;
    const auto& h = j.at("hyperparams");
    hp.alpha = h.at("alpha").get<double>();
    hp.beta1 = h.at("beta1").get<double>();
    hp.beta2 = h.at("beta2").get<double>();
    hp.epsilon = h.at("epsilon").get<double>();
    hp.weight_decay = h.at("weight_decay").get<double>();
    WarmupSchedule s;
    const auto& js = j.at("schedule");
    s.kind = schedule_kind_from_string(js.at("kind").get<std::string>());
    s.tau = js.at("tau").get<double>();
    s.beta2 = js.at("beta2").get<double>();
    Optimizer opt(optimizer_kind_from_string(j.at("kind").get<std::string>()), hp, s,
                  radam_ablation_from_string(j.at("ablation").get<std::string>()));
    opt.state_.t = j.at("t").get<std::int64_t>();
    opt.state_.m = j.at("m").get<std::vector<double>>();
    opt.state_.v = j.at("v").get<std::vector<double>>();
    if (opt.state_.t < 0 || opt.state_.m.size() != opt.state_.v.size()) {
        throw InvalidArgument("corrupt optimizer checkpoint state");
    }
    for (double x : opt.state_.v) {
        if (!(x >= 0.0)) throw InvalidArgument("corrupt optimizer checkpoint: negative second moment");
    }
    return opt;
}

Optimizer scheduled_optimizer(OptimizerKind kind, const AdamHyperparams& hp, const WarmupSchedule& schedule,
                              RadamAblation ablation) {
    return Optimizer(kind, hp, schedule, ablation);
}

} // namespace adamwarm
