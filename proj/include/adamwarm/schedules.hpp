#pragma once

// Warmup schedules omega_t in [0, 1] (the learning rate at iteration t is
// alpha * omega_t), RAdam's rho terms, and the effective warmup period
// T(omega) = sum_{t>=1} (1 - omega_t).
//
// All functions are pure and thread-safe. Iterations are 1-based.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace adamwarm {

enum class ScheduleKind { ConstantOne, Linear, Exponential, RadamRectifier };

std::string_view to_string(ScheduleKind kind);
/// Accepts "constant", "linear", "exponential", "radam".
ScheduleKind schedule_kind_from_string(std::string_view name);

/// min(1, t / tau)
double linear_warmup(std::int64_t t, double tau);
/// 1 - exp(-t / tau)
double exponential_warmup(std::int64_t t, double tau);

/// Rule-of-thumb exponential period, 1 / (1 - beta2).
double untuned_exponential_tau(double beta2);
/// Rule-of-thumb linear period, 2 / (1 - beta2).
double untuned_linear_tau(double beta2);

struct RhoTerms {
    double rho_inf = 0.0;
    double rho_t = 0.0;
    /// rho_inf - rho_t = 2 t beta2^t / (1 - beta2^t), computed directly so it
    /// stays resolvable after rho_t has rounded to rho_inf.
    double gap = 0.0;
};

RhoTerms radam_rho(std::int64_t t, double beta2);

/// RAdam's rectifier. std::nullopt means the rectifier is inactive
/// (rho_t <= 4) and RAdam takes a momentum step instead.
std::optional<double> radam_warmup_factor(std::int64_t t, double beta2);

struct WarmupSchedule {
    ScheduleKind kind = ScheduleKind::ConstantOne;
    double tau = 1.0;     ///< Linear, Exponential
    double beta2 = 0.999; ///< RadamRectifier

    static WarmupSchedule constant_one() { return {}; }
    static WarmupSchedule linear(double tau) { return {ScheduleKind::Linear, tau, 0.999}; }
    static WarmupSchedule exponential(double tau) { return {ScheduleKind::Exponential, tau, 0.999}; }
    static WarmupSchedule radam(double beta2) { return {ScheduleKind::RadamRectifier, 1.0, beta2}; }
    static WarmupSchedule linear_untuned(double beta2);
    static WarmupSchedule exponential_untuned(double beta2);

    /// Throws InvalidArgument on a non-positive tau or beta2 outside (0, 1).
    void validate() const;

    /// omega_t. An inactive RAdam rectifier evaluates to 0.
    double factor(std::int64_t t) const;

    std::string describe() const;
};

/// Default truncation tolerance for effective_warmup_period.
inline constexpr double kDefaultPeriodTolerance = 1e-8;

/// T(omega) by direct summation. Linear schedules sum exactly (every term
/// past tau is zero). Exponential and RAdam sums stop once the current term
/// and an analytic bound on the remaining tail are both below tolerance.
double effective_warmup_period(const WarmupSchedule& schedule,
                               double tolerance = kDefaultPeriodTolerance);

} // namespace adamwarm
