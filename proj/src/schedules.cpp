#include "adamwarm/schedules.hpp"

#include "adamwarm/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace adamwarm {

namespace {

void require_iteration(std::int64_t t) {
    if (t < 1) throw InvalidArgument("iteration t must be >= 1, got " + std::to_string(t));
}

void require_tau(double tau) {
    if (!(tau > 0.0) || !std::isfinite(tau)) {
        throw InvalidArgument("warmup period tau must be positive and finite");
    }
}

void require_beta2(double beta2) {
    if (!(beta2 > 0.0 && beta2 < 1.0)) {
        throw InvalidArgument("beta2 must lie in (0, 1)");
    }
}

// Compensated accumulator; exponential and RAdam sums run to ~10^5 terms.
struct NeumaierSum {
    double sum = 0.0;
    double carry = 0.0;
    void add(double x) {
        const double s = sum + x;
        if (std::abs(sum) >= std::abs(x)) {
            carry += (sum - s) + x;
        } else {
            carry += (x - s) + sum;
        }
        sum = s;
    }
    double value() const { return sum + carry; }
};

double linear_period(double tau) {
    NeumaierSum acc;
    for (std::int64_t t = 1; static_cast<double>(t) < tau; ++t) {
        acc.add(1.0 - linear_warmup(t, tau));
    }
    return acc.value();
}

double exponential_period(double tau, double tolerance) {
    // Terms are r^t with r = exp(-1/tau); the tail after t is r^(t+1) / (1 - r).
    const double r = std::exp(-1.0 / tau);
    const double one_minus_r = -std::expm1(-1.0 / tau);
    NeumaierSum acc;
    for (std::int64_t t = 1;; ++t) {
        const double term = std::exp(-static_cast<double>(t) / tau);
        acc.add(term);
        const double tail = term * r / one_minus_r;
        if (term < tolerance && tail < tolerance) break;
    }
    return acc.value();
}

double radam_period(double beta2, double tolerance) {
    // With f(rho) = (rho-4)(rho-2)/rho and f' <= 1,
    //   1 - omega_t <= 1 - omega_t^2 <= gap_t / f(rho_inf),
    // and for s > t, gap_s <= 2 s beta2^s / (1 - beta2^t), whose sum is
    //   2 beta2^(t+1) ((t+1) - t beta2) / ((1 - beta2)^2 (1 - beta2^t)).
    const double rho_inf = 2.0 / (1.0 - beta2) - 1.0;
    const double f_inf = (rho_inf - 4.0) * (rho_inf - 2.0) / rho_inf;
    const double log_b = std::log(beta2);
    const double omb = 1.0 - beta2;
    NeumaierSum acc;
    for (std::int64_t t = 1;; ++t) {
        const auto omega = radam_warmup_factor(t, beta2);
        const double term = 1.0 - omega.value_or(0.0);
        acc.add(term);
        if (!omega) continue;
        const double td = static_cast<double>(t);
        const double bt = std::exp(td * log_b);
        const double one_minus_bt = -std::expm1(td * log_b);
        const double tail = 2.0 * bt * beta2 * ((td + 1.0) - td * beta2) / (omb * omb * one_minus_bt) / f_inf;
        if (term < tolerance && tail < tolerance) break;
    }
    return acc.value();
}

} // namespace

std::string_view to_string(ScheduleKind kind) {
    switch (kind) {
    case ScheduleKind::ConstantOne: return "constant";
    case ScheduleKind::Linear: return "linear";
    case ScheduleKind::Exponential: return "exponential";
    case ScheduleKind::RadamRectifier: return "radam";
    }
    return "unknown";
}

ScheduleKind schedule_kind_from_string(std::string_view name) {
    if (name == "constant") return ScheduleKind::ConstantOne;
    if (name == "linear") return ScheduleKind::Linear;
    if (name == "exponential") return ScheduleKind::Exponential;
    if (name == "radam") return ScheduleKind::RadamRectifier;
    throw InvalidArgument("unknown schedule kind '" + std::string(name) + "'");
}

double linear_warmup(std::int64_t t, double tau) {
    require_iteration(t);
    require_tau(tau);
    return std::min(1.0, static_cast<double>(t) / tau);
}

double exponential_warmup(std::int64_t t, double tau) {
    require_iteration(t);
    require_tau(tau);
    return -std::expm1(-static_cast<double>(t) / tau);
}

double untuned_exponential_tau(double beta2) {
    require_beta2(beta2);
    return 1.0 / (1.0 - beta2);
}

double untuned_linear_tau(double beta2) {
    require_beta2(beta2);
    return 2.0 / (1.0 - beta2);
}

RhoTerms radam_rho(std::int64_t t, double beta2) {
    require_iteration(t);
    require_beta2(beta2);
    const double td = static_cast<double>(t);
    const double exponent = td * std::log(beta2);
    const double bt = std::exp(exponent);
    const double one_minus_bt = -std::expm1(exponent);
    RhoTerms r;
    r.rho_inf = 2.0 / (1.0 - beta2) - 1.0;
    r.gap = 2.0 * td * bt / one_minus_bt;
    r.rho_t = r.rho_inf - r.gap;
    return r;
}

std::optional<double> radam_warmup_factor(std::int64_t t, double beta2) {
    const RhoTerms r = radam_rho(t, beta2);
    if (r.rho_t <= 4.0) return std::nullopt;
    const double num = (r.rho_t - 4.0) * (r.rho_t - 2.0) * r.rho_inf;
    const double den = (r.rho_inf - 4.0) * (r.rho_inf - 2.0) * r.rho_t;
    const double direct = num / den;
    if (direct < 0.25) return std::sqrt(direct);
    // Near saturation rho_t - rho_inf is below an ulp and the ratio wobbles.
    // With f(rho) = rho - 6 + 8/rho, f(rho_inf) - f(rho_t) = gap (1 - 8/(rho_inf rho_t)),
    // which shrinks smoothly with gap and keeps omega monotone after rounding.
    const double f_inf = (r.rho_inf - 4.0) * (r.rho_inf - 2.0) / r.rho_inf;
    const double deficit = r.gap * (1.0 - 8.0 / (r.rho_inf * r.rho_t)) / f_inf;
    return std::sqrt(1.0 - deficit);
}

WarmupSchedule WarmupSchedule::linear_untuned(double beta2) {
    return {ScheduleKind::Linear, untuned_linear_tau(beta2), beta2};
}

WarmupSchedule WarmupSchedule::exponential_untuned(double beta2) {
    return {ScheduleKind::Exponential, untuned_exponential_tau(beta2), beta2};
}

void WarmupSchedule::validate() const {
    switch (kind) {
    case ScheduleKind::ConstantOne: return;
    case ScheduleKind::Linear:
    case ScheduleKind::Exponential: require_tau(tau); return;
    case ScheduleKind::RadamRectifier: require_beta2(beta2); return;
    }
}

double WarmupSchedule::factor(std::int64_t t) const {
    switch (kind) {
    case ScheduleKind::ConstantOne: require_iteration(t); return 1.0;
    case ScheduleKind::Linear: return linear_warmup(t, tau);
    case ScheduleKind::Exponential: return exponential_warmup(t, tau);
    case ScheduleKind::RadamRectifier: return radam_warmup_factor(t, beta2).value_or(0.0);
    }
    return 1.0;
}

std::string WarmupSchedule::describe() const {
    std::ostringstream os;
    os << to_string(kind);
    if (kind == ScheduleKind::Linear || kind == ScheduleKind::Exponential) os << "(tau=" << tau << ")";
    if (kind == ScheduleKind::RadamRectifier) os << "(beta2=" << beta2 << ")";
    return os.str();
}

double effective_warmup_period(const WarmupSchedule& schedule, double tolerance) {
    schedule.validate();
    if (!(tolerance > 0.0)) throw InvalidArgument("tolerance must be positive");
    switch (schedule.kind) {
    case ScheduleKind::ConstantOne: return 0.0;
    case ScheduleKind::Linear: return linear_period(schedule.tau);
    case ScheduleKind::Exponential: return exponential_period(schedule.tau, tolerance);
    case ScheduleKind::RadamRectifier: return radam_period(schedule.beta2, tolerance);
    }
    return 0.0;
}

} // namespace adamwarm
