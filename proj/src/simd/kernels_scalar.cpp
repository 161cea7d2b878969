#include "adamwarm/simd/kernels.hpp"

#include <cmath>

namespace adamwarm::simd {

AdamCoeffs make_adam_coeffs(double beta1, double beta2, double eps, double lr, long long t) {
    AdamCoeffs c;
    c.beta1 = beta1;
    c.beta2 = beta2;
    c.one_minus_beta1 = 1.0 - beta1;
    c.one_minus_beta2 = 1.0 - beta2;
    // pow(b, 1) == b exactly, so c1 == 1 - beta1 bit-for-bit at t = 1.
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    c.mhat_prev = beta1 / c1;
    c.mhat_grad = c.one_minus_beta1 / c1;
    c.vhat_prev = beta2 / c2;
    c.vhat_grad = c.one_minus_beta2 / c2;
    c.lr = lr;
    c.eps = eps;
    return c;
}

namespace scalar {

void adam(std::span<double> m, std::span<double> v, std::span<const double> g,
          std::span<double> update, const AdamCoeffs& c) {
    const std::size_t n = g.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double gi = g[i];
        const double g2 = gi * gi;
        const double mh = c.mhat_prev * m[i] + c.mhat_grad * gi;
        const double vh = c.vhat_prev * v[i] + c.vhat_grad * g2;
        m[i] = c.beta1 * m[i] + c.one_minus_beta1 * gi;
        v[i] = c.beta2 * v[i] + c.one_minus_beta2 * g2;
        const double denom = std::sqrt(vh) + c.eps;
        update[i] = denom == 0.0 ? 0.0 : c.lr * (mh / denom);
    }
}

void axpy(double a, std::span<const double> x, std::span<double> y) {
    const std::size_t n = x.size();
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

double dot(std::span<const double> x, std::span<const double> y) {
    double acc = 0.0;
    const std::size_t n = x.size();
    for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
    return acc;
}

} // namespace scalar
} // namespace adamwarm::simd
