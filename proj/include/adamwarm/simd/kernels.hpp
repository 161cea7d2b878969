#pragma once

// Data-parallel inner loops shared by the optimizers, the local-minimum
// simulation and the MLP. Every kernel has a scalar reference version;
// wider variants are compiled in separate translation units and picked at
// runtime from what the CPU reports.
//
// The Adam kernel is required to be bit-identical across variants (it only
// uses mul/add/div/sqrt, each correctly rounded per lane). The linear algebra
// kernels (axpy, dot) may use FMA and a different summation order, so they
// agree with the reference only to rounding.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace adamwarm::simd {

enum class Isa { Scalar, Avx2 };

std::string_view isa_name(Isa isa);

/// Per-step coefficients of the fused Adam moment/update kernel.
///
/// Raw moments follow the usual recurrences
///   m <- beta1*m + (1-beta1)*g,   v <- beta2*v + (1-beta2)*g^2
/// while the bias-corrected estimates are formed from the *previous* moments,
///   m_hat = (beta1/c1)*m_prev + ((1-beta1)/c1)*g,   c1 = 1 - beta1^t
/// which equals m_new/c1 algebraically but makes the first step exact:
/// (1-beta1)/c1 is exactly 1 at t = 1, so m_hat = g and v_hat = fl(g*g).
struct AdamCoeffs {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double one_minus_beta1 = 0.1;
    double one_minus_beta2 = 0.001;
    double mhat_prev = 0.0;
    double mhat_grad = 1.0;
    double vhat_prev = 0.0;
    double vhat_grad = 1.0;
    double lr = 1.0; ///< alpha * omega_t
    double eps = 0.0;
};

/// Coefficients for iteration t (1-based) from the raw hyperparameters.
AdamCoeffs make_adam_coeffs(double beta1, double beta2, double eps, double lr, long long t);

/// Advances m and v in place and writes lr * m_hat / (sqrt(v_hat) + eps) to
/// update. A zero denominator (possible only with eps = 0 and an all-zero
/// gradient history) yields an update of exactly 0.
using AdamFn = void (*)(std::span<double> m, std::span<double> v, std::span<const double> g,
                        std::span<double> update, const AdamCoeffs& c);
/// y += a * x
using AxpyFn = void (*)(double a, std::span<const double> x, std::span<double> y);
using DotFn = double (*)(std::span<const double> x, std::span<const double> y);

struct KernelTable {
    Isa isa = Isa::Scalar;
    AdamFn adam = nullptr;
    AxpyFn axpy = nullptr;
    DotFn dot = nullptr;
};

/// Whether this build and this CPU can run the given variant.
bool isa_available(Isa isa);

/// The table for a specific variant; throws InvalidArgument when unavailable.
const KernelTable& kernels_for(Isa isa);

/// The table used by the library. Chosen once from CPU features; the
/// ADAMWARM_SIMD environment variable ("scalar" or "avx2") overrides.
const KernelTable& active_kernels();

/// All variants usable on this machine, reference first.
std::vector<Isa> available_isas();

namespace scalar {
void adam(std::span<double> m, std::span<double> v, std::span<const double> g,
          std::span<double> update, const AdamCoeffs& c);
void axpy(double a, std::span<const double> x, std::span<double> y);
double dot(std::span<const double> x, std::span<const double> y);
} // namespace scalar

#if defined(ADAMWARM_HAVE_AVX2)
namespace avx2 {
void adam(std::span<double> m, std::span<double> v, std::span<const double> g,
          std::span<double> update, const AdamCoeffs& c);
void axpy(double a, std::span<const double> x, std::span<double> y);
double dot(std::span<const double> x, std::span<const double> y);
} // namespace avx2
#endif

} // namespace adamwarm::simd
