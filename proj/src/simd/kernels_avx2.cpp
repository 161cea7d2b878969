// Built with -mavx2 -mfma; only reached after a runtime CPU check.
#include "adamwarm/simd/kernels.hpp"

#include <immintrin.h>

#include <cmath>

namespace adamwarm::simd::avx2 {

void adam(std::span<double> m, std::span<double> v, std::span<const double> g,
          std::span<double> update, const AdamCoeffs& c) {
    const std::size_t n = g.size();
    const __m256d b1 = _mm256_set1_pd(c.beta1);
    const __m256d b2 = _mm256_set1_pd(c.beta2);
    const __m256d omb1 = _mm256_set1_pd(c.one_minus_beta1);
    const __m256d omb2 = _mm256_set1_pd(c.one_minus_beta2);
    const __m256d kmp = _mm256_set1_pd(c.mhat_prev);
    const __m256d kmg = _mm256_set1_pd(c.mhat_grad);
    const __m256d kvp = _mm256_set1_pd(c.vhat_prev);
    const __m256d kvg = _mm256_set1_pd(c.vhat_grad);
    const __m256d lr = _mm256_set1_pd(c.lr);
    const __m256d eps = _mm256_set1_pd(c.eps);
    const __m256d zero = _mm256_setzero_pd();

    std::size_t i = 0;
    // Separate mul and add: the result must match the scalar kernel bit for bit.
    for (; i + 4 <= n; i += 4) {
        const __m256d gi = _mm256_loadu_pd(g.data() + i);
        const __m256d mi = _mm256_loadu_pd(m.data() + i);
        const __m256d vi = _mm256_loadu_pd(v.data() + i);
        const __m256d g2 = _mm256_mul_pd(gi, gi);
        const __m256d mh = _mm256_add_pd(_mm256_mul_pd(kmp, mi), _mm256_mul_pd(kmg, gi));
        const __m256d vh = _mm256_add_pd(_mm256_mul_pd(kvp, vi), _mm256_mul_pd(kvg, g2));
        _mm256_storeu_pd(m.data() + i, _mm256_add_pd(_mm256_mul_pd(b1, mi), _mm256_mul_pd(omb1, gi)));
        _mm256_storeu_pd(v.data() + i, _mm256_add_pd(_mm256_mul_pd(b2, vi), _mm256_mul_pd(omb2, g2)));
        const __m256d denom = _mm256_add_pd(_mm256_sqrt_pd(vh), eps);
        const __m256d u = _mm256_mul_pd(lr, _mm256_div_pd(mh, denom));
        const __m256d is_zero = _mm256_cmp_pd(denom, zero, _CMP_EQ_OQ);
        _mm256_storeu_pd(update.data() + i, _mm256_blendv_pd(u, zero, is_zero));
    }
    if (i < n) {
        scalar::adam(m.subspan(i), v.subspan(i), g.subspan(i), update.subspan(i), c);
    }
}

void axpy(double a, std::span<const double> x, std::span<double> y) {
    const std::size_t n = x.size();
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256d y0 = _mm256_fmadd_pd(va, _mm256_loadu_pd(x.data() + i), _mm256_loadu_pd(y.data() + i));
        const __m256d y1 =
            _mm256_fmadd_pd(va, _mm256_loadu_pd(x.data() + i + 4), _mm256_loadu_pd(y.data() + i + 4));
        _mm256_storeu_pd(y.data() + i, y0);
        _mm256_storeu_pd(y.data() + i + 4, y1);
    }
    for (; i < n; ++i) y[i] = std::fma(a, x[i], y[i]);
}

double dot(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x.data() + i), _mm256_loadu_pd(y.data() + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x.data() + i + 4), _mm256_loadu_pd(y.data() + i + 4), acc1);
    }
    const __m256d acc = _mm256_add_pd(acc0, acc1);
    const __m128d lo = _mm256_castpd256_pd128(acc);
    const __m128d hi = _mm256_extractf128_pd(acc, 1);
    const __m128d s2 = _mm_add_pd(lo, hi);
    double res = _mm_cvtsd_f64(_mm_add_sd(s2, _mm_unpackhi_pd(s2, s2)));
    for (; i < n; ++i) res = std::fma(x[i], y[i], res);
    return res;
}

} // namespace adamwarm::simd::avx2
