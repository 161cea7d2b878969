#include <doctest.h>

#include "adamwarm/errors.hpp"
#include "adamwarm/rng.hpp"
#include "adamwarm/simd/kernels.hpp"

#include <cmath>
#include <cstring>
#include <vector>

using namespace adamwarm;
using namespace adamwarm::simd;

namespace {

std::vector<double> normals(RandomStream& rng, std::size_t n, double scale) {
    std::vector<double> v(n);
    for (auto& x : v) x = scale * rng.normal();
    return v;
}

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
    return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

} // namespace

TEST_CASE("dispatch") {
    const auto isas = available_isas();
    REQUIRE_FALSE(isas.empty());
    CHECK(isas.front() == Isa::Scalar);
    CHECK(kernels_for(Isa::Scalar).isa == Isa::Scalar);
    CHECK(isa_name(Isa::Avx2) == "avx2");
    if (!isa_available(Isa::Avx2)) {
        CHECK_THROWS_AS(kernels_for(Isa::Avx2), InvalidArgument);
    }
    const auto& active = active_kernels();
    CHECK(isa_available(active.isa));
    MESSAGE("active kernels: " << isa_name(active.isa));
}

TEST_CASE("adam kernel is bit-identical across variants") {
    RandomStream rng(1, 0);
    const auto& ref = kernels_for(Isa::Scalar);
    for (Isa isa : available_isas()) {
        const auto& k = kernels_for(isa);
        for (std::size_t n : {0, 1, 3, 4, 5, 7, 8, 15, 16, 17, 63, 1000}) {
            for (long long t : {1LL, 2LL, 5LL, 100LL}) {
                for (double eps : {0.0, 1e-8}) {
                    auto m = normals(rng, n, 0.1), v = normals(rng, n, 0.1);
                    for (auto& x : v) x = x * x;
                    auto g = normals(rng, n, 1.0);
                    // exact zeros exercise the 0/0 guard
                    for (std::size_t i = 0; i < n; i += 5) {
                        g[i] = 0.0;
                        m[i] = 0.0;
                        v[i] = 0.0;
                    }
                    const auto c = make_adam_coeffs(0.9, 0.999, eps, 1e-3, t);
                    auto m2 = m, v2 = v;
                    std::vector<double> u1(n), u2(n);
                    ref.adam(m, v, g, u1, c);
                    k.adam(m2, v2, g, u2, c);
                    REQUIRE(same_bits(m, m2));
                    REQUIRE(same_bits(v, v2));
                    REQUIRE(same_bits(u1, u2));
                    for (double u : u1) REQUIRE(std::isfinite(u));
                }
            }
        }
    }
}

TEST_CASE("first-step coefficients are exact") {
    for (double b1 : {0.9, 0.5, 0.95, 0.999}) {
        for (double b2 : {0.999, 0.9, 0.9999}) {
            const auto c = make_adam_coeffs(b1, b2, 0.0, 1.0, 1);
            CHECK(c.mhat_grad == 1.0);
            CHECK(c.vhat_grad == 1.0);
            CHECK(c.mhat_prev == doctest::Approx(b1 / (1.0 - b1)));
        }
    }
}

TEST_CASE("axpy and dot agree with the reference to rounding") {
    RandomStream rng(2, 0);
    const auto& ref = kernels_for(Isa::Scalar);
    for (Isa isa : available_isas()) {
        const auto& k = kernels_for(isa);
        for (std::size_t n : {0, 1, 3, 4, 9, 31, 32, 33, 200, 4097}) {
            const auto x = normals(rng, n, 1.0);
            const auto y = normals(rng, n, 1.0);
            double abs_sum = 0.0;
            for (std::size_t i = 0; i < n; ++i) abs_sum += std::abs(x[i] * y[i]);
            CHECK(std::abs(k.dot(x, y) - ref.dot(x, y)) <= 1e-14 * (abs_sum + 1.0));

            auto y1 = y, y2 = y;
            ref.axpy(-0.37, x, y1);
            k.axpy(-0.37, x, y2);
            for (std::size_t i = 0; i < n; ++i) {
                REQUIRE(std::abs(y1[i] - y2[i]) <= 1e-15 * (std::abs(y[i]) + std::abs(0.37 * x[i])));
            }
        }
    }
}
