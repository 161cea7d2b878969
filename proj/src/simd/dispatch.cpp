#include "adamwarm/errors.hpp"
#include "adamwarm/simd/kernels.hpp"

#include <cstdlib>
#include <string>

namespace adamwarm::simd {

namespace {

constexpr KernelTable kScalarTable{Isa::Scalar, &scalar::adam, &scalar::axpy, &scalar::dot};
#if defined(ADAMWARM_HAVE_AVX2)
constexpr KernelTable kAvx2Table{Isa::Avx2, &avx2::adam, &avx2::axpy, &avx2::dot};
#endif

bool cpu_has_avx2() {
#if defined(ADAMWARM_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const KernelTable& select_kernels() {
    if (const char* forced = std::getenv("ADAMWARM_SIMD")) {
        const std::string name(forced);
        if (name == "scalar") return kScalarTable;
        if (name == "avx2" && isa_available(Isa::Avx2)) return kernels_for(Isa::Avx2);
    }
    if (isa_available(Isa::Avx2)) return kernels_for(Isa::Avx2);
    return kScalarTable;
}

} // namespace

std::string_view isa_name(Isa isa) {
    switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
    }
    return "unknown";
}

bool isa_available(Isa isa) {
    switch (isa) {
    case Isa::Scalar: return true;
    case Isa::Avx2: {
        static const bool has = cpu_has_avx2();
        return has;
    }
    }
    return false;
}

const KernelTable& kernels_for(Isa isa) {
    if (!isa_available(isa)) {
        throw InvalidArgument("SIMD variant '" + std::string(isa_name(isa)) + "' is not available");
    }
#if defined(ADAMWARM_HAVE_AVX2)
    if (isa == Isa::Avx2) return kAvx2Table;
#endif
    return kScalarTable;
}

const KernelTable& active_kernels() {
    static const KernelTable& table = select_kernels();
    return table;
}

std::vector<Isa> available_isas() {
    std::vector<Isa> out{Isa::Scalar};
    if (isa_available(Isa::Avx2)) out.push_back(Isa::Avx2);
    return out;
}

} // namespace adamwarm::simd
