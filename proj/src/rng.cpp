#include "adamwarm/rng.hpp"

#include <cmath>
#include <numbers>

namespace adamwarm {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) noexcept {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

Philox4x32::Counter make_counter(std::uint64_t index, std::uint64_t stream) noexcept {
    return {static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
            static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
}

Philox4x32::Key make_key(std::uint64_t seed) noexcept {
    return {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
}

inline std::uint64_t join(std::uint32_t lo, std::uint32_t hi) noexcept {
    return static_cast<std::uint64_t>(lo) | (static_cast<std::uint64_t>(hi) << 32);
}

inline double to_unit(std::uint64_t bits) noexcept {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

// (0, 1]: keeps log() finite in Box-Muller.
inline double to_unit_open_low(std::uint64_t bits) noexcept {
    return static_cast<double>((bits >> 11) + 1) * 0x1.0p-53;
}

std::array<double, 2> box_muller(std::uint64_t a, std::uint64_t b) noexcept {
    const double r = std::sqrt(-2.0 * std::log(to_unit_open_low(a)));
    const double theta = 2.0 * std::numbers::pi * to_unit(b);
    return {r * std::cos(theta), r * std::sin(theta)};
}

} // namespace

Philox4x32::Counter Philox4x32::block(Counter ctr, Key key) noexcept {
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kMul0, ctr[0], hi0, lo0);
        mulhilo(kMul1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kWeyl0;
        key[1] += kWeyl1;
    }
    return ctr;
}

std::array<double, 2> normal_pair(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) noexcept {
    const auto out = Philox4x32::block(make_counter(index, stream), make_key(seed));
    return box_muller(join(out[0], out[1]), join(out[2], out[3]));
}

std::uint64_t RandomStream::next_u64() noexcept {
    if (buffered_ == 0) {
        const auto out = Philox4x32::block(make_counter(block_index_++, stream_), make_key(seed_));
        buffer_ = {join(out[0], out[1]), join(out[2], out[3])};
        buffered_ = 2;
    }
    return buffer_[2 - buffered_--];
}

double RandomStream::uniform() noexcept { return to_unit(next_u64()); }

std::uint64_t RandomStream::below(std::uint64_t n) noexcept {
    // Lemire's multiply-shift with rejection.
    unsigned __int128 prod = static_cast<unsigned __int128>(next_u64()) * n;
    auto low = static_cast<std::uint64_t>(prod);
    if (low < n) {
        const std::uint64_t threshold = (0 - n) % n;
        while (low < threshold) {
            prod = static_cast<unsigned __int128>(next_u64()) * n;
            low = static_cast<std::uint64_t>(prod);
        }
    }
    return static_cast<std::uint64_t>(prod >> 64);
}

double RandomStream::normal() noexcept {
    if (has_spare_) {
        has_spare_ = false;
        return spare_normal_;
    }
    const std::uint64_t a = next_u64();
    const std::uint64_t b = next_u64();
    const auto z = box_muller(a, b);
    spare_normal_ = z[1];
    has_spare_ = true;
    return z[0];
}

} // namespace adamwarm
