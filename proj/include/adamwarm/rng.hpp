#pragma once

#include <array>
#include <cstdint>

namespace adamwarm {

/// Philox4x32-10 counter-based generator (Salmon et al., Random123).
/// A 128-bit counter and a 64-bit key map to 128 random bits; any block can
/// be produced independently, which is what keeps parallel simulations
/// reproducible regardless of how parameters are split across threads.
struct Philox4x32 {
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Counter block(Counter ctr, Key key) noexcept;
};

/// Standard-normal pair for (seed, stream, index). Box-Muller on two 53-bit
/// uniforms drawn from one Philox block.
std::array<double, 2> normal_pair(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) noexcept;

/// Sequential view of one Philox substream.
class RandomStream {
public:
    RandomStream(std::uint64_t seed, std::uint64_t stream) noexcept : seed_(seed), stream_(stream) {}

    std::uint64_t next_u64() noexcept;
    /// Uniform on [0, 1) with 53 random bits.
    double uniform() noexcept;
    /// Uniform on [lo, hi).
    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
    /// Unbiased integer in [0, n), n > 0.
    std::uint64_t below(std::uint64_t n) noexcept;
    double normal() noexcept;

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream() const noexcept { return stream_; }

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t block_index_ = 0;
    std::array<std::uint64_t, 2> buffer_{};
    int buffered_ = 0;
    double spare_normal_ = 0.0;
    bool has_spare_ = false;
};

} // namespace adamwarm
