#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace darkscope {

/// Philox4x32-10 block function (Salmon et al., SC'11).
inline std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                                  std::array<std::uint32_t, 2> key) {
    constexpr std::uint32_t kMul0 = 0xD2511F53u, kMul1 = 0xCD9E8D57u;
    constexpr std::uint32_t kWeyl0 = 0x9E3779B9u, kWeyl1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
        std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
        std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
        ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
               static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
        key[0] += kWeyl0;
        key[1] += kWeyl1;
    }
    return ctr;
}

/// Counter-based generator: the 64-bit seed is the Philox key, the stream id
/// occupies the high counter words and a block index the low ones. Streams
/// obtained with split() are independent and reproducible regardless of the
/// order in which they are consumed.
class CounterRng {
public:
    using result_type = std::uint64_t;

    explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0) : seed_(seed), stream_(stream) {}

    /// A child stream. Children of different ids (and of different parents)
    /// never share counters.
    CounterRng split(std::uint64_t id) const { return CounterRng(seed_, mix(stream_ * 0x9E3779B97F4A7C15ull + id + 1)); }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type{0}; }

    result_type operator()() {
        if (cached_ == 0) refill();
        --cached_;
        return block_[cached_];
    }

    /// Uniform on the open interval (0, 1).
    double uniform() { return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53; }

    /// Exponential with the given mean.
    double exponential(double mean) { return -mean * std::log(uniform()); }

    /// Standard normal (Box-Muller, both variates used).
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double r = std::sqrt(-2.0 * std::log(uniform()));
        double theta = 2.0 * std::numbers::pi * uniform();
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    bool bernoulli(double p) { return uniform() < p; }

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream() const { return stream_; }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    void refill() {
        auto out = philox4x32_10({static_cast<std::uint32_t>(index_), static_cast<std::uint32_t>(index_ >> 32),
                                  static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)},
                                 {static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32)});
        ++index_;
        block_[1] = (std::uint64_t{out[1]} << 32) | out[0];
        block_[0] = (std::uint64_t{out[3]} << 32) | out[2];
        cached_ = 2;
    }

    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t index_ = 0;
    std::uint64_t block_[2] = {0, 0};
    int cached_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace darkscope
