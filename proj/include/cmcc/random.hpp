#pragma once

#include <cstdint>
#include <random>

namespace cmcc {

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept
{
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Counter-based seed split: the seed of substream `index` of `stream`
/// depends only on (master, stream, index), never on scheduling order.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index) noexcept
{
    return mix64(mix64(mix64(master) ^ (stream * 0xd1b54a32d192ed03ULL)) ^ index);
}

// Stream tags for derive_seed.
namespace stream {
inline constexpr std::uint64_t covariance = 1;
inline constexpr std::uint64_t constraints = 2;
inline constexpr std::uint64_t run = 3;
inline constexpr std::uint64_t sweep_point = 4;
inline constexpr std::uint64_t calibration = 5;
inline constexpr std::uint64_t moment = 6;
} // namespace stream

/// Engine plus the variates the library draws. One per Monte-Carlo run.
class RandomStream {
public:
    using Engine = std::mt19937_64;

    explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

    double normal() { return normal_(engine_); }
    /// Uniform on [0, 1).
    double uniform() { return uniform_(engine_); }
    /// Unit-mean exponential.
    double exponential() { return exponential_(engine_); }

    Engine& engine() noexcept { return engine_; }

private:
    Engine engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
    std::exponential_distribution<double> exponential_{1.0};
};

} // namespace cmcc
