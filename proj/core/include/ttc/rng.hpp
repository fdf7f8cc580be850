#pragma once

#include <cstdint>

namespace ttc::rng
{

/// SplitMix64 finaliser; a bijective 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept
{
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Key of an independent substream derived from a root seed and a stream id
/// (the query index for synthetic backends, the trial index for Monte Carlo).
constexpr std::uint64_t substream_key(std::uint64_t seed, std::uint64_t stream) noexcept
{
    return mix64(mix64(seed) ^ mix64(stream + 0x632be59bd9b4e019ULL));
}

/// Counter-based draw: the value depends only on (key, counter), so the order in
/// which streams are consumed never changes what a stream produces.
constexpr std::uint64_t draw_bits(std::uint64_t key, std::uint64_t counter) noexcept
{
    return mix64(key ^ mix64(counter));
}

/// Uniform double in [0, 1) with 53 random bits; identical on every IEEE-754 platform.
constexpr double to_unit(std::uint64_t bits) noexcept
{
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

constexpr double draw_unit(std::uint64_t key, std::uint64_t counter) noexcept
{
    return to_unit(draw_bits(key, counter));
}

/// Sequential view over one substream, for code that just wants "the next number".
class Stream
{
  public:
    constexpr Stream(std::uint64_t seed, std::uint64_t stream) noexcept
        : key_(substream_key(seed, stream))
    {
    }

    constexpr std::uint64_t next_bits() noexcept { return draw_bits(key_, counter_++); }
    constexpr double next_unit() noexcept { return to_unit(next_bits()); }
    constexpr std::uint64_t position() const noexcept { return counter_; }

  private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace ttc::rng
