#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace thermolim
{
//---------------------------------------------------------------------------//
/*!
 * Philox4x32-10 block function.
 *
 * Counter-based: the output depends only on (counter, key), so any sample in
 * a Monte Carlo loop can be regenerated independently of execution order.
 */
class Philox4x32
{
  public:
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static constexpr Counter generate(Counter ctr, Key key)
    {
        for (int round = 0; round < 10; ++round)
        {
            ctr = single_round(ctr, key);
            key[0] += kWeyl0;
            key[1] += kWeyl1;
        }
        return ctr;
    }

  private:
    static constexpr std::uint32_t kMul0 = 0xD2511F53u;
    static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

    static constexpr Counter single_round(Counter const& c, Key const& k)
    {
        std::uint64_t const p0 = std::uint64_t{kMul0} * c[0];
        std::uint64_t const p1 = std::uint64_t{kMul1} * c[2];
        auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
        auto lo0 = static_cast<std::uint32_t>(p0);
        auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
        auto lo1 = static_cast<std::uint32_t>(p1);
        return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    }
};

//! SplitMix64 finalizer, used to derive child seeds.
constexpr std::uint64_t mix64(std::uint64_t z)
{
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

//! Derive a child seed from a parent seed and a path of integer labels.
template<class... Labels>
constexpr std::uint64_t derive_seed(std::uint64_t seed, Labels... labels)
{
    std::uint64_t s = mix64(seed);
    ((s = mix64(s ^ mix64(static_cast<std::uint64_t>(labels)))), ...);
    return s;
}

//! Stream tags separating independent uses of one seed.
enum class Stream : std::uint32_t
{
    volume = 1,
    sausage,
    rotation,
    haar_translation,
    integrate,
    containment,
    a3_translation,
    a5_motion,
    a6_motion,
    ssa_trials,
    experiment,
    polytope,
    test,
};

//---------------------------------------------------------------------------//
/*!
 * Stream of uniform variates addressed by (seed, stream, index).
 *
 * Each (seed, stream, index) triple names an independent substream; draws
 * within the substream advance an internal block counter.
 */
class CounterRng
{
  public:
    CounterRng(std::uint64_t seed, Stream stream, std::uint64_t index)
        : key_{static_cast<std::uint32_t>(seed),
               static_cast<std::uint32_t>(seed >> 32)}
        , stream_{static_cast<std::uint32_t>(stream)}
        , index_{index}
    {
    }

    std::uint32_t next_u32()
    {
        if (avail_ == 0)
        {
            refill();
        }
        return buffer_[4 - avail_--];
    }

    std::uint64_t next_u64()
    {
        std::uint64_t hi = next_u32();
        return (hi << 32) | next_u32();
    }

    //! Uniform on [0, 1) with 53 random bits.
    double uniform()
    {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    //! Uniform on [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    //! Standard normal (Box-Muller, one variate per call).
    double normal()
    {
        double u1 = 1.0 - uniform();  // (0, 1]
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1))
               * std::cos(2 * std::numbers::pi * u2);
    }

    //! Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n)
    {
        return static_cast<std::uint64_t>(uniform() * static_cast<double>(n))
               % n;
    }

  private:
    Philox4x32::Key key_;
    std::uint32_t stream_;
    std::uint64_t index_;
    std::uint32_t block_{0};
    Philox4x32::Counter buffer_{};
    int avail_{0};

    void refill()
    {
        buffer_ = Philox4x32::generate(
            {block_++,
             stream_,
             static_cast<std::uint32_t>(index_),
             static_cast<std::uint32_t>(index_ >> 32)},
            key_);
        avail_ = 4;
    }
};

}  // namespace thermolim
