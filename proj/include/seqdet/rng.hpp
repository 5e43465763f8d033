#pragma once

#include <cstdint>
#include <vector>

namespace seqdet {

// Counter-based generator (Philox4x32-10). A stream is identified by
// (seed, stream); draws are a pure function of (seed, stream, counter),
// so substreams can be handed out across threads without coordination.
class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

    std::uint64_t next_u64();
    std::uint32_t next_u32();

    // [0, 1), 53-bit resolution
    double uniform();
    double uniform(double lo, double hi);

    // unbiased integer in [0, n), n >= 1
    std::uint64_t uniform_int(std::uint64_t n);

    // standard normal (Box-Muller)
    double normal();

    // exact Poisson sampling: sequential-search inversion for small rates,
    // PTRS transformed rejection for large ones. No Gaussian approximation.
    std::uint64_t poisson(double rate);

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream() const { return stream_; }

private:
    void refill();

    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t counter_ = 0;
    std::uint32_t buf_[4];
    int buf_pos_ = 4;  // empty
    double cached_normal_ = 0.0;
    bool has_cached_normal_ = false;
};

}  // namespace seqdet
