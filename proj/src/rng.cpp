#include "seqdet/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace seqdet {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void philox_round(std::uint32_t ctr[4], const std::uint32_t key[2]) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kPhiloxM0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kPhiloxM1) * ctr[2];
    const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
    const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
    const std::uint32_t out0 = hi1 ^ ctr[1] ^ key[0];
    const std::uint32_t out2 = hi0 ^ ctr[3] ^ key[1];
    ctr[0] = out0;
    ctr[1] = lo1;
    ctr[2] = out2;
    ctr[3] = lo0;
}

}  // namespace

Rng::Rng(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {}

void Rng::refill() {
    std::uint32_t ctr[4] = {
        static_cast<std::uint32_t>(counter_),
        static_cast<std::uint32_t>(counter_ >> 32),
        static_cast<std::uint32_t>(stream_),
        static_cast<std::uint32_t>(stream_ >> 32),
    };
    std::uint32_t key[2] = {
        static_cast<std::uint32_t>(seed_),
        static_cast<std::uint32_t>(seed_ >> 32),
    };
    for (int r = 0; r < 10; ++r) {
        philox_round(ctr, key);
        key[0] += kWeyl0;
        key[1] += kWeyl1;
    }
    for (int i = 0; i < 4; ++i) buf_[i] = ctr[i];
    buf_pos_ = 0;
    ++counter_;
}

std::uint32_t Rng::next_u32() {
    if (buf_pos_ >= 4) refill();
    return buf_[buf_pos_++];
}

std::uint64_t Rng::next_u64() {
    const std::uint64_t lo = next_u32();
    const std::uint64_t hi = next_u32();
    return (hi << 32) | lo;
}

double Rng::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform();
}

std::uint64_t Rng::uniform_int(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("uniform_int: n must be >= 1");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v;
    do {
        v = next_u64();
    } while (v >= limit);
    return v % n;
}

double Rng::normal() {
    if (has_cached_normal_) {
        has_cached_normal_ = false;
        return cached_normal_;
    }
    double u1;
    do {
        u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    cached_normal_ = r * std::sin(theta);
    has_cached_normal_ = true;
    return r * std::cos(theta);
}

std::uint64_t Rng::poisson(double rate) {
    if (rate < 0.0 || !std::isfinite(rate)) {
        throw std::invalid_argument("poisson: rate must be finite and >= 0");
    }
    if (rate == 0.0) return 0;

    if (rate < 10.0) {
        // inversion by sequential search
        const double p0 = std::exp(-rate);
        double p = p0;
        double cum = p0;
        const double u = uniform();
        std::uint64_t k = 0;
        while (u > cum) {
            ++k;
            p *= rate / static_cast<double>(k);
            cum += p;
            if (p < 1e-320) break;  // u in the far tail; cum saturated
        }
        return k;
    }

    // PTRS: transformed rejection with squeeze (Hoermann 1993), exact.
    const double mu = rate;
    const double b = 0.931 + 2.53 * std::sqrt(mu);
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double v_r = 0.9277 - 3.6224 / (b - 2.0);
    const double log_mu = std::log(mu);
    for (;;) {
        const double u = uniform() - 0.5;
        const double v = uniform();
        const double us = 0.5 - std::fabs(u);
        const double kf = std::floor((2.0 * a / us + b) * u + mu + 0.43);
        if (us >= 0.07 && v <= v_r) {
            return static_cast<std::uint64_t>(kf);
        }
        if (kf < 0.0 || (us < 0.013 && v > us)) {
            continue;
        }
        const double k = kf;
        if (std::log(v * inv_alpha / (a / (us * us) + b)) <=
            k * log_mu - mu - std::lgamma(k + 1.0)) {
            return static_cast<std::uint64_t>(kf);
        }
    }
}

}  // namespace seqdet
