#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "seqdet/channel.hpp"

namespace seqdet {

// Layout of the per-symbol feature vector r_k, in field order:
// slope[B-1], b0, b_{B-1}, mean, var, tau (each block gated by its flag).
struct FeatureConfig {
    int bins = 10;
    double gamma = 1.0;
    bool include_slope = true;
    bool include_endpoints = true;
    bool include_mean_var = true;
    bool include_tau = true;
    // Slopes are taken on the gamma-normalized bins by default so one gamma
    // rescales the whole vector; set false to difference the raw bins.
    bool slope_on_normalized = true;

    int feature_dim() const;
    void validate(int a) const;  // throws when a is not divisible by bins
    bool operator==(const FeatureConfig&) const = default;

    static FeatureConfig defaults_for(ChannelKind kind);
};

// Per-bin means of the a counts, B contiguous blocks of a/B samples.
std::vector<double> bin_signal(std::span<const std::uint32_t> y, int bins);

// First differences d[i-1] = b[i] - b[i-1].
std::vector<double> slope_vector(std::span<const double> b);

std::vector<double> build_features(std::span<const std::uint32_t> y, double tau,
                                   const FeatureConfig& cfg);

}  // namespace seqdet
