#include "seqdet/features.hpp"

#include <stdexcept>
#include <string>

namespace seqdet {

int FeatureConfig::feature_dim() const {
    int n = 0;
    if (include_slope) n += bins - 1;
    if (include_endpoints) n += 2;
    if (include_mean_var) n += 2;
    if (include_tau) n += 1;
    return n;
}

void FeatureConfig::validate(int a) const {
    if (bins < 2) throw std::invalid_argument("FeatureConfig: bins must be >= 2");
    if (gamma <= 0.0) throw std::invalid_argument("FeatureConfig: gamma must be > 0");
    if (a % bins != 0) {
        throw std::invalid_argument("FeatureConfig: a = " + std::to_string(a) +
                                    " not divisible by B = " + std::to_string(bins));
    }
}

FeatureConfig FeatureConfig::defaults_for(ChannelKind kind) {
    FeatureConfig cfg;
    cfg.bins = 10;
    cfg.gamma = kind == ChannelKind::Optical ? 1.0 : 1000.0;
    return cfg;
}

std::vector<double> bin_signal(std::span<const std::uint32_t> y, int bins) {
    if (bins < 1 || y.empty() || y.size() % static_cast<std::size_t>(bins) != 0) {
        throw std::invalid_argument("bin_signal: sample count " + std::to_string(y.size()) +
                                    " not divisible by B = " + std::to_string(bins));
    }
    const std::size_t width = y.size() / bins;
    std::vector<double> b(bins);
    for (int i = 0; i < bins; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < width; ++j) s += y[i * width + j];
        b[i] = s / static_cast<double>(width);
    }
    return b;
}

std::vector<double> slope_vector(std::span<const double> b) {
    if (b.size() < 2) throw std::invalid_argument("slope_vector: need at least 2 bins");
    std::vector<double> d(b.size() - 1);
    for (std::size_t i = 1; i < b.size(); ++i) d[i - 1] = b[i] - b[i - 1];
    return d;
}

std::vector<double> build_features(std::span<const std::uint32_t> y, double tau,
                                   const FeatureConfig& cfg) {
    cfg.validate(static_cast<int>(y.size()));
    const std::vector<double> b = bin_signal(y, cfg.bins);
    std::vector<double> bn(b.size());
    for (std::size_t i = 0; i < b.size(); ++i) bn[i] = b[i] / cfg.gamma;

    std::vector<double> out;
    out.reserve(cfg.feature_dim());
    if (cfg.include_slope) {
        const std::vector<double> d = slope_vector(cfg.slope_on_normalized ? std::span<const double>(bn)
                                                                           : std::span<const double>(b));
        out.insert(out.end(), d.begin(), d.end());
    }
    if (cfg.include_endpoints) {
        out.push_back(bn.front());
        out.push_back(bn.back());
    }
    if (cfg.include_mean_var) {
        double mean = 0.0;
        for (double v : bn) mean += v;
        mean /= static_cast<double>(bn.size());
        double var = 0.0;
        for (double v : bn) var += (v - mean) * (v - mean);
        var /= static_cast<double>(bn.size());  // population convention
        out.push_back(mean);
        out.push_back(var);
    }
    if (cfg.include_tau) out.push_back(tau);
    return out;
}

}  // namespace seqdet
