#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

namespace seqdet {

// Wilson score interval for a binomial proportion (default 95%).
inline std::pair<double, double> wilson_interval(std::size_t successes, std::size_t n,
                                                 double z = 1.959963984540054) {
    if (n == 0) throw std::invalid_argument("wilson_interval: n must be > 0");
    const double p = static_cast<double>(successes) / static_cast<double>(n);
    const double z2 = z * z;
    const double denom = 1.0 + z2 / static_cast<double>(n);
    const double center = (p + z2 / (2.0 * static_cast<double>(n))) / denom;
    const double half =
        z * std::sqrt(p * (1.0 - p) / static_cast<double>(n) +
                      z2 / (4.0 * static_cast<double>(n) * static_cast<double>(n))) /
        denom;
    return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};

inline LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw std::invalid_argument("linear_fit: need equal-length inputs with >= 2 points");
    }
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
        syy += y[i] * y[i];
    }
    LinearFit f;
    const double vx = sxx - sx * sx / n;
    const double cxy = sxy - sx * sy / n;
    const double vy = syy - sy * sy / n;
    f.slope = cxy / vx;
    f.intercept = (sy - f.slope * sx) / n;
    f.r2 = vy > 0.0 ? (cxy * cxy) / (vx * vy) : 1.0;
    return f;
}

}  // namespace seqdet
