#include "seqdet/detectors.hpp"

#include <stdexcept>

namespace seqdet {

ErrorReport evaluate_errors(const std::vector<std::vector<int>>& decisions,
                            const std::vector<std::vector<int>>& truth) {
    if (decisions.size() != truth.size()) {
        throw std::invalid_argument("evaluate_errors: sequence counts differ");
    }
    ErrorReport rep;
    std::size_t max_len = 0;
    for (std::size_t s = 0; s < decisions.size(); ++s) {
        if (decisions[s].size() != truth[s].size()) {
            throw std::invalid_argument("evaluate_errors: sequence " + std::to_string(s) +
                                        " lengths differ");
        }
        max_len = std::max(max_len, decisions[s].size());
    }
    rep.per_position.assign(max_len, 0.0);
    rep.per_position_n.assign(max_len, 0);
    for (std::size_t s = 0; s < decisions.size(); ++s) {
        for (std::size_t k = 0; k < decisions[s].size(); ++k) {
            const bool err = decisions[s][k] != truth[s][k];
            rep.n += 1;
            rep.errors += err;
            rep.per_position_n[k] += 1;
            rep.per_position[k] += err ? 1.0 : 0.0;
        }
    }
    if (rep.n == 0) throw std::invalid_argument("evaluate_errors: no symbols");
    rep.rate = static_cast<double>(rep.errors) / static_cast<double>(rep.n);
    for (std::size_t k = 0; k < max_len; ++k) {
        rep.per_position[k] /= static_cast<double>(rep.per_position_n[k]);
    }
    const auto ci = wilson_interval(rep.errors, rep.n);
    rep.wilson_lo = ci.first;
    rep.wilson_hi = ci.second;
    return rep;
}

}  // namespace seqdet
