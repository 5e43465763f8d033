#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "seqdet/channel.hpp"
#include "seqdet/rng.hpp"

namespace seqdet {

// Trellis states encode the last `memory` symbols in base m with the newest
// symbol in the least significant digit. viterbi_decode tracks beam survivors
// by digit history, so memory lengths far beyond 64-bit state indices (the
// default memory is 99) are fine; the integer-state helpers below are for
// configurations where m^memory fits in 64 bits.
struct TrellisConfig {
    int memory = 99;
    int beam_width = 100;
    int m = 2;

    void validate() const;
};

// Fractional Gaussian error applied to the detector's CSI estimate.
struct CsiPerturbation {
    double sigma_frac = 0.0;
    // Parameter names to perturb; empty means the kind's CSI set
    // ({beta, eta} optical, {c, mu, eta} molecular).
    std::vector<std::string> which;
};

ChannelParams perturb_csi(const ChannelParams& params, const CsiPerturbation& pert, Rng& rng);

// The m predecessor states of u_next: floor(u/m) + i*m^(memory-1).
std::vector<std::uint64_t> predecessor_states(std::uint64_t u_next, const TrellisConfig& cfg);

// Poisson rate of sample j (1-based) for the transition u_prev -> u_next.
double branch_rate(std::uint64_t u_prev, std::uint64_t u_next, int j,
                   const DiscretizedResponse& resp, double eta, const TrellisConfig& cfg);

// Log-likelihood increment of the transition, with the -sum log(y!) term
// dropped (it is identical across competing transitions). Returns -inf when
// some sample has rate 0 but a nonzero count (possible only when eta == 0).
double branch_metric(std::span<const std::uint32_t> y_k, std::uint64_t u_prev,
                     std::uint64_t u_next, const DiscretizedResponse& resp, double eta,
                     const TrellisConfig& cfg);

// Beam-search Viterbi over the whole received signal, using the detector's
// CSI estimate params_est. Ties (equal scores) resolve toward the lower
// state index at every dedup, prune, and terminal selection.
SymbolSequence viterbi_decode(const ReceivedSignal& sig, const ChannelParams& params_est,
                              const TrellisConfig& cfg);

}  // namespace seqdet
