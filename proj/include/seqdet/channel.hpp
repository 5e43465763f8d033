#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "seqdet/rng.hpp"

namespace seqdet {

enum class ChannelKind { Optical, Molecular };

std::string to_string(ChannelKind kind);
ChannelKind channel_kind_from_string(const std::string& s);

// Physical parameters of one simulated link. Times are in the channel's
// natural unit: microseconds for optical links, seconds for molecular ones.
// omega is in samples per natural time unit, so a = omega * tau directly.
struct ChannelParams {
    ChannelKind kind = ChannelKind::Optical;
    double alpha = 2.0;   // optical shape
    double beta = 0.2;    // optical scale (us)
    double c = 8.0;       // molecular shape
    double mu = 40.0;     // molecular mean arrival time (s)
    double eta = 1.0;     // mean background count per sample
    double kappa = 10.0;  // integrated response mass of a unit pulse
    double omega = 2000;  // samples per unit time
    double tau = 0.025;   // symbol interval (unit time)
    int m = 2;            // modulation order

    int samples_per_symbol() const;  // a = omega*tau; throws if not integral
    void validate() const;           // throws std::invalid_argument
};

// Amplitude indices in {0..m-1}; level i transmits at amplitude i/(m-1),
// so OOK maps to {0, 1} and level 0 is always silence.
struct SymbolSequence {
    std::vector<int> symbols;
    int m = 2;

    SymbolSequence() = default;
    SymbolSequence(std::vector<int> syms, int order);

    std::size_t size() const { return symbols.size(); }
    double amplitude(std::size_t k) const {
        return static_cast<double>(symbols[k]) / static_cast<double>(m - 1);
    }
    static SymbolSequence random(std::size_t len, int m, Rng& rng);
};

// Per-symbol matrix of received particle counts, K rows of a samples.
struct ReceivedSignal {
    int a = 0;
    std::size_t num_symbols = 0;
    std::vector<std::uint32_t> counts;  // row-major K x a

    std::uint32_t at(std::size_t k, int j) const {  // j in [1..a]
        return counts[k * a + (j - 1)];
    }
    const std::uint32_t* row(std::size_t k) const { return counts.data() + k * a; }
};

// Sampled system response: lam[k][j] = lambda((j + k*a)/omega) for
// j in 1..a, k in 0..k_mem. Taps beyond k_mem carry less than
// eps_trunc*kappa of integrated mass (unless the tap cap hit first).
struct DiscretizedResponse {
    int a = 0;
    int k_mem = 0;
    bool tail_below_eps = true;  // false when max_taps cut the search short
    std::vector<double> lam;     // (k_mem+1) x a row-major

    double tap(int k, int j) const { return lam[static_cast<std::size_t>(k) * a + (j - 1)]; }
    const double* row(int k) const { return lam.data() + static_cast<std::size_t>(k) * a; }
    double riemann_mass(double omega) const;  // (1/omega) * sum of all entries
};

// Per-symbol random walk applied to beta and eta (optical fading model).
struct TimeVaryingConfig {
    double d_diff = 0.0;  // diffusion rate
    double nu = 0.0;      // drift rate
    double beta_lo = 0.15, beta_hi = 0.35;
    double eta_lo = 1.0, eta_hi = 200.0;

    void validate(const ChannelParams& initial) const;
};

// Expected arrival intensity at time t after a unit-amplitude pulse.
// Gamma-shaped for optical channels, inverse-Gaussian for molecular;
// identically zero for t <= 0.
double impulse_response(double t, const ChannelParams& params);

// Fraction of response mass arriving after time t (integral of the
// normalized shape over (t, inf)).
double response_tail_mass(double t, const ChannelParams& params);

DiscretizedResponse discretize_response(const ChannelParams& params,
                                        double eps_trunc = 1e-4,
                                        int max_taps = 1 << 20);

// Deterministic Poisson rates behind simulate(): K x a row-major matrix of
// eta + superposed per-symbol response contributions.
std::vector<double> expected_rates(const SymbolSequence& seq, const ChannelParams& params,
                                   const DiscretizedResponse& resp);

ReceivedSignal simulate(const SymbolSequence& seq, const ChannelParams& params, Rng& rng);
ReceivedSignal simulate(const SymbolSequence& seq, const ChannelParams& params,
                        const DiscretizedResponse& resp, Rng& rng);

// Per-symbol states of the bounded diffusion-with-drift walk; entry 0 holds
// the initial values. The walked response parameter is beta (optical) or mu
// (molecular). Degenerate walks (d_diff = nu = 0) consume no randomness.
struct TimeVaryingWalk {
    std::vector<double> resp_param;
    std::vector<double> eta;
};
TimeVaryingWalk time_varying_walk(const ChannelParams& params0, const TimeVaryingConfig& tv,
                                  std::size_t n, Rng& rng);

ReceivedSignal simulate_time_varying(const SymbolSequence& seq, const ChannelParams& params0,
                                     const TimeVaryingConfig& tv, Rng& rng);

// Draws link parameters uniformly from the finite training sets
// (alpha, kappa, omega stay fixed per channel kind).
ChannelParams sample_random_params(ChannelKind kind, Rng& rng);

// Continuous parameter ranges used for the higher-order PAM training sets.
struct ParamRanges {
    double beta_lo = 0.2, beta_hi = 0.35;
    double eta_lo = 10.0, eta_hi = 200.0;
};
ChannelParams sample_params_continuous(const ChannelParams& base, const ParamRanges& r, Rng& rng);

// ---- datasets ----

struct DatasetSequence {
    ChannelParams params;
    SymbolSequence symbols;
    ReceivedSignal signal;
};

struct Dataset {
    ChannelKind kind = ChannelKind::Optical;
    int m = 2;
    double omega = 0.0;
    std::vector<DatasetSequence> sequences;
};

struct DatasetConfig {
    ChannelKind kind = ChannelKind::Optical;
    int m = 2;
    std::size_t n_sequences = 1000;
    int seq_len = 100;
    std::uint64_t seed = 1;
    bool randomize_params = true;     // per-sequence draw from the training sets
    ChannelParams fixed_params;       // used when randomize_params is false
    bool continuous_ranges = false;   // PAM-style continuous beta/eta draws
    ParamRanges ranges;
};

Dataset generate_dataset(const DatasetConfig& cfg);

void save_dataset(const Dataset& ds, const std::string& path);
Dataset load_dataset(const std::string& path);
void export_dataset_csv(const Dataset& ds, const std::string& path);

}  // namespace seqdet
