#include "seqdet/viterbi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace seqdet {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double pow_u64(int base, int exp) {
    double v = 1.0;
    for (int i = 0; i < exp; ++i) v *= base;
    return v;
}

}  // namespace

void TrellisConfig::validate() const {
    if (memory < 0) throw std::invalid_argument("TrellisConfig: memory must be >= 0");
    if (beam_width < 1) throw std::invalid_argument("TrellisConfig: beam_width must be >= 1");
    if (m < 2) throw std::invalid_argument("TrellisConfig: m must be >= 2");
}

ChannelParams perturb_csi(const ChannelParams& params, const CsiPerturbation& pert, Rng& rng) {
    if (pert.sigma_frac < 0.0) throw std::invalid_argument("perturb_csi: sigma_frac must be >= 0");
    std::vector<std::string> names = pert.which;
    if (names.empty()) {
        names = params.kind == ChannelKind::Optical ? std::vector<std::string>{"beta", "eta"}
                                                    : std::vector<std::string>{"c", "mu", "eta"};
    }
    ChannelParams out = params;
    for (const auto& name : names) {
        double* field = nullptr;
        bool strictly_positive = true;
        if (name == "alpha") {
            field = &out.alpha;
        } else if (name == "beta") {
            field = &out.beta;
        } else if (name == "c") {
            field = &out.c;
        } else if (name == "mu") {
            field = &out.mu;
        } else if (name == "eta") {
            field = &out.eta;
            strictly_positive = false;
        } else {
            throw std::invalid_argument("perturb_csi: unknown parameter '" + name + "'");
        }
        const double sigma = pert.sigma_frac * (*field);
        if (sigma == 0.0) continue;
        double v;
        do {
            v = *field + sigma * rng.normal();
        } while (strictly_positive ? v <= 0.0 : v < 0.0);
        *field = v;
    }
    return out;
}

std::vector<std::uint64_t> predecessor_states(std::uint64_t u_next, const TrellisConfig& cfg) {
    cfg.validate();
    if (cfg.memory == 0) {
        if (u_next != 0) throw std::invalid_argument("predecessor_states: state out of range");
        return {0};
    }
    if (cfg.memory > 1 && pow_u64(cfg.m, cfg.memory) > 1.8e19) {
        throw std::invalid_argument("predecessor_states: m^memory exceeds 64-bit state space");
    }
    const std::uint64_t n_states = [&] {
        std::uint64_t v = 1;
        for (int i = 0; i < cfg.memory; ++i) v *= static_cast<std::uint64_t>(cfg.m);
        return v;
    }();
    if (u_next >= n_states) throw std::invalid_argument("predecessor_states: state out of range");
    const std::uint64_t high = n_states / static_cast<std::uint64_t>(cfg.m);  // m^(memory-1)
    const std::uint64_t common = u_next / static_cast<std::uint64_t>(cfg.m);
    std::vector<std::uint64_t> preds(cfg.m);
    for (int i = 0; i < cfg.m; ++i) preds[i] = common + static_cast<std::uint64_t>(i) * high;
    return preds;
}

namespace {

// digit l-1 of u_prev is the symbol transmitted l intervals before the new one
int history_digit(std::uint64_t u_prev, int l, int m) {
    std::uint64_t v = u_prev;
    for (int i = 1; i < l; ++i) v /= static_cast<std::uint64_t>(m);
    return static_cast<int>(v % static_cast<std::uint64_t>(m));
}

void check_transition(std::uint64_t u_prev, std::uint64_t u_next, const TrellisConfig& cfg) {
    if (cfg.memory == 0) {
        if (u_prev != 0 || u_next != 0) {
            throw std::invalid_argument("invalid trellis transition for memory 0");
        }
        return;
    }
    std::uint64_t high = 1;
    for (int i = 0; i < cfg.memory - 1; ++i) high *= static_cast<std::uint64_t>(cfg.m);
    if (u_prev % high != u_next / static_cast<std::uint64_t>(cfg.m)) {
        throw std::invalid_argument("invalid trellis transition: " + std::to_string(u_prev) +
                                    " -> " + std::to_string(u_next));
    }
}

}  // namespace

double branch_rate(std::uint64_t u_prev, std::uint64_t u_next, int j,
                   const DiscretizedResponse& resp, double eta, const TrellisConfig& cfg) {
    cfg.validate();
    check_transition(u_prev, u_next, cfg);
    if (j < 1 || j > resp.a) throw std::invalid_argument("branch_rate: sample index out of range");
    const double denom = static_cast<double>(cfg.m - 1);
    const int new_sym = static_cast<int>(u_next % static_cast<std::uint64_t>(cfg.m));
    double rate = eta + (static_cast<double>(new_sym) / denom) * resp.tap(0, j);
    const int taps = std::min(cfg.memory, resp.k_mem);
    for (int l = 1; l <= taps; ++l) {
        const int sym = history_digit(u_prev, l, cfg.m);
        if (sym != 0) rate += (static_cast<double>(sym) / denom) * resp.tap(l, j);
    }
    return rate;
}

double branch_metric(std::span<const std::uint32_t> y_k, std::uint64_t u_prev,
                     std::uint64_t u_next, const DiscretizedResponse& resp, double eta,
                     const TrellisConfig& cfg) {
    if (static_cast<int>(y_k.size()) != resp.a) {
        throw std::invalid_argument("branch_metric: sample vector length differs from a");
    }
    double metric = 0.0;
    for (int j = 1; j <= resp.a; ++j) {
        const double rate = branch_rate(u_prev, u_next, j, resp, eta, cfg);
        const std::uint32_t y = y_k[j - 1];
        if (rate > 0.0) {
            metric += -rate + static_cast<double>(y) * std::log(rate);
        } else if (y > 0) {
            return kNegInf;
        }
        // rate == 0 with y == 0 contributes exactly 0
    }
    return metric;
}

namespace {

struct BeamEntry {
    std::vector<std::uint8_t> hist;  // oldest symbol first, size == memory
    double score = kNegInf;
};

struct Survivor {
    std::int32_t prev = -1;
    std::uint8_t symbol = 0;
};

}  // namespace

SymbolSequence viterbi_decode(const ReceivedSignal& sig, const ChannelParams& params_est,
                              const TrellisConfig& cfg) {
    cfg.validate();
    params_est.validate();
    if (cfg.m != params_est.m) {
        throw std::invalid_argument("viterbi_decode: trellis and channel modulation orders differ");
    }
    const DiscretizedResponse resp = discretize_response(params_est, 1e-4, cfg.memory);
    if (resp.a != sig.a) {
        throw std::invalid_argument("viterbi_decode: CSI sample count per symbol (" +
                                    std::to_string(resp.a) + ") differs from signal (" +
                                    std::to_string(sig.a) + ")");
    }
    const int a = sig.a;
    const int M = cfg.memory;
    const int taps = std::min(M, resp.k_mem);
    const std::size_t K = sig.num_symbols;
    const double denom = static_cast<double>(cfg.m - 1);

    std::vector<double> amp(cfg.m);
    for (int s = 0; s < cfg.m; ++s) amp[s] = static_cast<double>(s) / denom;

    std::vector<BeamEntry> beam(1);
    beam[0].hist.assign(M, 0);
    beam[0].score = 0.0;  // all-zero pre-sequence history; all other states -inf

    std::vector<std::vector<Survivor>> survivors(K);

    struct Candidate {
        double score;
        std::int32_t prev;
        std::uint8_t symbol;
    };

    std::vector<double> base(a);
    for (std::size_t k = 0; k < K; ++k) {
        const std::uint32_t* y = sig.row(k);
        // dedup candidates by successor history; map order doubles as the
        // lower-state-index tie rule (oldest-first digits compare numerically)
        std::map<std::vector<std::uint8_t>, Candidate> candidates;

        // visit entries lowest state first so equal-score dedup keeps the
        // lower predecessor
        std::vector<std::size_t> order(beam.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(),
                  [&](std::size_t l, std::size_t r) { return beam[l].hist < beam[r].hist; });

        for (std::size_t oi : order) {
            const BeamEntry& e = beam[oi];
            for (int j = 0; j < a; ++j) base[j] = params_est.eta;
            for (int l = 1; l <= taps; ++l) {
                const int sym = e.hist[M - l];
                if (sym == 0) continue;
                const double* row = resp.row(l);
                const double av = amp[sym];
                for (int j = 0; j < a; ++j) base[j] += av * row[j];
            }
            const double* row0 = resp.row(0);
            std::vector<std::uint8_t> next_hist(M > 0 ? M : 0);
            for (int s = 0; s < cfg.m; ++s) {
                double metric = 0.0;
                const double av = amp[s];
                for (int j = 0; j < a; ++j) {
                    const double rate = base[j] + av * row0[j];
                    if (rate > 0.0) {
                        metric += -rate + static_cast<double>(y[j]) * std::log(rate);
                    } else if (y[j] > 0) {
                        metric = kNegInf;
                        break;
                    }
                }
                const double score = e.score + metric;
                if (M > 0) {
                    std::copy(e.hist.begin() + 1, e.hist.end(), next_hist.begin());
                    next_hist[M - 1] = static_cast<std::uint8_t>(s);
                }
                auto it = candidates.find(next_hist);
                if (it == candidates.end()) {
                    candidates.emplace(next_hist,
                                       Candidate{score, static_cast<std::int32_t>(oi),
                                                 static_cast<std::uint8_t>(s)});
                } else if (score > it->second.score) {
                    it->second = Candidate{score, static_cast<std::int32_t>(oi),
                                           static_cast<std::uint8_t>(s)};
                }
            }
        }

        // prune to the beam width: highest scores first, lower state on ties
        std::vector<std::pair<const std::vector<std::uint8_t>*, const Candidate*>> ranked;
        ranked.reserve(candidates.size());
        for (const auto& [hist, cand] : candidates) ranked.emplace_back(&hist, &cand);
        std::stable_sort(ranked.begin(), ranked.end(), [](const auto& l, const auto& r) {
            return l.second->score > r.second->score;
        });
        const std::size_t keep = std::min<std::size_t>(cfg.beam_width, ranked.size());

        std::vector<BeamEntry> next_beam(keep);
        survivors[k].resize(keep);
        for (std::size_t i = 0; i < keep; ++i) {
            next_beam[i].hist = *ranked[i].first;
            next_beam[i].score = ranked[i].second->score;
            survivors[k][i] = Survivor{ranked[i].second->prev, ranked[i].second->symbol};
        }
        beam = std::move(next_beam);
    }

    // terminal state: best score, lower state on ties (beam is sorted that way
    // except among equal scores, where map order already ran lowest-first)
    std::size_t best = 0;
    for (std::size_t i = 1; i < beam.size(); ++i) {
        if (beam[i].score > beam[best].score ||
            (beam[i].score == beam[best].score && beam[i].hist < beam[best].hist)) {
            best = i;
        }
    }

    std::vector<int> decided(K);
    std::int32_t idx = static_cast<std::int32_t>(best);
    for (std::size_t k = K; k-- > 0;) {
        decided[k] = survivors[k][idx].symbol;
        idx = survivors[k][idx].prev;
    }
    return SymbolSequence(std::move(decided), cfg.m);
}

}  // namespace seqdet
