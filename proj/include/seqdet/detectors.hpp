#pragma once

#include <cstddef>
#include <deque>
#include <vector>

#include "seqdet/nn/net.hpp"
#include "seqdet/stats.hpp"

namespace seqdet {

// Detector posterior over the m symbols for one position.
struct PmfEstimate {
    std::vector<double> probs;

    int argmax() const {  // lowest index wins ties
        int best = 0;
        for (std::size_t i = 1; i < probs.size(); ++i) {
            if (probs[i] > probs[best]) best = static_cast<int>(i);
        }
        return best;
    }
    double sum() const {
        double s = 0.0;
        for (double p : probs) s += p;
        return s;
    }
};

namespace detail {

template <typename T>
PmfEstimate pmf_from_logits(const nn::Vec<T>& logits) {
    nn::Mat<T> col = logits;
    nn::softmax_columns(col);
    PmfEstimate out;
    out.probs.resize(col.rows());
    for (long i = 0; i < col.rows(); ++i) out.probs[i] = static_cast<double>(col(i, 0));
    return out;
}

}  // namespace detail

// Symbol-by-symbol detection: dense stack + softmax on one feature vector.
template <typename T>
PmfEstimate detect_symbolwise(const nn::Vec<T>& features, const nn::NetworkParams<T>& net) {
    if (net.desc.kind != nn::NetKind::Dense) {
        throw std::invalid_argument("detect_symbolwise: checkpoint is not a dense net");
    }
    nn::Mat<T> x = features;
    const auto logits = nn::net_forward(net, [&] {
        nn::PackedBatch<T> b;
        b.x = {x};
        b.n_active = {1};
        b.lengths = {1};
        return b;
    }());
    return detail::pmf_from_logits<T>(logits[0].col(0));
}

// Causal streaming detection: one recurrent step per arriving symbol.
template <typename T>
PmfEstimate detect_stream_rnn(const nn::Vec<T>& features, nn::RecurrentState<T>& state,
                              const nn::NetworkParams<T>& net) {
    return detail::pmf_from_logits<T>(nn::net_step(net, features, state));
}

// One bidirectional pass over a whole window of T <= window_max positions.
template <typename T>
std::vector<PmfEstimate> detect_block_brnn(const std::vector<nn::Vec<T>>& window,
                                           const nn::NetworkParams<T>& net) {
    if (net.desc.kind != nn::NetKind::Bidirectional) {
        throw std::invalid_argument("detect_block_brnn: checkpoint is not a bidirectional net");
    }
    if (window.empty()) throw std::invalid_argument("detect_block_brnn: empty window");
    if (static_cast<int>(window.size()) > net.desc.window_max) {
        throw std::invalid_argument("detect_block_brnn: window of " +
                                    std::to_string(window.size()) +
                                    " exceeds trained support window_max = " +
                                    std::to_string(net.desc.window_max));
    }
    const auto logits = nn::net_window(net, window);
    std::vector<PmfEstimate> out(logits.size());
    for (std::size_t t = 0; t < logits.size(); ++t) out[t] = detail::pmf_from_logits<T>(logits[t]);
    return out;
}

// Sliding BRNN detector. The first L arrivals run as one window; every later
// arrival slides the window by one and runs a fresh pass. Each pass deposits
// its per-position PMFs into the running averages, so a position's estimate
// is the uniform mean over every window that covered it. Estimates are
// emitted immediately and revised while the position stays inside the
// window; once the window has moved past it, the estimate is final.
template <typename T>
class SlidingSbrnnDetector {
public:
    struct Update {
        std::size_t position;  // 0-based stream index
        PmfEstimate pmf;
    };

    SlidingSbrnnDetector(const nn::NetworkParams<T>& net, int window_len)
        : net_(&net), L_(window_len) {
        if (net.desc.kind != nn::NetKind::Bidirectional) {
            throw std::invalid_argument("SlidingSbrnnDetector: checkpoint is not bidirectional");
        }
        if (L_ < 1) throw std::invalid_argument("SlidingSbrnnDetector: window length must be >= 1");
        if (L_ > net.desc.window_max) {
            throw std::invalid_argument("SlidingSbrnnDetector: window length " +
                                        std::to_string(L_) + " exceeds trained support " +
                                        std::to_string(net.desc.window_max));
        }
    }

    std::vector<Update> push(const nn::Vec<T>& features) {
        if (finished_) throw std::logic_error("SlidingSbrnnDetector: push after finish");
        ring_.push_back(features);
        if (static_cast<int>(ring_.size()) > L_) ring_.pop_front();
        ++n_seen_;
        sum_.emplace_back(net_->desc.classes, 0.0);
        count_.push_back(0);
        if (n_seen_ < static_cast<std::size_t>(L_)) return {};
        return run_window(n_seen_ - static_cast<std::size_t>(L_));
    }

    // Flushes a stream shorter than the window (single short pass); no-op
    // otherwise. Must be called before reading final estimates.
    std::vector<Update> finish() {
        finished_ = true;
        if (n_seen_ == 0 || n_seen_ >= static_cast<std::size_t>(L_)) return {};
        return run_window(0);
    }

    std::size_t windows_run() const { return windows_run_; }
    std::size_t positions_seen() const { return n_seen_; }

    // Uniform average over all covering windows; valid for positions the
    // window has passed, and for every position once finish() ran.
    PmfEstimate final_pmf(std::size_t position) const {
        PmfEstimate e;
        const auto& s = sum_.at(position);
        const double n = static_cast<double>(count_.at(position));
        if (n == 0) throw std::logic_error("SlidingSbrnnDetector: position has no estimate yet");
        e.probs.resize(s.size());
        for (std::size_t i = 0; i < s.size(); ++i) e.probs[i] = s[i] / n;
        return e;
    }

    std::size_t window_count(std::size_t position) const { return count_.at(position); }

private:
    std::vector<Update> run_window(std::size_t start) {
        const std::vector<nn::Vec<T>> window(ring_.begin(), ring_.end());
        const auto logits = nn::net_window(*net_, window);
        ++windows_run_;
        std::vector<Update> updates;
        updates.reserve(logits.size());
        for (std::size_t w = 0; w < logits.size(); ++w) {
            const std::size_t pos = start + w;
            const PmfEstimate p = detail::pmf_from_logits<T>(logits[w]);
            auto& s = sum_[pos];
            for (std::size_t i = 0; i < s.size(); ++i) s[i] += p.probs[i];
            count_[pos] += 1;
            updates.push_back(Update{pos, final_pmf(pos)});
        }
        return updates;
    }

    const nn::NetworkParams<T>* net_;
    int L_;
    std::deque<nn::Vec<T>> ring_;
    std::vector<std::vector<double>> sum_;  // per position, running PMF sums
    std::vector<std::size_t> count_;        // |J_k| so far
    std::size_t n_seen_ = 0;
    std::size_t windows_run_ = 0;
    bool finished_ = false;
};

// Lockstep SBRNN decoding of many equal-length streams: one packed batch per
// window start, so the whole test set shares each BRNN pass. Matches the
// streaming detector up to float reduction order.
template <typename T>
std::vector<std::vector<PmfEstimate>> sbrnn_detect_batch(
    const std::vector<std::vector<nn::Vec<T>>>& streams, const nn::NetworkParams<T>& net,
    int window_len);

// Exact error fraction with Wilson interval and the per-position profile.
struct ErrorReport {
    std::size_t n = 0;
    std::size_t errors = 0;
    double rate = 0.0;
    double wilson_lo = 0.0;
    double wilson_hi = 0.0;
    std::vector<double> per_position;
    std::vector<std::size_t> per_position_n;
};

ErrorReport evaluate_errors(const std::vector<std::vector<int>>& decisions,
                            const std::vector<std::vector<int>>& truth);

// ---- implementation ----

template <typename T>
std::vector<std::vector<PmfEstimate>> sbrnn_detect_batch(
    const std::vector<std::vector<nn::Vec<T>>>& streams, const nn::NetworkParams<T>& net,
    int window_len) {
    if (streams.empty()) return {};
    const std::size_t n = streams.front().size();
    for (const auto& s : streams) {
        if (s.size() != n) {
            throw std::invalid_argument("sbrnn_detect_batch: streams must share one length");
        }
    }
    if (n == 0) throw std::invalid_argument("sbrnn_detect_batch: empty streams");
    const int L = std::min<int>(window_len, static_cast<int>(n));
    if (net.desc.kind != nn::NetKind::Bidirectional || L > net.desc.window_max) {
        throw std::invalid_argument("sbrnn_detect_batch: invalid net or window length");
    }
    const std::size_t S = streams.size();
    const int m = net.desc.classes;
    std::vector<std::vector<std::vector<double>>> sums(
        S, std::vector<std::vector<double>>(n, std::vector<double>(m, 0.0)));
    std::vector<std::vector<std::size_t>> counts(S, std::vector<std::size_t>(n, 0));

    nn::PackedBatch<T> batch;
    batch.lengths.assign(S, L);
    batch.n_active.assign(L, static_cast<int>(S));
    batch.x.assign(L, nn::Mat<T>(net.desc.input_dim, S));

    for (std::size_t start = 0; start + L <= n; ++start) {
        for (int t = 0; t < L; ++t) {
            for (std::size_t s = 0; s < S; ++s) batch.x[t].col(s) = streams[s][start + t];
        }
        const auto logits = nn::net_forward(net, batch);
        for (int t = 0; t < L; ++t) {
            nn::Mat<T> p = logits[t];
            nn::softmax_columns(p);
            for (std::size_t s = 0; s < S; ++s) {
                auto& acc = sums[s][start + t];
                for (int i = 0; i < m; ++i) acc[i] += static_cast<double>(p(i, s));
                counts[s][start + t] += 1;
            }
        }
    }

    std::vector<std::vector<PmfEstimate>> out(S, std::vector<PmfEstimate>(n));
    for (std::size_t s = 0; s < S; ++s) {
        for (std::size_t k = 0; k < n; ++k) {
            auto& e = out[s][k];
            e.probs.resize(m);
            for (int i = 0; i < m; ++i) {
                e.probs[i] = sums[s][k][i] / static_cast<double>(counts[s][k]);
            }
        }
    }
    return out;
}

}  // namespace seqdet
