#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "seqdet/channel.hpp"
#include "seqdet/detectors.hpp"
#include "seqdet/features.hpp"
#include "seqdet/nn/adam.hpp"
#include "seqdet/nn/checkpoint.hpp"
#include "seqdet/nn/net.hpp"

namespace seqdet {

// Feature-space view of a dataset: per-symbol feature vectors plus labels.
template <typename T>
struct FeatureSequence {
    std::vector<nn::Vec<T>> feats;
    std::vector<int> labels;
};

template <typename T>
struct FeatureDataset {
    std::vector<FeatureSequence<T>> seqs;
    int input_dim = 0;
    int m = 2;
};

template <typename T>
FeatureDataset<T> extract_features(const Dataset& ds, const FeatureConfig& cfg);

enum class Precision { F32, F64 };

struct TrainConfig {
    std::string dataset_path;
    nn::NetKind net_kind = nn::NetKind::Bidirectional;
    nn::CellKind cell = nn::CellKind::Lstm;
    int layers = 3;
    int hidden = 80;
    int window_max = 50;  // L_max for the subsequence curriculum
    double lr = 1e-3;
    int batch = 500;
    long budget = 500000;  // (sub)sequences consumed over the whole run
    std::uint64_t seed = 1;
    Precision precision = Precision::F32;
    bool clip = false;
    double clip_norm = 5.0;
    FeatureConfig features;
    std::string out_checkpoint;
    std::string out_loss_csv;
    long eval_cadence = 500;  // checkpoint every this many steps
};

struct TrainResult {
    std::vector<double> loss_curve;  // one entry per optimizer step
    long steps = 0;
    double final_loss = 0.0;
};

// A contiguous slice of one dataset sequence.
struct SubseqRef {
    int seq = 0;
    int offset = 0;
    int len = 0;
};

// One curriculum draw: uniform sequence, length ~ U{2..l_max}, uniform offset.
// Draws are independent, so any single draw's length is uniform on {2..l_max}.
template <typename T>
SubseqRef curriculum_sample_one(const FeatureDataset<T>& ds, int l_max, Rng& rng);

template <typename T>
std::vector<SubseqRef> curriculum_sample(const FeatureDataset<T>& ds, int l_max, int count,
                                         Rng& rng);

// Minimizes mean cross-entropy over all positions with Adam. Aborts with a
// diagnostic when the loss stops being finite. Deterministic given the
// config seed.
TrainResult train(const TrainConfig& cfg, const Dataset& ds);
TrainResult train_file(const TrainConfig& cfg);  // loads cfg.dataset_path

// Moving-average trend gate over the early loss curve: means of consecutive
// non-overlapping `window`-step blocks within the first `first_steps` steps
// may rise at most twice, each time by less than 5%.
bool loss_trend_ok(const std::vector<double>& curve, int window = 100, int first_steps = 5000,
                   std::string* why = nullptr);

// Plain-text key=value training config (see README for the keys).
TrainConfig parse_train_config(const std::string& path);

// ---- template implementations ----

template <typename T>
FeatureDataset<T> extract_features(const Dataset& ds, const FeatureConfig& cfg) {
    FeatureDataset<T> out;
    out.m = ds.m;
    out.input_dim = cfg.feature_dim();
    out.seqs.resize(ds.sequences.size());
#pragma omp parallel for schedule(dynamic, 32)
    for (long long i = 0; i < static_cast<long long>(ds.sequences.size()); ++i) {
        const auto& seq = ds.sequences[i];
        cfg.validate(seq.signal.a);
        FeatureSequence<T>& fs = out.seqs[i];
        const std::size_t K = seq.symbols.size();
        fs.feats.resize(K);
        fs.labels = seq.symbols.symbols;
        for (std::size_t k = 0; k < K; ++k) {
            const auto f = build_features(
                std::span<const std::uint32_t>(seq.signal.row(k), seq.signal.a), seq.params.tau,
                cfg);
            nn::Vec<T> v(f.size());
            for (std::size_t j = 0; j < f.size(); ++j) v[j] = static_cast<T>(f[j]);
            fs.feats[k] = std::move(v);
        }
    }
    return out;
}

template <typename T>
SubseqRef curriculum_sample_one(const FeatureDataset<T>& ds, int l_max, Rng& rng) {
    if (ds.seqs.empty()) throw std::invalid_argument("curriculum_sample: empty dataset");
    const int seq = static_cast<int>(rng.uniform_int(ds.seqs.size()));
    const int seq_len = static_cast<int>(ds.seqs[seq].feats.size());
    if (seq_len < 2) throw std::invalid_argument("curriculum_sample: sequences must have length >= 2");
    const int top = std::min(l_max, seq_len);
    const int len = top <= 2 ? 2 : 2 + static_cast<int>(rng.uniform_int(top - 1));
    const int offset = static_cast<int>(rng.uniform_int(seq_len - len + 1));
    return SubseqRef{seq, offset, len};
}

template <typename T>
std::vector<SubseqRef> curriculum_sample(const FeatureDataset<T>& ds, int l_max, int count,
                                         Rng& rng) {
    std::vector<SubseqRef> out(count);
    for (auto& r : out) r = curriculum_sample_one(ds, l_max, rng);
    return out;
}

}  // namespace seqdet
