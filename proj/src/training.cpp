#include "seqdet/training.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace seqdet {

namespace {

constexpr std::uint64_t kInitStream = 0x1A17;
constexpr std::uint64_t kSampleStream = 0x5A3F;

template <typename T>
TrainResult train_impl(const TrainConfig& cfg, const Dataset& ds) {
    if (cfg.batch < 1) throw std::invalid_argument("train: batch must be >= 1");
    if (cfg.budget < 1) throw std::invalid_argument("train: budget must be >= 1");
    if (ds.sequences.empty()) throw std::invalid_argument("train: dataset is empty");

    const FeatureDataset<T> feats = extract_features<T>(ds, cfg.features);

    nn::NetDescriptor desc;
    desc.kind = cfg.net_kind;
    desc.cell = cfg.cell;
    desc.layers = cfg.layers;
    desc.hidden = cfg.hidden;
    desc.input_dim = feats.input_dim;
    desc.classes = feats.m;
    desc.window_max = cfg.net_kind == nn::NetKind::Bidirectional ? cfg.window_max : 0;

    Rng init_rng(cfg.seed, kInitStream);
    nn::NetworkParams<T> params = nn::NetworkParams<T>::init(desc, init_rng);
    nn::AdamState<T> opt = nn::AdamState<T>::zero_for(params);
    nn::AdamConfig<T> opt_cfg;
    opt_cfg.lr = static_cast<T>(cfg.lr);

    Rng sample_rng(cfg.seed, kSampleStream);
    TrainResult result;
    const long steps = (cfg.budget + cfg.batch - 1) / cfg.batch;
    result.loss_curve.reserve(steps);

    for (long step = 0; step < steps; ++step) {
        std::vector<std::vector<nn::Vec<T>>> xs;
        std::vector<std::vector<int>> labels;
        xs.reserve(cfg.batch);
        labels.reserve(cfg.batch);

        if (cfg.net_kind == nn::NetKind::Bidirectional) {
            const auto refs = curriculum_sample(feats, cfg.window_max, cfg.batch, sample_rng);
            for (const auto& r : refs) {
                const auto& fs = feats.seqs[r.seq];
                xs.emplace_back(fs.feats.begin() + r.offset, fs.feats.begin() + r.offset + r.len);
                labels.emplace_back(fs.labels.begin() + r.offset,
                                    fs.labels.begin() + r.offset + r.len);
            }
        } else if (cfg.net_kind == nn::NetKind::Recurrent) {
            for (int i = 0; i < cfg.batch; ++i) {
                const auto& fs = feats.seqs[sample_rng.uniform_int(feats.seqs.size())];
                xs.emplace_back(fs.feats);
                labels.emplace_back(fs.labels);
            }
        } else {  // Dense: individual symbols
            for (int i = 0; i < cfg.batch; ++i) {
                const auto& fs = feats.seqs[sample_rng.uniform_int(feats.seqs.size())];
                const std::size_t k = sample_rng.uniform_int(fs.feats.size());
                xs.push_back({fs.feats[k]});
                labels.push_back({fs.labels[k]});
            }
        }

        std::vector<int> order;
        const auto batch = nn::PackedBatch<T>::from_sequences(xs, &order);
        std::vector<std::vector<int>> packed_labels(labels.size());
        for (std::size_t i = 0; i < order.size(); ++i) packed_labels[i] = labels[order[i]];

        nn::Tape<T> tape;
        const auto logits = nn::net_forward(params, batch, &tape);
        std::vector<nn::Mat<T>> dlogits;
        const double loss = nn::batch_cross_entropy(logits, batch, packed_labels, &dlogits);
        if (!std::isfinite(loss)) {
            throw std::runtime_error("train: loss diverged (non-finite) at step " +
                                     std::to_string(step) + " of " + std::to_string(steps));
        }
        nn::TensorMap<T> grads = nn::zero_like(params.tensors);
        nn::net_backward(params, batch, tape, logits, dlogits, grads);
        if (cfg.clip) nn::clip_grads(grads, cfg.clip_norm);
        nn::adam_step(params, grads, opt, opt_cfg);

        result.loss_curve.push_back(loss);
        if (!cfg.out_checkpoint.empty() && cfg.eval_cadence > 0 &&
            ((step + 1) % cfg.eval_cadence == 0)) {
            nn::save_checkpoint(params, cfg.features, cfg.out_checkpoint);
        }
    }

    result.steps = steps;
    result.final_loss = result.loss_curve.empty() ? 0.0 : result.loss_curve.back();
    if (!cfg.out_checkpoint.empty()) nn::save_checkpoint(params, cfg.features, cfg.out_checkpoint);
    return result;
}

void write_loss_csv(const TrainResult& r, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open loss curve file: " + path);
    os << "step,loss\n";
    for (std::size_t i = 0; i < r.loss_curve.size(); ++i) {
        os << (i + 1) << ',' << r.loss_curve[i] << "\n";
    }
}

}  // namespace

TrainResult train(const TrainConfig& cfg, const Dataset& ds) {
    TrainResult r = cfg.precision == Precision::F32 ? train_impl<float>(cfg, ds)
                                                    : train_impl<double>(cfg, ds);
    if (!cfg.out_loss_csv.empty()) write_loss_csv(r, cfg.out_loss_csv);
    return r;
}

TrainResult train_file(const TrainConfig& cfg) {
    if (cfg.dataset_path.empty()) throw std::invalid_argument("train: no dataset path configured");
    return train(cfg, load_dataset(cfg.dataset_path));
}

bool loss_trend_ok(const std::vector<double>& curve, int window, int first_steps,
                   std::string* why) {
    const std::size_t span = std::min<std::size_t>(curve.size(), first_steps);
    std::vector<double> means;
    for (std::size_t start = 0; start + window <= span; start += window) {
        double s = 0.0;
        for (int i = 0; i < window; ++i) s += curve[start + i];
        means.push_back(s / window);
    }
    int ups = 0;
    for (std::size_t i = 1; i < means.size(); ++i) {
        if (means[i] > means[i - 1]) {
            const double rel = (means[i] - means[i - 1]) / means[i - 1];
            if (rel >= 0.05) {
                if (why) {
                    *why = "window " + std::to_string(i) + " rose by " +
                           std::to_string(rel * 100) + "%";
                }
                return false;
            }
            ++ups;
        }
    }
    if (ups > 2) {
        if (why) *why = std::to_string(ups) + " upward moves in the smoothed loss";
        return false;
    }
    return true;
}

TrainConfig parse_train_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open training config: " + path);
    TrainConfig cfg;
    ChannelKind kind = ChannelKind::Optical;
    double gamma_override = -1.0;
    int bins_override = -1;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected key=value");
        }
        auto strip = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r\n");
            const auto e = s.find_last_not_of(" \t\r\n");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        const std::string key = strip(line.substr(0, eq));
        const std::string val = strip(line.substr(eq + 1));
        if (key == "dataset") {
            cfg.dataset_path = val;
        } else if (key == "detector") {
            if (val == "sbrnn") cfg.net_kind = nn::NetKind::Bidirectional;
            else if (val == "rnn") cfg.net_kind = nn::NetKind::Recurrent;
            else if (val == "symbolwise") cfg.net_kind = nn::NetKind::Dense;
            else throw std::runtime_error("unknown detector kind: " + val);
        } else if (key == "cell") {
            cfg.cell = nn::cell_kind_from_string(val);
        } else if (key == "kind") {
            kind = channel_kind_from_string(val);
        } else if (key == "layers") {
            cfg.layers = std::stoi(val);
        } else if (key == "hidden") {
            cfg.hidden = std::stoi(val);
        } else if (key == "l_max") {
            cfg.window_max = std::stoi(val);
        } else if (key == "lr") {
            cfg.lr = std::stod(val);
        } else if (key == "batch") {
            cfg.batch = std::stoi(val);
        } else if (key == "budget") {
            cfg.budget = std::stol(val);
        } else if (key == "seed") {
            cfg.seed = std::stoull(val);
        } else if (key == "precision") {
            if (val == "f32") cfg.precision = Precision::F32;
            else if (val == "f64") cfg.precision = Precision::F64;
            else throw std::runtime_error("unknown precision: " + val);
        } else if (key == "clip") {
            cfg.clip = val == "1" || val == "true";
        } else if (key == "clip_norm") {
            cfg.clip_norm = std::stod(val);
        } else if (key == "checkpoint") {
            cfg.out_checkpoint = val;
        } else if (key == "loss_csv") {
            cfg.out_loss_csv = val;
        } else if (key == "eval_cadence") {
            cfg.eval_cadence = std::stol(val);
        } else if (key == "gamma") {
            gamma_override = std::stod(val);
        } else if (key == "bins") {
            bins_override = std::stoi(val);
        } else {
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": unknown key '" +
                                     key + "'");
        }
    }
    cfg.features = FeatureConfig::defaults_for(kind);
    if (gamma_override > 0.0) cfg.features.gamma = gamma_override;
    if (bins_override > 0) cfg.features.bins = bins_override;
    return cfg;
}

}  // namespace seqdet
