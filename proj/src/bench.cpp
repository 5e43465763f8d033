#include "seqdet/bench.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "seqdet/nn/checkpoint.hpp"

namespace seqdet {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

ChannelParams kind_defaults(ChannelKind kind) {
    ChannelParams p;
    p.kind = kind;
    if (kind == ChannelKind::Optical) {
        p.alpha = 2.0;
        p.beta = 0.2;
        p.eta = 1.0;
        p.kappa = 10.0;
        p.omega = 2000.0;
        p.tau = 0.025;
    } else {
        p.c = 8.0;
        p.mu = 40.0;
        p.eta = 100.0;
        p.kappa = 1e4;
        p.omega = 100.0;
        p.tau = 0.5;
    }
    return p;
}

Dataset make_test_set(const ChannelParams& params, int n_seq, int seq_len, std::uint64_t seed) {
    DatasetConfig cfg;
    cfg.kind = params.kind;
    cfg.m = params.m;
    cfg.n_sequences = static_cast<std::size_t>(n_seq);
    cfg.seq_len = seq_len;
    cfg.seed = seed;
    cfg.randomize_params = false;
    cfg.fixed_params = params;
    return generate_dataset(cfg);
}

Dataset make_tv_test_set(const ChannelParams& params0, const TimeVaryingConfig& tv, int n_seq,
                         int seq_len, std::uint64_t seed) {
    Dataset ds;
    ds.kind = params0.kind;
    ds.m = params0.m;
    ds.omega = params0.omega;
    ds.sequences.resize(n_seq);
#pragma omp parallel for schedule(dynamic, 8)
    for (long long i = 0; i < n_seq; ++i) {
        Rng rng(seed, static_cast<std::uint64_t>(i));
        auto& out = ds.sequences[i];
        out.params = params0;
        out.symbols = SymbolSequence::random(static_cast<std::size_t>(seq_len), params0.m, rng);
        out.signal = simulate_time_varying(out.symbols, params0, tv, rng);
    }
    return ds;
}

void apply_sweep(const std::string& sweep, double v, ChannelParams& p, TrellisConfig& tc) {
    if (sweep == "none" || sweep == "drift") return;
    if (sweep == "tau") {
        p.tau = v;
    } else if (sweep == "eta") {
        p.eta = v;
    } else if (sweep == "beta") {
        p.beta = v;
    } else if (sweep == "c") {
        p.c = v;
    } else if (sweep == "mu") {
        p.mu = v;
    } else if (sweep == "beam") {
        tc.beam_width = static_cast<int>(v);
    } else if (sweep == "memory") {
        tc.memory = static_cast<int>(v);
    } else {
        throw std::invalid_argument("unknown sweep variable: " + sweep);
    }
}

std::uint64_t point_seed(const ExperimentSpec& spec, std::size_t grid_idx) {
    return fnv1a64(spec.canonical_text() + "|point=" + std::to_string(grid_idx));
}

template <typename T>
std::vector<std::vector<nn::Vec<T>>> dataset_features(const Dataset& ds, const FeatureConfig& fc) {
    const auto fd = extract_features<T>(ds, fc);
    std::vector<std::vector<nn::Vec<T>>> out(fd.seqs.size());
    for (std::size_t i = 0; i < fd.seqs.size(); ++i) out[i] = fd.seqs[i].feats;
    return out;
}

}  // namespace

std::uint64_t fnv1a64(const std::string& text) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string DetectorSpec::label() const {
    std::ostringstream os;
    switch (kind) {
        case Kind::VD:
            os << "vd_" << csi_error * 100 << "pct";
            break;
        case Kind::SBRNN:
            os << "sbrnn_L" << window;
            break;
        case Kind::RNN:
            os << "rnn";
            break;
        case Kind::Symbolwise:
            os << "symbolwise";
            break;
    }
    return os.str();
}

DetectorSpec DetectorSpec::parse(const std::string& text) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : text) {
        if (c == ':') {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    parts.push_back(cur);
    DetectorSpec d;
    if (parts[0] == "vd") {
        d.kind = Kind::VD;
        if (parts.size() > 1) d.csi_error = std::stod(parts[1]);
    } else if (parts[0] == "sbrnn") {
        d.kind = Kind::SBRNN;
        if (parts.size() < 3) throw std::invalid_argument("sbrnn detector needs sbrnn:<L>:<ckpt>");
        d.window = std::stoi(parts[1]);
        d.checkpoint = parts[2];
    } else if (parts[0] == "rnn") {
        d.kind = Kind::RNN;
        if (parts.size() < 2) throw std::invalid_argument("rnn detector needs rnn:<ckpt>");
        d.checkpoint = parts[1];
    } else if (parts[0] == "symbolwise") {
        d.kind = Kind::Symbolwise;
        if (parts.size() < 2) throw std::invalid_argument("symbolwise detector needs symbolwise:<ckpt>");
        d.checkpoint = parts[1];
    } else {
        throw std::invalid_argument("unknown detector spec: " + text);
    }
    return d;
}

std::string ExperimentSpec::canonical_text() const {
    std::ostringstream os;
    os.precision(17);
    os << "name=" << name << ";kind=" << to_string(kind) << ";sweep=" << sweep << ";grid=";
    for (double g : grid) os << g << ',';
    os << ";nseq=" << n_seq << ";len=" << seq_len << ";seed=" << seed;
    os << ";m=" << fixed.m << ";alpha=" << fixed.alpha << ";beta=" << fixed.beta
       << ";c=" << fixed.c << ";mu=" << fixed.mu << ";eta=" << fixed.eta
       << ";kappa=" << fixed.kappa << ";omega=" << fixed.omega << ";tau=" << fixed.tau;
    os << ";M=" << trellis.memory << ";N=" << trellis.beam_width;
    os << ";tv_d=" << tv.d_diff << ";tv_nu=" << tv.nu << ";tv_b=[" << tv.beta_lo << ','
       << tv.beta_hi << "];tv_e=[" << tv.eta_lo << ',' << tv.eta_hi << "]";
    os << ";detectors=";
    for (const auto& d : detectors) os << d.label() << ',';
    return os.str();
}

void ExperimentSpec::validate() const {
    if (grid.empty()) throw std::invalid_argument("experiment grid must be nonempty");
    if (detectors.empty()) throw std::invalid_argument("experiment needs at least one detector");
    if (n_seq < 1 || seq_len < 1) throw std::invalid_argument("n_seq and seq_len must be >= 1");
    for (const auto& d : detectors) {
        if (d.kind != DetectorSpec::Kind::VD && d.checkpoint.empty()) {
            throw std::invalid_argument("detector " + d.label() + " has no checkpoint");
        }
    }
}

DecodeOutput decode_dataset(const Dataset& test, const DetectorSpec& det,
                            const TrellisConfig& trellis, std::uint64_t seed) {
    DecodeOutput out;
    const std::size_t S = test.sequences.size();
    out.decisions.resize(S);

    if (det.kind == DetectorSpec::Kind::VD) {
        TrellisConfig tc = trellis;
        tc.m = test.m;
        const auto t0 = Clock::now();
#pragma omp parallel for schedule(dynamic, 4)
        for (long long i = 0; i < static_cast<long long>(S); ++i) {
            ChannelParams est = test.sequences[i].params;
            if (det.csi_error > 0.0) {
                Rng prng(seed ^ 0xC51ull, static_cast<std::uint64_t>(i));
                est = perturb_csi(est, CsiPerturbation{det.csi_error, {}}, prng);
            }
            out.decisions[i] = viterbi_decode(test.sequences[i].signal, est, tc).symbols;
        }
        out.wall_s = seconds_since(t0);
        return out;
    }

    // neural detectors
    nn::NetworkParams<float> net;
    FeatureConfig fc;
    try {
        std::tie(net, fc) = nn::load_checkpoint<float>(det.checkpoint);
    } catch (const std::exception& e) {
        throw std::runtime_error("detector " + det.label() + ": " + e.what());
    }
    const auto t0 = Clock::now();
    const auto feats = dataset_features<float>(test, fc);

    if (det.kind == DetectorSpec::Kind::SBRNN) {
        out.pmfs = sbrnn_detect_batch(feats, net, det.window);
    } else if (det.kind == DetectorSpec::Kind::RNN) {
        if (net.desc.kind != nn::NetKind::Recurrent) {
            throw std::runtime_error("detector " + det.label() + ": checkpoint is not a unidirectional net");
        }
        // lockstep streaming across the test set (same cells as step-by-step)
        const auto batch = nn::PackedBatch<float>::from_sequences(feats);
        const auto logits = nn::net_forward(net, batch);
        out.pmfs.assign(S, {});
        for (std::size_t s = 0; s < S; ++s) out.pmfs[s].resize(feats[s].size());
        for (std::size_t t = 0; t < logits.size(); ++t) {
            nn::Mat<float> p = logits[t];
            nn::softmax_columns(p);
            for (long c = 0; c < p.cols(); ++c) {
                PmfEstimate e;
                e.probs.resize(p.rows());
                for (long i = 0; i < p.rows(); ++i) e.probs[i] = p(i, c);
                out.pmfs[c][t] = std::move(e);
            }
        }
    } else {  // Symbolwise
        out.pmfs.assign(S, {});
        for (std::size_t s = 0; s < S; ++s) {
            out.pmfs[s].resize(feats[s].size());
            for (std::size_t k = 0; k < feats[s].size(); ++k) {
                out.pmfs[s][k] = detect_symbolwise(feats[s][k], net);
            }
        }
    }
    for (std::size_t s = 0; s < S; ++s) {
        out.decisions[s].resize(out.pmfs[s].size());
        for (std::size_t k = 0; k < out.pmfs[s].size(); ++k) {
            out.decisions[s][k] = out.pmfs[s][k].argmax();
        }
    }
    out.wall_s = seconds_since(t0);
    return out;
}

namespace {

std::vector<std::vector<int>> truth_of(const Dataset& ds) {
    std::vector<std::vector<int>> t(ds.sequences.size());
    for (std::size_t i = 0; i < ds.sequences.size(); ++i) {
        t[i] = ds.sequences[i].symbols.symbols;
    }
    return t;
}

ResultRow row_from(double sweep_value, const DetectorSpec& det, const ErrorReport& rep,
                   double wall_s) {
    ResultRow r;
    r.sweep_value = sweep_value;
    r.detector = det.label();
    r.err = rep.rate;
    r.ci_lo = rep.wilson_lo;
    r.ci_hi = rep.wilson_hi;
    r.n_symbols = static_cast<long>(rep.n);
    r.wall_s = wall_s;
    return r;
}

}  // namespace

ResultTable run_experiment(const ExperimentSpec& spec) {
    spec.validate();
    ResultTable table;
    table.spec_hash = std::to_string(fnv1a64(spec.canonical_text()));
    for (std::size_t gi = 0; gi < spec.grid.size(); ++gi) {
        ChannelParams p = spec.fixed;
        TrellisConfig tc = spec.trellis;
        apply_sweep(spec.sweep, spec.grid[gi], p, tc);
        p.validate();
        const std::uint64_t sd = point_seed(spec, gi);
        const Dataset test = make_test_set(p, spec.n_seq, spec.seq_len, sd);
        const auto truth = truth_of(test);
        for (const auto& det : spec.detectors) {
            const DecodeOutput dec = decode_dataset(test, det, tc, sd);
            const ErrorReport rep = evaluate_errors(dec.decisions, truth);
            table.rows.push_back(row_from(spec.grid[gi], det, rep, dec.wall_s));
        }
    }
    return table;
}

ResultTable run_timevarying(const ExperimentSpec& spec) {
    spec.validate();
    ResultTable table;
    table.spec_hash = std::to_string(fnv1a64(spec.canonical_text()));
    for (std::size_t gi = 0; gi < spec.grid.size(); ++gi) {
        TimeVaryingConfig tv = spec.tv;
        tv.nu = spec.grid[gi];
        const std::uint64_t sd = point_seed(spec, gi);
        const Dataset test = make_tv_test_set(spec.fixed, tv, spec.n_seq, spec.seq_len, sd);
        const auto truth = truth_of(test);
        for (const auto& det : spec.detectors) {
            // the dataset stores params0, so the VD only ever sees the initial CSI
            const DecodeOutput dec = decode_dataset(test, det, spec.trellis, sd);
            const ErrorReport rep = evaluate_errors(dec.decisions, truth);
            table.rows.push_back(row_from(spec.grid[gi], det, rep, dec.wall_s));
        }
    }
    return table;
}

ResultTable run_length_generalization(const ExperimentSpec& spec, const std::vector<int>& lengths,
                                      std::vector<PositionProfileRow>* profile) {
    spec.validate();
    ResultTable table;
    table.spec_hash = std::to_string(fnv1a64(spec.canonical_text()));
    for (std::size_t gi = 0; gi < lengths.size(); ++gi) {
        const int len = lengths[gi];
        const std::uint64_t sd = point_seed(spec, gi) ^ 0x11ull;
        const Dataset test = make_test_set(spec.fixed, spec.n_seq, len, sd);
        const auto truth = truth_of(test);
        for (const auto& det : spec.detectors) {
            const DecodeOutput dec = decode_dataset(test, det, spec.trellis, sd);
            const ErrorReport rep = evaluate_errors(dec.decisions, truth);
            table.rows.push_back(row_from(len, det, rep, dec.wall_s));
            if (profile) {
                for (std::size_t pos = 0; pos < rep.per_position.size(); ++pos) {
                    profile->push_back(PositionProfileRow{static_cast<double>(len), det.label(),
                                                          static_cast<int>(pos),
                                                          rep.per_position[pos],
                                                          static_cast<long>(rep.per_position_n[pos])});
                }
            }
        }
    }
    return table;
}

void write_csv(const ResultTable& table, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open results file: " + path);
    os << "# spec_hash=" << table.spec_hash << "\n";
    os << "sweep_value,detector,err,ci_lo,ci_hi,n_symbols,wall_s\n";
    os.precision(10);
    for (const auto& r : table.rows) {
        os << r.sweep_value << ',' << r.detector << ',' << r.err << ',' << r.ci_lo << ','
           << r.ci_hi << ',' << r.n_symbols << ',' << r.wall_s << "\n";
    }
}

void write_profile_csv(const std::vector<PositionProfileRow>& rows, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open profile file: " + path);
    os << "sweep_value,detector,position,err,n\n";
    os.precision(10);
    for (const auto& r : rows) {
        os << r.sweep_value << ',' << r.detector << ',' << r.position << ',' << r.err << ','
           << r.n << "\n";
    }
}

ExperimentSpec parse_experiment_spec(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open experiment spec: " + path);
    ExperimentSpec spec;
    bool kind_set = false;
    std::vector<std::pair<std::string, std::string>> kv;
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
        kv.emplace_back(strip(line.substr(0, eq)), strip(line.substr(eq + 1)));
        if (kv.back().first == "kind") {
            spec.kind = channel_kind_from_string(kv.back().second);
            spec.fixed = kind_defaults(spec.kind);
            kind_set = true;
        }
    }
    if (!kind_set) spec.fixed = kind_defaults(spec.kind);

    auto split_list = [](const std::string& s) {
        std::vector<std::string> out;
        std::string cur;
        for (char c : s) {
            if (c == ',') {
                out.push_back(cur);
                cur.clear();
            } else {
                cur += c;
            }
        }
        if (!cur.empty()) out.push_back(cur);
        return out;
    };

    for (const auto& [key, val] : kv) {
        if (key == "kind") {
            continue;  // handled above
        } else if (key == "name") {
            spec.name = val;
        } else if (key == "sweep") {
            spec.sweep = val;
        } else if (key == "grid") {
            spec.grid.clear();
            for (const auto& g : split_list(val)) spec.grid.push_back(std::stod(g));
        } else if (key == "detectors") {
            spec.detectors.clear();
            for (const auto& d : split_list(val)) spec.detectors.push_back(DetectorSpec::parse(d));
        } else if (key == "n_seq") {
            spec.n_seq = std::stoi(val);
        } else if (key == "seq_len") {
            spec.seq_len = std::stoi(val);
        } else if (key == "seed") {
            spec.seed = std::stoull(val);
        } else if (key == "m") {
            spec.fixed.m = std::stoi(val);
        } else if (key == "alpha") {
            spec.fixed.alpha = std::stod(val);
        } else if (key == "beta") {
            spec.fixed.beta = std::stod(val);
        } else if (key == "c") {
            spec.fixed.c = std::stod(val);
        } else if (key == "mu") {
            spec.fixed.mu = std::stod(val);
        } else if (key == "eta") {
            spec.fixed.eta = std::stod(val);
        } else if (key == "kappa") {
            spec.fixed.kappa = std::stod(val);
        } else if (key == "omega") {
            spec.fixed.omega = std::stod(val);
        } else if (key == "tau") {
            spec.fixed.tau = std::stod(val);
        } else if (key == "memory") {
            spec.trellis.memory = std::stoi(val);
        } else if (key == "beam") {
            spec.trellis.beam_width = std::stoi(val);
        } else if (key == "tv_d") {
            spec.tv.d_diff = std::stod(val);
        } else if (key == "tv_beta_lo") {
            spec.tv.beta_lo = std::stod(val);
        } else if (key == "tv_beta_hi") {
            spec.tv.beta_hi = std::stod(val);
        } else if (key == "tv_eta_lo") {
            spec.tv.eta_lo = std::stod(val);
        } else if (key == "tv_eta_hi") {
            spec.tv.eta_hi = std::stod(val);
        } else {
            throw std::runtime_error(path + ": unknown key '" + key + "'");
        }
    }
    spec.trellis.m = spec.fixed.m;
    if (spec.grid.empty()) spec.grid = {0.0};
    return spec;
}

}  // namespace seqdet
