// Command-line front end: dataset simulation, detector training, detection,
// experiment sweeps, and result reporting.

#include <CLI11.hpp>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>

#include "seqdet/bench.hpp"
#include "seqdet/channel.hpp"
#include "seqdet/training.hpp"

using namespace seqdet;

namespace {

int cmd_simulate(const std::string& kind_str, std::size_t n, int len, std::uint64_t seed, int m,
                 const std::string& out, const std::string& csv, bool fixed, bool continuous,
                 const std::map<std::string, double>& overrides) {
    DatasetConfig cfg;
    cfg.kind = channel_kind_from_string(kind_str);
    cfg.n_sequences = n;
    cfg.seq_len = len;
    cfg.seed = seed;
    cfg.m = m;
    cfg.randomize_params = !fixed;
    cfg.continuous_ranges = continuous;
    if (continuous) {
        auto get = [&](const char* k, double dflt) {
            auto it = overrides.find(k);
            return it == overrides.end() ? dflt : it->second;
        };
        cfg.ranges.beta_lo = get("range_beta_lo", 0.2);
        cfg.ranges.beta_hi = get("range_beta_hi", 0.35);
        cfg.ranges.eta_lo = get("range_eta_lo", 10.0);
        cfg.ranges.eta_hi = get("range_eta_hi", 200.0);
    }
    if (fixed || continuous) {
        ChannelParams p;
        p.kind = cfg.kind;
        if (cfg.kind == ChannelKind::Molecular) {
            p.c = 8;
            p.mu = 40;
            p.eta = 100;
            p.kappa = 1e4;
            p.omega = 100;
            p.tau = 0.5;
        }
        for (const auto& [key, val] : overrides) {
            if (key == "alpha") p.alpha = val;
            else if (key == "beta") p.beta = val;
            else if (key == "c") p.c = val;
            else if (key == "mu") p.mu = val;
            else if (key == "eta") p.eta = val;
            else if (key == "kappa") p.kappa = val;
            else if (key == "omega") p.omega = val;
            else if (key == "tau") p.tau = val;
            else if (key.starts_with("range_")) continue;  // consumed above
            else throw std::runtime_error("unknown parameter override: " + key);
        }
        p.m = m;
        p.validate();
        cfg.fixed_params = p;
    }
    const Dataset ds = generate_dataset(cfg);
    save_dataset(ds, out);
    std::cout << "wrote " << ds.sequences.size() << " sequences to " << out << "\n";
    if (!csv.empty()) {
        export_dataset_csv(ds, csv);
        std::cout << "exported CSV to " << csv << "\n";
    }
    return 0;
}

int cmd_train(const std::string& config_path) {
    TrainConfig cfg = parse_train_config(config_path);
    const TrainResult r = train_file(cfg);
    std::string why;
    const bool trend = loss_trend_ok(r.loss_curve, 100, 5000, &why);
    std::cout << "steps=" << r.steps << " final_loss=" << r.final_loss
              << " trend=" << (trend ? "ok" : ("suspect: " + why)) << "\n";
    if (!cfg.out_checkpoint.empty()) std::cout << "checkpoint: " << cfg.out_checkpoint << "\n";
    return 0;
}

int cmd_detect(const std::string& dataset_path, const std::string& detector, int memory, int beam,
               std::uint64_t seed, const std::string& out_csv) {
    const Dataset ds = load_dataset(dataset_path);
    const DetectorSpec det = DetectorSpec::parse(detector);
    TrellisConfig tc;
    tc.memory = memory;
    tc.beam_width = beam;
    tc.m = ds.m;
    const DecodeOutput dec = decode_dataset(ds, det, tc, seed);

    std::vector<std::vector<int>> truth(ds.sequences.size());
    for (std::size_t i = 0; i < ds.sequences.size(); ++i) truth[i] = ds.sequences[i].symbols.symbols;
    const ErrorReport rep = evaluate_errors(dec.decisions, truth);

    if (!out_csv.empty()) {
        std::ofstream os(out_csv);
        if (!os) throw std::runtime_error("cannot open decisions file: " + out_csv);
        os << "seq_id,k,decided";
        const int mcls = ds.m;
        if (!dec.pmfs.empty()) {
            for (int i = 0; i < mcls; ++i) os << ",p" << i;
        }
        os << "\n";
        for (std::size_t s = 0; s < dec.decisions.size(); ++s) {
            for (std::size_t k = 0; k < dec.decisions[s].size(); ++k) {
                os << s << ',' << k << ',' << dec.decisions[s][k];
                if (!dec.pmfs.empty()) {
                    for (double p : dec.pmfs[s][k].probs) os << ',' << p;
                }
                os << "\n";
            }
        }
    }
    std::cout << det.label() << ": err=" << rep.rate << " [" << rep.wilson_lo << ", "
              << rep.wilson_hi << "] n=" << rep.n << " wall=" << dec.wall_s << "s\n";
    return 0;
}

int cmd_sweep(const std::string& spec_path, const std::string& out_csv,
              const std::string& profile_csv) {
    const ExperimentSpec spec = parse_experiment_spec(spec_path);
    ResultTable table;
    std::vector<PositionProfileRow> profile;
    if (spec.sweep == "drift") {
        table = run_timevarying(spec);
    } else if (spec.sweep == "length") {
        std::vector<int> lengths(spec.grid.size());
        for (std::size_t i = 0; i < spec.grid.size(); ++i) lengths[i] = static_cast<int>(spec.grid[i]);
        table = run_length_generalization(spec, lengths, &profile);
    } else {
        table = run_experiment(spec);
    }
    write_csv(table, out_csv);
    std::cout << "wrote " << table.rows.size() << " rows to " << out_csv << "\n";
    if (!profile_csv.empty() && !profile.empty()) {
        write_profile_csv(profile, profile_csv);
        std::cout << "wrote per-position profile to " << profile_csv << "\n";
    }
    // sanity gates on the emitted table
    for (const auto& r : table.rows) {
        if (!(r.ci_lo <= r.err && r.err <= r.ci_hi) || r.n_symbols <= 0) {
            std::cerr << "invariant violation in result row for " << r.detector << "\n";
            return 1;
        }
    }
    return 0;
}

int cmd_report(const std::string& results_csv) {
    std::ifstream is(results_csv);
    if (!is) throw std::runtime_error("cannot open results file: " + results_csv);
    std::string line;
    std::cout << std::left;
    while (std::getline(is, line)) {
        if (line.starts_with("#")) {
            std::cout << line << "\n";
            continue;
        }
        std::vector<std::string> cells;
        std::string cur;
        for (char c : line) {
            if (c == ',') {
                cells.push_back(cur);
                cur.clear();
            } else {
                cur += c;
            }
        }
        cells.push_back(cur);
        for (const auto& c : cells) std::cout << std::setw(16) << c;
        std::cout << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Poisson-channel sequence detection toolkit"};
    app.require_subcommand(1);

    // simulate
    auto* sim = app.add_subcommand("simulate", "generate a dataset file");
    std::string sim_kind = "optical", sim_out, sim_csv;
    std::size_t sim_n = 1000;
    int sim_len = 100, sim_m = 2;
    std::uint64_t sim_seed = 1;
    bool sim_fixed = false, sim_continuous = false;
    std::vector<std::string> sim_params;
    sim->add_option("--kind", sim_kind, "optical|molecular");
    sim->add_option("--n", sim_n, "number of sequences");
    sim->add_option("--len", sim_len, "symbols per sequence");
    sim->add_option("--seed", sim_seed, "dataset seed");
    sim->add_option("--m", sim_m, "modulation order");
    sim->add_option("--out", sim_out, "output dataset path")->required();
    sim->add_option("--csv", sim_csv, "optional CSV export path");
    sim->add_flag("--fixed", sim_fixed, "fixed channel parameters (default: per-sequence random)");
    sim->add_flag("--continuous", sim_continuous,
                  "draw beta (or mu) and eta uniformly from continuous ranges");
    sim->add_option("--param", sim_params,
                    "parameter override name=value (repeatable); range_beta_lo/hi and "
                    "range_eta_lo/hi set the --continuous ranges");

    // train
    auto* tr = app.add_subcommand("train", "train a detector from a config file");
    std::string tr_config;
    tr->add_option("--config", tr_config, "training config path")->required();

    // detect
    auto* de = app.add_subcommand("detect", "run one detector over a dataset");
    std::string de_dataset, de_detector, de_out;
    int de_memory = 99, de_beam = 100;
    std::uint64_t de_seed = 1;
    de->add_option("--dataset", de_dataset, "dataset path")->required();
    de->add_option("--detector", de_detector, "vd:<sigma> | sbrnn:<L>:<ckpt> | rnn:<ckpt> | symbolwise:<ckpt>")
        ->required();
    de->add_option("--memory", de_memory, "VD memory length M");
    de->add_option("--beam", de_beam, "VD beam width N");
    de->add_option("--seed", de_seed, "seed for CSI perturbation draws");
    de->add_option("--out", de_out, "decisions CSV path");

    // sweep
    auto* sw = app.add_subcommand("sweep", "run an experiment spec");
    std::string sw_spec, sw_out = "results.csv", sw_profile;
    sw->add_option("--spec", sw_spec, "experiment spec path")->required();
    sw->add_option("--out", sw_out, "results CSV path");
    sw->add_option("--profile", sw_profile, "per-position profile CSV (length sweeps)");

    // report
    auto* re = app.add_subcommand("report", "pretty-print a results CSV");
    std::string re_results;
    re->add_option("--results", re_results, "results CSV path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) {
            std::map<std::string, double> overrides;
            for (const auto& p : sim_params) {
                const auto eq = p.find('=');
                if (eq == std::string::npos) throw std::runtime_error("--param needs name=value");
                overrides[p.substr(0, eq)] = std::stod(p.substr(eq + 1));
            }
            return cmd_simulate(sim_kind, sim_n, sim_len, sim_seed, sim_m, sim_out, sim_csv,
                                sim_fixed, sim_continuous, overrides);
        }
        if (tr->parsed()) return cmd_train(tr_config);
        if (de->parsed()) return cmd_detect(de_dataset, de_detector, de_memory, de_beam, de_seed, de_out);
        if (sw->parsed()) return cmd_sweep(sw_spec, sw_out, sw_profile);
        if (re->parsed()) return cmd_report(re_results);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
