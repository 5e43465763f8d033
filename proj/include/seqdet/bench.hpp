#pragma once

#include <optional>
#include <string>
#include <vector>

#include "seqdet/channel.hpp"
#include "seqdet/detectors.hpp"
#include "seqdet/training.hpp"
#include "seqdet/viterbi.hpp"

namespace seqdet {

struct DetectorSpec {
    enum class Kind { VD, SBRNN, RNN, Symbolwise };
    Kind kind = Kind::VD;
    double csi_error = 0.0;     // fractional sigma for VD CSI estimates
    int window = 50;            // SBRNN L
    std::string checkpoint;     // neural detectors

    std::string label() const;
    static DetectorSpec parse(const std::string& text);  // e.g. "vd:0.05", "sbrnn:50:x.ckpt"
};

struct ExperimentSpec {
    std::string name = "experiment";
    ChannelKind kind = ChannelKind::Optical;
    ChannelParams fixed;            // per-sequence channel of every test set
    std::string sweep = "none";     // none|beam|memory|tau|eta|beta|c|mu|drift
    std::vector<double> grid;       // swept values ("none": single point)
    std::vector<DetectorSpec> detectors;
    int n_seq = 1000;
    int seq_len = 100;
    std::uint64_t seed = 1;
    TrellisConfig trellis;          // defaults M=99, N=100
    TimeVaryingConfig tv;           // drift sweeps walk nu over the grid

    std::string canonical_text() const;  // hashed into emitted CSVs
    void validate() const;
};

struct ResultRow {
    double sweep_value = 0.0;
    std::string detector;
    double err = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    long n_symbols = 0;
    double wall_s = 0.0;  // decode wall time; excluded from reproducibility
};

struct ResultTable {
    std::string spec_hash;
    std::vector<ResultRow> rows;
};

struct PositionProfileRow {
    double sweep_value = 0.0;
    std::string detector;
    int position = 0;
    double err = 0.0;
    long n = 0;
};

// Runs every detector in the roster on a fresh test set per grid point
// (fixed channel parameters, never the training distribution).
ResultTable run_experiment(const ExperimentSpec& spec);

// Drift sweep: the grid carries nu values; the VD decodes with the initial
// CSI only, the neural detectors use their checkpoints unchanged.
ResultTable run_timevarying(const ExperimentSpec& spec);

// Evaluates across transmission lengths and reports per-position profiles.
ResultTable run_length_generalization(const ExperimentSpec& spec, const std::vector<int>& lengths,
                                      std::vector<PositionProfileRow>* profile = nullptr);

void write_csv(const ResultTable& table, const std::string& path);
void write_profile_csv(const std::vector<PositionProfileRow>& rows, const std::string& path);

ExperimentSpec parse_experiment_spec(const std::string& path);

std::uint64_t fnv1a64(const std::string& text);

// Decodes one test set with one detector; exposed for the CLI `detect`
// subcommand and the acceptance suite. The VD takes each sequence's own
// stored parameters as its (possibly perturbed) CSI estimate, so perfect CSI
// on a time-varying set means the initial parameters.
struct DecodeOutput {
    std::vector<std::vector<int>> decisions;
    std::vector<std::vector<PmfEstimate>> pmfs;  // neural detectors only
    double wall_s = 0.0;
};
DecodeOutput decode_dataset(const Dataset& test, const DetectorSpec& det,
                            const TrellisConfig& trellis, std::uint64_t seed);

}  // namespace seqdet
