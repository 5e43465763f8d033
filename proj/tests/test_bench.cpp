#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "seqdet/bench.hpp"

using namespace seqdet;

namespace {

ExperimentSpec tiny_vd_spec() {
    ExperimentSpec spec;
    spec.name = "tiny";
    spec.kind = ChannelKind::Optical;
    spec.fixed.kind = ChannelKind::Optical;
    spec.fixed.alpha = 2.0;
    spec.fixed.beta = 0.2;
    spec.fixed.eta = 1.0;
    spec.fixed.kappa = 8.0;
    spec.fixed.omega = 200.0;
    spec.fixed.tau = 0.025;
    spec.sweep = "none";
    spec.grid = {0.0};
    spec.detectors = {DetectorSpec{DetectorSpec::Kind::VD, 0.0, 50, ""}};
    spec.n_seq = 20;
    spec.seq_len = 15;
    spec.seed = 5;
    spec.trellis.memory = 4;
    spec.trellis.beam_width = 8;
    spec.trellis.m = 2;
    return spec;
}

}  // namespace

TEST_CASE("degenerate grid with one detector yields a single row") {
    const ResultTable t = run_experiment(tiny_vd_spec());
    REQUIRE(t.rows.size() == 1);
    const ResultRow& r = t.rows[0];
    CHECK(r.detector == "vd_0pct");
    CHECK(r.n_symbols == 20 * 15);
    CHECK(r.err >= 0.0);
    CHECK(r.err < 0.5);
    CHECK(r.ci_lo <= r.err);
    CHECK(r.ci_hi >= r.err);
}

TEST_CASE("results are reproducible from (spec, seed), wall time aside") {
    ExperimentSpec spec = tiny_vd_spec();
    spec.detectors.push_back(DetectorSpec{DetectorSpec::Kind::VD, 0.05, 50, ""});
    spec.sweep = "eta";
    spec.grid = {1.0, 5.0};
    const ResultTable a = run_experiment(spec);
    const ResultTable b = run_experiment(spec);
    REQUIRE(a.rows.size() == b.rows.size());
    CHECK(a.spec_hash == b.spec_hash);
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        CHECK(a.rows[i].sweep_value == b.rows[i].sweep_value);
        CHECK(a.rows[i].detector == b.rows[i].detector);
        CHECK(a.rows[i].err == b.rows[i].err);
        CHECK(a.rows[i].ci_lo == b.rows[i].ci_lo);
        CHECK(a.rows[i].ci_hi == b.rows[i].ci_hi);
        CHECK(a.rows[i].n_symbols == b.rows[i].n_symbols);
    }
}

TEST_CASE("noisier channels decode worse across the eta sweep") {
    ExperimentSpec spec = tiny_vd_spec();
    spec.sweep = "eta";
    spec.grid = {0.5, 40.0};
    spec.n_seq = 60;
    const ResultTable t = run_experiment(spec);
    REQUIRE(t.rows.size() == 2);
    CHECK(t.rows[0].err < t.rows[1].err);
}

TEST_CASE("missing checkpoints are rejected naming the detector") {
    ExperimentSpec spec = tiny_vd_spec();
    spec.detectors = {DetectorSpec{DetectorSpec::Kind::SBRNN, 0.0, 10, "no_such_file.ckpt"}};
    CHECK_THROWS_WITH_AS(run_experiment(spec),
                         doctest::Contains("sbrnn_L10"), std::runtime_error);
}

TEST_CASE("experiment spec validation") {
    ExperimentSpec spec = tiny_vd_spec();
    spec.grid.clear();
    CHECK_THROWS(run_experiment(spec));
    spec = tiny_vd_spec();
    spec.detectors = {DetectorSpec{DetectorSpec::Kind::RNN, 0.0, 0, ""}};
    CHECK_THROWS(spec.validate());
}

TEST_CASE("detector spec strings parse") {
    const DetectorSpec vd = DetectorSpec::parse("vd:0.05");
    CHECK(vd.kind == DetectorSpec::Kind::VD);
    CHECK(vd.csi_error == 0.05);
    CHECK(vd.label() == "vd_5pct");
    const DetectorSpec sb = DetectorSpec::parse("sbrnn:50:model.ckpt");
    CHECK(sb.kind == DetectorSpec::Kind::SBRNN);
    CHECK(sb.window == 50);
    CHECK(sb.checkpoint == "model.ckpt");
    const DetectorSpec rn = DetectorSpec::parse("rnn:model.ckpt");
    CHECK(rn.kind == DetectorSpec::Kind::RNN);
    CHECK_THROWS(DetectorSpec::parse("sbrnn:50"));
    CHECK_THROWS(DetectorSpec::parse("huh"));
}

TEST_CASE("experiment spec files parse with per-kind defaults") {
    const std::string path = "tiny_spec.cfg";
    {
        std::ofstream os(path);
        os << "name = table2\n"
           << "kind = molecular\n"
           << "sweep = beam\n"
           << "grid = 10,100\n"
           << "n_seq = 7\n"
           << "seq_len = 9\n"
           << "seed = 3\n"
           << "eta = 100\n"
           << "memory = 99\n"
           << "detectors = vd:0,vd:0.025\n";
    }
    const ExperimentSpec spec = parse_experiment_spec(path);
    std::remove(path.c_str());
    CHECK(spec.name == "table2");
    CHECK(spec.kind == ChannelKind::Molecular);
    CHECK(spec.fixed.kappa == 1e4);   // molecular default
    CHECK(spec.fixed.omega == 100.0);
    CHECK(spec.fixed.c == 8.0);
    CHECK(spec.fixed.eta == 100.0);
    CHECK(spec.sweep == "beam");
    REQUIRE(spec.grid.size() == 2);
    CHECK(spec.grid[1] == 100.0);
    REQUIRE(spec.detectors.size() == 2);
    CHECK(spec.detectors[1].csi_error == 0.025);
    CHECK(spec.trellis.memory == 99);
}

TEST_CASE("CSV output carries the spec hash and parses back") {
    const ResultTable t = run_experiment(tiny_vd_spec());
    write_csv(t, "tiny_results.csv");
    std::ifstream is("tiny_results.csv");
    std::string line;
    std::getline(is, line);
    CHECK(line.find("# spec_hash=" + t.spec_hash) == 0);
    std::getline(is, line);
    CHECK(line == "sweep_value,detector,err,ci_lo,ci_hi,n_symbols,wall_s");
    std::getline(is, line);
    CHECK(line.find("vd_0pct") != std::string::npos);
    is.close();
    std::remove("tiny_results.csv");
}

TEST_CASE("time-varying runs keep the initial CSI for the VD") {
    ExperimentSpec spec = tiny_vd_spec();
    spec.sweep = "drift";
    spec.grid = {0.0};
    spec.n_seq = 10;
    spec.seq_len = 12;
    spec.tv.d_diff = 0.0;
    spec.tv.beta_lo = 0.15;
    spec.tv.beta_hi = 0.35;
    spec.tv.eta_lo = 0.5;
    spec.tv.eta_hi = 200.0;
    const ResultTable tv = run_timevarying(spec);
    REQUIRE(tv.rows.size() == 1);
    // nu = d = 0: static channel, so the VD with initial CSI behaves normally
    CHECK(tv.rows[0].err < 0.5);
}
