#include "seqdet/channel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace seqdet {

namespace {

// Regularized upper incomplete gamma Q(a, x): series for x < a+1,
// continued fraction otherwise.
double igamma_q(double a, double x) {
    if (x < 0.0 || a <= 0.0) throw std::invalid_argument("igamma_q: bad arguments");
    if (x == 0.0) return 1.0;
    const double lg = std::lgamma(a);
    if (x < a + 1.0) {
        double ap = a;
        double sum = 1.0 / a;
        double del = sum;
        for (int n = 0; n < 500; ++n) {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if (std::fabs(del) < std::fabs(sum) * 1e-16) break;
        }
        const double p = sum * std::exp(-x + a * std::log(x) - lg);
        return 1.0 - p;
    }
    // Lentz's method for the continued fraction
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 500; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-16) break;
    }
    return std::exp(-x + a * std::log(x) - lg) * h;
}

double std_normal_cdf(double z) {
    return 0.5 * std::erfc(-z * M_SQRT1_2);
}

// CDF of the inverse Gaussian with mean mu and shape c.
double inverse_gaussian_cdf(double t, double c, double mu) {
    if (t <= 0.0) return 0.0;
    const double s = std::sqrt(c / t);
    const double term1 = std_normal_cdf(s * (t / mu - 1.0));
    const double term2 = std::exp(2.0 * c / mu) * std_normal_cdf(-s * (t / mu + 1.0));
    return std::min(1.0, term1 + term2);
}

void check(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

std::string to_string(ChannelKind kind) {
    return kind == ChannelKind::Optical ? "optical" : "molecular";
}

ChannelKind channel_kind_from_string(const std::string& s) {
    if (s == "optical") return ChannelKind::Optical;
    if (s == "molecular") return ChannelKind::Molecular;
    throw std::invalid_argument("unknown channel kind: " + s);
}

int ChannelParams::samples_per_symbol() const {
    const double a = omega * tau;
    const double rounded = std::round(a);
    if (rounded < 1.0 || std::fabs(a - rounded) > 1e-6 * std::max(1.0, rounded)) {
        throw std::invalid_argument("omega*tau = " + std::to_string(a) +
                                    " is not a positive integer sample count");
    }
    return static_cast<int>(rounded);
}

void ChannelParams::validate() const {
    if (kind == ChannelKind::Optical) {
        check(alpha > 0.0, "optical channel requires alpha > 0");
        check(beta > 0.0, "optical channel requires beta > 0");
    } else {
        check(c > 0.0, "molecular channel requires c > 0");
        check(mu > 0.0, "molecular channel requires mu > 0");
    }
    check(eta >= 0.0, "eta must be >= 0");
    check(kappa > 0.0, "kappa must be > 0");
    check(omega > 0.0, "omega must be > 0");
    check(tau > 0.0, "tau must be > 0");
    check(m >= 2, "modulation order m must be >= 2");
    (void)samples_per_symbol();
}

SymbolSequence::SymbolSequence(std::vector<int> syms, int order) : symbols(std::move(syms)), m(order) {
    check(m >= 2, "modulation order m must be >= 2");
    for (int s : symbols) check(s >= 0 && s < m, "symbol index out of range for order m");
}

SymbolSequence SymbolSequence::random(std::size_t len, int m, Rng& rng) {
    std::vector<int> syms(len);
    for (auto& s : syms) s = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(m)));
    return SymbolSequence(std::move(syms), m);
}

double impulse_response(double t, const ChannelParams& params) {
    if (t <= 0.0) return 0.0;
    if (params.kind == ChannelKind::Optical) {
        const double log_density = -params.alpha * std::log(params.beta) +
                                   (params.alpha - 1.0) * std::log(t) - t / params.beta -
                                   std::lgamma(params.alpha);
        return params.kappa * std::exp(log_density);
    }
    const double d = t - params.mu;
    const double log_density = 0.5 * (std::log(params.c) - std::log(2.0 * M_PI) - 3.0 * std::log(t)) -
                               params.c * d * d / (2.0 * params.mu * params.mu * t);
    return params.kappa * std::exp(log_density);
}

double response_tail_mass(double t, const ChannelParams& params) {
    if (t <= 0.0) return 1.0;
    if (params.kind == ChannelKind::Optical) {
        return igamma_q(params.alpha, t / params.beta);
    }
    return 1.0 - inverse_gaussian_cdf(t, params.c, params.mu);
}

double DiscretizedResponse::riemann_mass(double omega) const {
    double s = 0.0;
    for (double v : lam) s += v;
    return s / omega;
}

DiscretizedResponse discretize_response(const ChannelParams& params, double eps_trunc, int max_taps) {
    params.validate();
    check(eps_trunc > 0.0 && eps_trunc < 1.0, "eps_trunc must be in (0, 1)");
    check(max_taps >= 0, "max_taps must be >= 0");

    DiscretizedResponse resp;
    resp.a = params.samples_per_symbol();

    int k_mem = 0;
    while (response_tail_mass((k_mem + 1) * params.tau, params) >= eps_trunc) {
        if (k_mem >= max_taps) {
            resp.tail_below_eps = false;
            break;
        }
        ++k_mem;
    }
    resp.k_mem = k_mem;

    resp.lam.resize(static_cast<std::size_t>(k_mem + 1) * resp.a);
    for (int k = 0; k <= k_mem; ++k) {
        for (int j = 1; j <= resp.a; ++j) {
            const double t = (j + static_cast<double>(k) * resp.a) / params.omega;
            resp.lam[static_cast<std::size_t>(k) * resp.a + (j - 1)] = impulse_response(t, params);
        }
    }
    return resp;
}

namespace {

// rate row for symbol k: eta + sum over taps i of amplitude(k-i)*row_i
void accumulate_rates(const SymbolSequence& seq, std::size_t k, const double* const* rows,
                      int max_tap, int a, double eta, std::vector<double>& rate) {
    std::fill(rate.begin(), rate.end(), eta);
    const int top = static_cast<int>(std::min<std::size_t>(k, static_cast<std::size_t>(max_tap)));
    for (int i = 0; i <= top; ++i) {
        const double amp = seq.amplitude(k - i);
        if (amp == 0.0) continue;
        const double* row = rows[i];
        for (int j = 0; j < a; ++j) rate[j] += amp * row[j];
    }
}

}  // namespace

std::vector<double> expected_rates(const SymbolSequence& seq, const ChannelParams& params,
                                   const DiscretizedResponse& resp) {
    params.validate();
    check(!seq.symbols.empty(), "expected_rates: empty symbol sequence");
    const int a = resp.a;
    const std::size_t K = seq.size();
    std::vector<const double*> rows(resp.k_mem + 1);
    for (int i = 0; i <= resp.k_mem; ++i) rows[i] = resp.row(i);
    std::vector<double> rates(K * a);
    std::vector<double> rate(a);
    for (std::size_t k = 0; k < K; ++k) {
        accumulate_rates(seq, k, rows.data(), resp.k_mem, a, params.eta, rate);
        std::copy(rate.begin(), rate.end(), rates.begin() + k * a);
    }
    return rates;
}

ReceivedSignal simulate(const SymbolSequence& seq, const ChannelParams& params,
                        const DiscretizedResponse& resp, Rng& rng) {
    params.validate();
    check(!seq.symbols.empty(), "simulate: empty symbol sequence");
    check(seq.m == params.m, "simulate: sequence modulation order differs from channel");
    const int a = resp.a;
    const std::size_t K = seq.size();

    const std::vector<double> rates = expected_rates(seq, params, resp);

    ReceivedSignal sig;
    sig.a = a;
    sig.num_symbols = K;
    sig.counts.resize(K * a);
    for (std::size_t i = 0; i < sig.counts.size(); ++i) {
        sig.counts[i] = static_cast<std::uint32_t>(rng.poisson(rates[i]));
    }
    return sig;
}

ReceivedSignal simulate(const SymbolSequence& seq, const ChannelParams& params, Rng& rng) {
    const int cap = seq.symbols.empty() ? 0 : static_cast<int>(seq.size()) - 1;
    const DiscretizedResponse resp = discretize_response(params, 1e-4, cap);
    return simulate(seq, params, resp, rng);
}

void TimeVaryingConfig::validate(const ChannelParams& initial) const {
    check(d_diff >= 0.0, "d_diff must be >= 0");
    check(beta_lo < beta_hi && eta_lo < eta_hi, "time-varying bounds must be non-empty intervals");
    const double resp0 = initial.kind == ChannelKind::Optical ? initial.beta : initial.mu;
    check(resp0 >= beta_lo && resp0 <= beta_hi, "initial response parameter outside walk bounds");
    check(initial.eta >= eta_lo && initial.eta <= eta_hi, "initial eta outside walk bounds");
}

TimeVaryingWalk time_varying_walk(const ChannelParams& params0, const TimeVaryingConfig& tv,
                                  std::size_t n, Rng& rng) {
    params0.validate();
    tv.validate(params0);
    check(n > 0, "time_varying_walk: need at least one symbol");
    const bool optical = params0.kind == ChannelKind::Optical;
    const double resp_param0 = optical ? params0.beta : params0.mu;
    const bool degenerate = tv.d_diff == 0.0 && tv.nu == 0.0;

    TimeVaryingWalk walk;
    walk.resp_param.resize(n);
    walk.eta.resize(n);
    walk.resp_param[0] = resp_param0;
    walk.eta[0] = params0.eta;
    for (std::size_t i = 1; i < n; ++i) {
        if (degenerate) {
            walk.resp_param[i] = walk.resp_param[i - 1];
            walk.eta[i] = walk.eta[i - 1];
        } else {
            const double nb = rng.normal();
            const double ne = rng.normal();
            walk.resp_param[i] =
                std::clamp(walk.resp_param[i - 1] + tv.d_diff * resp_param0 * nb + tv.nu * resp_param0,
                           tv.beta_lo, tv.beta_hi);
            walk.eta[i] = std::clamp(walk.eta[i - 1] + tv.d_diff * params0.eta * ne + tv.nu * params0.eta,
                                     tv.eta_lo, tv.eta_hi);
        }
    }
    return walk;
}

ReceivedSignal simulate_time_varying(const SymbolSequence& seq, const ChannelParams& params0,
                                     const TimeVaryingConfig& tv, Rng& rng) {
    params0.validate();
    check(!seq.symbols.empty(), "simulate_time_varying: empty symbol sequence");
    check(seq.m == params0.m, "simulate_time_varying: modulation order mismatch");

    const std::size_t K = seq.size();
    const int cap = static_cast<int>(K) - 1;
    // Tap truncation follows the initial parameters so the degenerate walk
    // reproduces the static simulator sample-for-sample.
    const DiscretizedResponse resp0 = discretize_response(params0, 1e-4, cap);
    const int a = resp0.a;
    const int max_tap = resp0.k_mem;

    const bool optical = params0.kind == ChannelKind::Optical;
    const TimeVaryingWalk walk = time_varying_walk(params0, tv, K, rng);

    // Tap i is evaluated with the parameter state of symbol interval i.
    const std::size_t n_rows = std::min<std::size_t>(K, static_cast<std::size_t>(max_tap) + 1);
    std::vector<std::vector<double>> rows(n_rows, std::vector<double>(a));
    for (std::size_t i = 0; i < n_rows; ++i) {
        ChannelParams pi = params0;
        if (optical) {
            pi.beta = walk.resp_param[i];
        } else {
            pi.mu = walk.resp_param[i];
        }
        for (int j = 1; j <= a; ++j) {
            const double t = (j + static_cast<double>(i) * a) / params0.omega;
            rows[i][j - 1] = impulse_response(t, pi);
        }
    }
    std::vector<const double*> row_ptrs(n_rows);
    for (std::size_t i = 0; i < n_rows; ++i) row_ptrs[i] = rows[i].data();

    ReceivedSignal sig;
    sig.a = a;
    sig.num_symbols = K;
    sig.counts.resize(K * a);
    std::vector<double> rate(a);
    for (std::size_t k = 0; k < K; ++k) {
        accumulate_rates(seq, k, row_ptrs.data(), static_cast<int>(n_rows) - 1, a, walk.eta[k], rate);
        for (int j = 0; j < a; ++j) {
            sig.counts[k * a + j] = static_cast<std::uint32_t>(rng.poisson(rate[j]));
        }
    }
    return sig;
}

namespace {

template <typename T>
T pick(const std::vector<T>& values, Rng& rng) {
    return values[rng.uniform_int(values.size())];
}

}  // namespace

ChannelParams sample_random_params(ChannelKind kind, Rng& rng) {
    ChannelParams p;
    p.kind = kind;
    if (kind == ChannelKind::Optical) {
        static const std::vector<double> etas = {1, 10, 20, 50, 100, 200, 500};
        static const std::vector<double> taus = {0.025, 0.05, 0.075, 0.1};
        p.alpha = 2.0;
        p.kappa = 10.0;
        p.omega = 2000.0;  // 2 GS/s in samples per microsecond
        p.beta = 0.15 + 0.01 * static_cast<double>(rng.uniform_int(21));
        p.eta = pick(etas, rng);
        p.tau = pick(taus, rng);
    } else {
        static const std::vector<double> mus = {5, 10, 15, 20, 25, 30, 35, 40, 45, 50, 55, 60, 65};
        static const std::vector<double> etas = {1,     50,    100,   500,   1000,  5000,
                                                 10000, 20000, 30000, 40000, 50000};
        static const std::vector<double> taus = {0.5, 1.0, 1.5, 2.0};
        p.kappa = 1e4;
        p.omega = 100.0;  // samples per second
        p.c = 1.0 + static_cast<double>(rng.uniform_int(30));
        p.mu = pick(mus, rng);
        p.eta = pick(etas, rng);
        p.tau = pick(taus, rng);
    }
    return p;
}

ChannelParams sample_params_continuous(const ChannelParams& base, const ParamRanges& r, Rng& rng) {
    ChannelParams p = base;
    if (base.kind == ChannelKind::Optical) {
        p.beta = rng.uniform(r.beta_lo, r.beta_hi);
    } else {
        p.mu = rng.uniform(r.beta_lo, r.beta_hi);
    }
    p.eta = rng.uniform(r.eta_lo, r.eta_hi);
    return p;
}

Dataset generate_dataset(const DatasetConfig& cfg) {
    check(cfg.n_sequences > 0, "generate_dataset: n_sequences must be > 0");
    check(cfg.seq_len > 0, "generate_dataset: seq_len must be > 0");
    check(cfg.m >= 2, "generate_dataset: m must be >= 2");

    Dataset ds;
    ds.kind = cfg.kind;
    ds.m = cfg.m;
    ds.sequences.resize(cfg.n_sequences);

#pragma omp parallel for schedule(dynamic, 16)
    for (long long idx = 0; idx < static_cast<long long>(cfg.n_sequences); ++idx) {
        Rng rng(cfg.seed, static_cast<std::uint64_t>(idx));
        ChannelParams params;
        if (cfg.randomize_params) {
            params = cfg.continuous_ranges
                         ? sample_params_continuous(cfg.fixed_params, cfg.ranges, rng)
                         : sample_random_params(cfg.kind, rng);
        } else {
            params = cfg.fixed_params;
        }
        params.m = cfg.m;
        DatasetSequence& out = ds.sequences[idx];
        out.params = params;
        out.symbols = SymbolSequence::random(static_cast<std::size_t>(cfg.seq_len), cfg.m, rng);
        out.signal = simulate(out.symbols, params, rng);
    }
    ds.omega = ds.sequences.front().params.omega;
    return ds;
}

// ---- dataset serialization ----

namespace {

constexpr char kDatasetMagic[4] = {'S', 'Q', 'D', 'S'};
constexpr std::uint32_t kDatasetVersion = 1;

template <typename T>
void write_pod(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void read_pod(std::istream& is, T& v) {
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
}

void write_params(std::ostream& os, const ChannelParams& p) {
    write_pod<std::uint8_t>(os, p.kind == ChannelKind::Optical ? 0 : 1);
    write_pod(os, p.alpha);
    write_pod(os, p.beta);
    write_pod(os, p.c);
    write_pod(os, p.mu);
    write_pod(os, p.eta);
    write_pod(os, p.kappa);
    write_pod(os, p.omega);
    write_pod(os, p.tau);
    write_pod<std::int32_t>(os, p.m);
}

ChannelParams read_params(std::istream& is) {
    ChannelParams p;
    std::uint8_t kind;
    std::int32_t m;
    read_pod(is, kind);
    read_pod(is, p.alpha);
    read_pod(is, p.beta);
    read_pod(is, p.c);
    read_pod(is, p.mu);
    read_pod(is, p.eta);
    read_pod(is, p.kappa);
    read_pod(is, p.omega);
    read_pod(is, p.tau);
    read_pod(is, m);
    p.kind = kind == 0 ? ChannelKind::Optical : ChannelKind::Molecular;
    p.m = m;
    return p;
}

[[noreturn]] void io_fail(const std::string& what, const std::string& path) {
    throw std::runtime_error(what + ": " + path);
}

}  // namespace

void save_dataset(const Dataset& ds, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) io_fail("cannot open dataset file for writing", path);
    os.write(kDatasetMagic, 4);
    write_pod(os, kDatasetVersion);
    write_pod<std::uint32_t>(os, 0x01020304u);  // byte-order marker
    write_pod<std::uint8_t>(os, ds.kind == ChannelKind::Optical ? 0 : 1);
    write_pod<std::uint16_t>(os, static_cast<std::uint16_t>(ds.m));
    write_pod(os, ds.omega);
    write_pod<std::uint64_t>(os, ds.sequences.size());
    for (const auto& s : ds.sequences) {
        write_params(os, s.params);
        write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(s.symbols.size()));
        write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(s.signal.a));
        for (int sym : s.symbols.symbols) write_pod<std::uint8_t>(os, static_cast<std::uint8_t>(sym));
        os.write(reinterpret_cast<const char*>(s.signal.counts.data()),
                 static_cast<std::streamsize>(s.signal.counts.size() * sizeof(std::uint32_t)));
    }
    if (!os) io_fail("write error on dataset file", path);
}

Dataset load_dataset(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) io_fail("cannot open dataset file", path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kDatasetMagic, 4) != 0) io_fail("not a dataset file", path);
    std::uint32_t version, bom;
    read_pod(is, version);
    read_pod(is, bom);
    if (version != kDatasetVersion) io_fail("unsupported dataset version", path);
    if (bom != 0x01020304u) io_fail("dataset byte order mismatch", path);

    Dataset ds;
    std::uint8_t kind;
    std::uint16_t m;
    std::uint64_t n;
    read_pod(is, kind);
    read_pod(is, m);
    read_pod(is, ds.omega);
    read_pod(is, n);
    ds.kind = kind == 0 ? ChannelKind::Optical : ChannelKind::Molecular;
    ds.m = m;
    ds.sequences.resize(n);
    for (auto& s : ds.sequences) {
        s.params = read_params(is);
        std::uint32_t len, a;
        read_pod(is, len);
        read_pod(is, a);
        std::vector<int> syms(len);
        for (auto& sym : syms) {
            std::uint8_t b;
            read_pod(is, b);
            sym = b;
        }
        s.symbols = SymbolSequence(std::move(syms), ds.m);
        s.signal.a = static_cast<int>(a);
        s.signal.num_symbols = len;
        s.signal.counts.resize(static_cast<std::size_t>(len) * a);
        is.read(reinterpret_cast<char*>(s.signal.counts.data()),
                static_cast<std::streamsize>(s.signal.counts.size() * sizeof(std::uint32_t)));
        if (!is) io_fail("truncated dataset file", path);
    }
    return ds;
}

void export_dataset_csv(const Dataset& ds, const std::string& path) {
    std::ofstream os(path);
    if (!os) io_fail("cannot open CSV file for writing", path);
    os << "seq_id,k,kind,alpha,beta,c,mu,eta,kappa,omega,tau,m,symbol";
    int max_a = 0;
    for (const auto& s : ds.sequences) max_a = std::max(max_a, s.signal.a);
    for (int j = 1; j <= max_a; ++j) os << ",y" << j;
    os << "\n";
    for (std::size_t i = 0; i < ds.sequences.size(); ++i) {
        const auto& s = ds.sequences[i];
        const auto& p = s.params;
        for (std::size_t k = 0; k < s.symbols.size(); ++k) {
            os << i << ',' << k << ',' << to_string(p.kind) << ',' << p.alpha << ',' << p.beta << ','
               << p.c << ',' << p.mu << ',' << p.eta << ',' << p.kappa << ',' << p.omega << ','
               << p.tau << ',' << p.m << ',' << s.symbols.symbols[k];
            for (int j = 1; j <= s.signal.a; ++j) os << ',' << s.signal.at(k, j);
            os << "\n";
        }
    }
    if (!os) io_fail("write error on CSV file", path);
}

}  // namespace seqdet
