#pragma once

// Implementation of the declarations in net.hpp. Template-heavy: everything
// is instantiated for float (training/inference) and double (gradient checks).

#include <numeric>
#include <stdexcept>

namespace seqdet::nn {

// ---- descriptor ----

inline void NetDescriptor::validate() const {
    if (layers < 1) throw std::invalid_argument("NetDescriptor: layers must be >= 1");
    if (hidden < 1) throw std::invalid_argument("NetDescriptor: hidden must be >= 1");
    if (input_dim < 1) throw std::invalid_argument("NetDescriptor: input_dim must be >= 1");
    if (classes < 2) throw std::invalid_argument("NetDescriptor: classes must be >= 2");
    if (kind == NetKind::Bidirectional && window_max < 1) {
        throw std::invalid_argument("NetDescriptor: bidirectional nets need window_max >= 1");
    }
}

inline int NetDescriptor::layer_input_dim(int layer) const {
    if (layer == 0) return input_dim;
    if (kind == NetKind::Bidirectional) return 2 * hidden;
    return hidden;
}

inline int NetDescriptor::top_output_dim() const {
    if (kind == NetKind::Bidirectional) return 2 * hidden;
    return hidden;
}

struct TensorShape {
    std::string name;
    long rows;
    long cols;
};

inline std::vector<TensorShape> shape_table(const NetDescriptor& desc) {
    desc.validate();
    std::vector<TensorShape> out;
    if (desc.kind == NetKind::Dense) {
        for (int l = 0; l < desc.layers; ++l) {
            const long in = l == 0 ? desc.input_dim : desc.hidden;
            out.push_back({"fc" + std::to_string(l) + ".W", desc.hidden, in});
            out.push_back({"fc" + std::to_string(l) + ".b", desc.hidden, 1});
        }
        out.push_back({"head.W", desc.classes, desc.hidden});
        out.push_back({"head.b", desc.classes, 1});
        return out;
    }
    const int g = gates_per_cell(desc.cell);
    const int dirs = desc.kind == NetKind::Bidirectional ? 2 : 1;
    for (int l = 0; l < desc.layers; ++l) {
        const long in = desc.layer_input_dim(l);
        for (int d = 0; d < dirs; ++d) {
            const std::string prefix = "l" + std::to_string(l) + (d == 0 ? ".fwd." : ".bwd.");
            out.push_back({prefix + "W", static_cast<long>(g) * desc.hidden, in});
            out.push_back({prefix + "U", static_cast<long>(g) * desc.hidden, desc.hidden});
            out.push_back({prefix + "b", static_cast<long>(g) * desc.hidden, 1});
        }
    }
    out.push_back({"head.W", desc.classes, desc.top_output_dim()});
    out.push_back({"head.b", desc.classes, 1});
    return out;
}

// ---- params ----

template <typename T>
NetworkParams<T> NetworkParams<T>::init(const NetDescriptor& desc, Rng& rng) {
    NetworkParams<T> p;
    p.desc = desc;
    for (const auto& ts : shape_table(desc)) {
        Mat<T> t(ts.rows, ts.cols);
        const bool is_bias = ts.name.ends_with(".b");
        if (is_bias) {
            t.setZero();
            if (desc.cell == CellKind::Lstm && ts.name.starts_with("l")) {
                // forget-gate block gets bias 1 (gate order i, f, g, o)
                t.block(desc.hidden, 0, desc.hidden, 1).setConstant(T(1));
            }
        } else {
            const double s = 1.0 / std::sqrt(static_cast<double>(ts.cols));
            for (long r = 0; r < ts.rows; ++r) {
                for (long c = 0; c < ts.cols; ++c) {
                    t(r, c) = static_cast<T>(rng.uniform(-s, s));
                }
            }
        }
        p.tensors.emplace(ts.name, std::move(t));
    }
    return p;
}

template <typename T>
void NetworkParams<T>::validate() const {
    const auto table = shape_table(desc);
    if (table.size() != tensors.size()) {
        throw std::invalid_argument("NetworkParams: expected " + std::to_string(table.size()) +
                                    " tensors, found " + std::to_string(tensors.size()));
    }
    for (const auto& ts : table) {
        auto it = tensors.find(ts.name);
        if (it == tensors.end()) {
            throw std::invalid_argument("NetworkParams: missing tensor " + ts.name);
        }
        check_shape(ts.name, it->second, ts.rows, ts.cols);
    }
}

template <typename T>
Mat<T>& NetworkParams<T>::at(const std::string& name) {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw std::invalid_argument("NetworkParams: no tensor " + name);
    return it->second;
}

template <typename T>
const Mat<T>& NetworkParams<T>::at(const std::string& name) const {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw std::invalid_argument("NetworkParams: no tensor " + name);
    return it->second;
}

// ---- softmax / loss ----

template <typename T>
void softmax_columns(Mat<T>& logits) {
    for (long c = 0; c < logits.cols(); ++c) {
        auto col = logits.col(c);
        const T mx = col.maxCoeff();
        col = (col.array() - mx).exp();
        col /= col.sum();
    }
}

template <typename T>
std::pair<double, Vec<T>> softmax_cross_entropy(const Vec<T>& logits, const Vec<T>& p_true) {
    if (logits.size() != p_true.size() || logits.size() < 2) {
        throw std::invalid_argument("softmax_cross_entropy: logits and target sizes differ");
    }
    const T mx = logits.maxCoeff();
    Vec<T> shifted = logits.array() - mx;
    Vec<T> e = shifted.array().exp();
    const T z = e.sum();
    const T logz = std::log(z);
    double loss = 0.0;
    for (long i = 0; i < logits.size(); ++i) {
        if (p_true[i] != T(0)) {
            loss += static_cast<double>(p_true[i]) * static_cast<double>(logz - shifted[i]);
        }
    }
    Vec<T> grad = e / z - p_true;
    return {loss, grad};
}

// ---- dense ----

template <typename T>
Mat<T> dense_forward(const Mat<T>& x, const Mat<T>& W, const Mat<T>& b, Activation act,
                     Mat<T>* preact) {
    if (W.cols() != x.rows() || b.rows() != W.rows() || b.cols() != 1) {
        throw std::invalid_argument(
            "dense_forward: W is (" + std::to_string(W.rows()) + "," + std::to_string(W.cols()) +
            "), x is (" + std::to_string(x.rows()) + "," + std::to_string(x.cols()) + "), b is (" +
            std::to_string(b.rows()) + "," + std::to_string(b.cols()) + ")");
    }
    Mat<T> a = (W * x).colwise() + b.col(0);
    if (preact) *preact = a;
    if (act == Activation::Relu) a = a.cwiseMax(T(0));
    return a;
}

// ---- cells ----

// vectorized logistic; equal to 1/(1+exp(-x)) and stable on both tails
template <typename T, typename Block>
inline void sigmoid_inplace(Block block) {
    block = (T(0.5) * ((T(0.5) * block.array()).tanh() + T(1))).matrix();
}

template <typename T>
void cell_step_lstm(const CellWeights<T>& w, const Mat<T>& x, const Mat<T>& h_prev,
                    const Mat<T>& c_prev, Mat<T>& h_out, Mat<T>& c_out, Mat<T>* gates,
                    Mat<T>* tanh_c_out) {
    const long H = w.U->cols();
    Mat<T> a = *w.W * x;
    a.noalias() += *w.U * h_prev;
    a.colwise() += w.b->col(0);
    auto gi = a.topRows(H);
    auto gf = a.middleRows(H, H);
    auto gg = a.middleRows(2 * H, H);
    auto go = a.bottomRows(H);
    sigmoid_inplace<T>(gi);
    sigmoid_inplace<T>(gf);
    gg = gg.array().tanh();
    sigmoid_inplace<T>(go);
    c_out = gf.cwiseProduct(c_prev) + gi.cwiseProduct(gg);
    Mat<T> tc = c_out.array().tanh();
    h_out = go.cwiseProduct(tc);
    if (gates) *gates = std::move(a);
    if (tanh_c_out) *tanh_c_out = std::move(tc);
}

template <typename T>
void cell_step_gru(const CellWeights<T>& w, const Mat<T>& x, const Mat<T>& h_prev, Mat<T>& h_out,
                   Mat<T>* gates) {
    const long H = w.U->cols();
    // z, r from the full pre-activations; the candidate sees r (.) h_prev
    Mat<T> a = (*w.W * x).colwise() + w.b->col(0);
    a.topRows(2 * H).noalias() += w.U->topRows(2 * H) * h_prev;
    auto gz = a.topRows(H);
    auto gr = a.middleRows(H, H);
    sigmoid_inplace<T>(gz);
    sigmoid_inplace<T>(gr);
    Mat<T> rh = gr.cwiseProduct(h_prev);
    a.bottomRows(H).noalias() += w.U->bottomRows(H) * rh;
    a.bottomRows(H) = a.bottomRows(H).array().tanh();
    h_out = gz.cwiseProduct(h_prev) + (Mat<T>::Ones(H, x.cols()) - gz).cwiseProduct(a.bottomRows(H));
    if (gates) *gates = std::move(a);
}

template <typename T>
void cell_step_vanilla(const CellWeights<T>& w, const Mat<T>& x, const Mat<T>& h_prev,
                       Mat<T>& h_out) {
    Mat<T> a = *w.W * x;
    a.noalias() += *w.U * h_prev;
    a.colwise() += w.b->col(0);
    h_out = a.array().tanh();
}

template <typename T>
void cell_step(CellKind kind, const CellWeights<T>& w, const Mat<T>& x, const Mat<T>& h_prev,
               const Mat<T>& c_prev, Mat<T>& h_out, Mat<T>& c_out, Mat<T>* gates) {
    const long H = w.U->cols();
    const long g = gates_per_cell(kind);
    if (w.W->rows() != g * H || w.W->cols() != x.rows() || h_prev.rows() != H ||
        h_prev.cols() != x.cols()) {
        throw std::invalid_argument(
            "cell_step: weight/input shapes disagree (W " + std::to_string(w.W->rows()) + "x" +
            std::to_string(w.W->cols()) + ", x " + std::to_string(x.rows()) + "x" +
            std::to_string(x.cols()) + ", h " + std::to_string(h_prev.rows()) + "x" +
            std::to_string(h_prev.cols()) + ")");
    }
    switch (kind) {
        case CellKind::Lstm:
            cell_step_lstm(w, x, h_prev, c_prev, h_out, c_out, gates, static_cast<Mat<T>*>(nullptr));
            break;
        case CellKind::Gru:
            cell_step_gru(w, x, h_prev, h_out, gates);
            break;
        case CellKind::Vanilla:
            cell_step_vanilla(w, x, h_prev, h_out);
            break;
    }
}

// ---- packed batches ----

template <typename T>
PackedBatch<T> PackedBatch<T>::from_sequences(const std::vector<std::vector<Vec<T>>>& seqs,
                                              std::vector<int>* order) {
    if (seqs.empty()) throw std::invalid_argument("PackedBatch: empty batch");
    std::vector<int> idx(seqs.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
        return seqs[a].size() > seqs[b].size();
    });
    PackedBatch<T> b;
    b.lengths.reserve(seqs.size());
    for (int i : idx) {
        if (seqs[i].empty()) throw std::invalid_argument("PackedBatch: empty sequence in batch");
        b.lengths.push_back(static_cast<int>(seqs[i].size()));
    }
    const int T_max = b.lengths.front();
    const long dim = seqs[idx[0]][0].size();
    b.x.resize(T_max);
    b.n_active.resize(T_max);
    for (int t = 0; t < T_max; ++t) {
        int n = 0;
        while (n < static_cast<int>(b.lengths.size()) && b.lengths[n] > t) ++n;
        b.n_active[t] = n;
        Mat<T>& xt = b.x[t];
        xt.resize(dim, n);
        for (int c = 0; c < n; ++c) {
            const auto& v = seqs[idx[c]][t];
            if (v.size() != dim) {
                throw std::invalid_argument("PackedBatch: inconsistent feature dimensions");
            }
            xt.col(c) = v;
        }
    }
    if (order) *order = idx;
    return b;
}

namespace detail {

// Scan-order time index for a direction: forward walks 0..T-1, the reverse
// direction walks T-1..0 so state always flows along increasing scan step.
inline int scan_time(int dir, int s, int T) { return dir == 0 ? s : T - 1 - s; }

// Fit a state matrix carried from a neighbouring scan step to `width`
// columns: shared columns copy over, fresh columns start at zero.
template <typename T>
Mat<T> fit_state(const Mat<T>& state, long rows, int width) {
    Mat<T> out = Mat<T>::Zero(rows, width);
    const int shared = std::min<int>(width, static_cast<int>(state.cols()));
    if (shared > 0) out.leftCols(shared) = state.leftCols(shared);
    return out;
}

template <typename T>
CellWeights<T> layer_weights(const NetworkParams<T>& p, int layer, int dir) {
    const std::string prefix = "l" + std::to_string(layer) + (dir == 0 ? ".fwd." : ".bwd.");
    return CellWeights<T>{&p.at(prefix + "W"), &p.at(prefix + "U"), &p.at(prefix + "b")};
}

}  // namespace detail

template <typename T>
std::vector<Mat<T>> net_forward(const NetworkParams<T>& params, const PackedBatch<T>& batch,
                                Tape<T>* tape) {
    const NetDescriptor& desc = params.desc;
    const int T_max = batch.steps();
    if (T_max == 0) throw std::invalid_argument("net_forward: empty batch window");
    if (batch.x[0].rows() != desc.input_dim) {
        throw std::invalid_argument("net_forward: feature dimension " +
                                    std::to_string(batch.x[0].rows()) +
                                    " does not match net input " + std::to_string(desc.input_dim));
    }
    for (int t = 1; t < T_max; ++t) {
        if (batch.n_active[t] > batch.n_active[t - 1]) {
            throw std::invalid_argument("net_forward: batch not sorted by length");
        }
    }

    std::vector<Mat<T>> logits(T_max);
    const Mat<T>& headW = params.at("head.W");
    const Mat<T>& headb = params.at("head.b");

    if (desc.kind == NetKind::Dense) {
        if (tape) {
            tape->dense_pre.assign(desc.layers, std::vector<Mat<T>>(T_max));
            tape->dense_out.assign(desc.layers, std::vector<Mat<T>>(T_max));
        }
        for (int t = 0; t < T_max; ++t) {
            Mat<T> cur = batch.x[t];
            for (int l = 0; l < desc.layers; ++l) {
                Mat<T> pre;
                cur = dense_forward(cur, params.at("fc" + std::to_string(l) + ".W"),
                                    params.at("fc" + std::to_string(l) + ".b"), Activation::Relu,
                                    tape ? &pre : nullptr);
                if (tape) {
                    tape->dense_pre[l][t] = std::move(pre);
                    tape->dense_out[l][t] = cur;
                }
            }
            logits[t] = dense_forward(cur, headW, headb, Activation::None);
        }
        return logits;
    }

    const bool bidir = desc.kind == NetKind::Bidirectional;
    const int dirs = bidir ? 2 : 1;
    const long H = desc.hidden;

    if (tape) {
        tape->rec.assign(desc.layers, std::vector<std::vector<typename Tape<T>::StepRec>>(
                                          dirs, std::vector<typename Tape<T>::StepRec>(T_max)));
        tape->layer_in.assign(desc.layers + 1, std::vector<Mat<T>>());
    }

    // per-step input to the current layer; starts as the raw batch
    std::vector<Mat<T>> cur_in = batch.x;
    for (int l = 0; l < desc.layers; ++l) {
        if (tape && l > 0) tape->layer_in[l] = cur_in;
        std::vector<Mat<T>> next_in(T_max);
        for (int t = 0; t < T_max; ++t) {
            next_in[t].resize(static_cast<long>(dirs) * H, batch.n_active[t]);
        }
        for (int d = 0; d < dirs; ++d) {
            const CellWeights<T> w = detail::layer_weights(params, l, d);
            Mat<T> h_state(H, 0), c_state(H, 0);
            for (int s = 0; s < T_max; ++s) {
                const int t = detail::scan_time(d, s, T_max);
                const int width = batch.n_active[t];
                Mat<T> h_prev = detail::fit_state(h_state, H, width);
                Mat<T> c_prev = desc.cell == CellKind::Lstm ? detail::fit_state(c_state, H, width)
                                                            : Mat<T>();
                Mat<T> h_out, c_out, gates, tanh_c;
                if (desc.cell == CellKind::Lstm) {
                    cell_step_lstm(w, cur_in[t], h_prev, c_prev, h_out, c_out,
                                   tape ? &gates : nullptr, tape ? &tanh_c : nullptr);
                } else if (desc.cell == CellKind::Gru) {
                    cell_step_gru(w, cur_in[t], h_prev, h_out, tape ? &gates : nullptr);
                } else {
                    cell_step_vanilla(w, cur_in[t], h_prev, h_out);
                }
                next_in[t].middleRows(static_cast<long>(d) * H, H) = h_out;
                if (tape) {
                    auto& rec = tape->rec[l][d][s];
                    rec.h = h_out;
                    if (desc.cell == CellKind::Lstm) {
                        rec.gates = std::move(gates);
                        rec.c = c_out;
                        rec.tanh_c = std::move(tanh_c);
                    } else if (desc.cell == CellKind::Gru) {
                        rec.gates = std::move(gates);
                    }
                }
                h_state = std::move(h_out);
                if (desc.cell == CellKind::Lstm) c_state = std::move(c_out);
            }
        }
        cur_in = std::move(next_in);
    }
    if (tape) tape->layer_in[desc.layers] = cur_in;

    for (int t = 0; t < T_max; ++t) {
        logits[t] = dense_forward(cur_in[t], headW, headb, Activation::None);
    }
    return logits;
}

template <typename T>
double batch_cross_entropy(const std::vector<Mat<T>>& logits, const PackedBatch<T>& batch,
                           const std::vector<std::vector<int>>& labels,
                           std::vector<Mat<T>>* dlogits) {
    const int T_max = batch.steps();
    const long total = batch.total_positions();
    if (static_cast<int>(labels.size()) != batch.width()) {
        throw std::invalid_argument("batch_cross_entropy: label count differs from batch width");
    }
    double loss = 0.0;
    if (dlogits) dlogits->assign(T_max, Mat<T>());
    for (int t = 0; t < T_max; ++t) {
        const Mat<T>& lg = logits[t];
        Mat<T> p = lg;
        softmax_columns(p);
        Mat<T>* dl = dlogits ? &(*dlogits)[t] : nullptr;
        if (dl) *dl = p;
        for (long c = 0; c < lg.cols(); ++c) {
            const int cls = labels[c].at(t);
            const T mx = lg.col(c).maxCoeff();
            const T logz = std::log((lg.col(c).array() - mx).exp().sum()) + mx;
            loss += static_cast<double>(logz - lg(cls, c));
            if (dl) (*dl)(cls, c) -= T(1);
        }
        if (dl) *dl /= static_cast<T>(total);
    }
    return loss / static_cast<double>(total);
}

template <typename T>
TensorMap<T> zero_like(const TensorMap<T>& params) {
    TensorMap<T> g;
    for (const auto& [name, t] : params) g.emplace(name, Mat<T>::Zero(t.rows(), t.cols()));
    return g;
}

namespace detail {

template <typename T>
struct CellBackScratch {
    Mat<T> dA;
};

// Backward through one scan step of one cell. dh arrives already summed
// (output grad + recurrent carry); returns grads wrt inputs and carried state.
template <typename T>
void cell_backward_step(CellKind kind, const CellWeights<T>& w, const Mat<T>& x,
                        const Mat<T>& h_prev, const Mat<T>& c_prev,
                        const typename Tape<T>::StepRec& rec, const Mat<T>& dh, Mat<T>& dc,
                        Mat<T>& dx, Mat<T>& dh_prev, Mat<T>& gW, Mat<T>& gU, Mat<T>& gb) {
    const long H = w.U->cols();
    if (kind == CellKind::Lstm) {
        auto gi = rec.gates.topRows(H);
        auto gf = rec.gates.middleRows(H, H);
        auto gg = rec.gates.middleRows(2 * H, H);
        auto go = rec.gates.bottomRows(H);
        Mat<T> d_o = dh.cwiseProduct(rec.tanh_c);
        Mat<T> dct = dc + dh.cwiseProduct(go).cwiseProduct(
                              (Mat<T>::Ones(H, dh.cols()) - rec.tanh_c.cwiseProduct(rec.tanh_c)));
        Mat<T> dA(4 * H, dh.cols());
        dA.topRows(H) = dct.cwiseProduct(gg).cwiseProduct(gi).cwiseProduct(
            Mat<T>::Ones(H, dh.cols()) - gi);
        dA.middleRows(H, H) = dct.cwiseProduct(c_prev).cwiseProduct(gf).cwiseProduct(
            Mat<T>::Ones(H, dh.cols()) - gf);
        dA.middleRows(2 * H, H) =
            dct.cwiseProduct(gi).cwiseProduct(Mat<T>::Ones(H, dh.cols()) - gg.cwiseProduct(gg));
        dA.bottomRows(H) =
            d_o.cwiseProduct(go).cwiseProduct(Mat<T>::Ones(H, dh.cols()) - go);
        gW.noalias() += dA * x.transpose();
        gU.noalias() += dA * h_prev.transpose();
        gb.col(0).noalias() += dA.rowwise().sum();
        dx.noalias() = w.W->transpose() * dA;
        dh_prev.noalias() = w.U->transpose() * dA;
        dc = dct.cwiseProduct(gf);  // carried to the previous scan step
        return;
    }
    if (kind == CellKind::Gru) {
        auto gz = rec.gates.topRows(H);
        auto gr = rec.gates.middleRows(H, H);
        auto gn = rec.gates.bottomRows(H);
        const Mat<T> ones = Mat<T>::Ones(H, dh.cols());
        Mat<T> dz = dh.cwiseProduct(h_prev - gn);
        Mat<T> dn = dh.cwiseProduct(ones - gz);
        Mat<T> d_an = dn.cwiseProduct(ones - gn.cwiseProduct(gn));
        Mat<T> rh = gr.cwiseProduct(h_prev);
        Mat<T> d_rh = w.U->bottomRows(H).transpose() * d_an;
        Mat<T> dr = d_rh.cwiseProduct(h_prev);
        Mat<T> d_az = dz.cwiseProduct(gz).cwiseProduct(ones - gz);
        Mat<T> d_ar = dr.cwiseProduct(gr).cwiseProduct(ones - gr);
        Mat<T> dA(3 * H, dh.cols());
        dA.topRows(H) = d_az;
        dA.middleRows(H, H) = d_ar;
        dA.bottomRows(H) = d_an;
        gW.noalias() += dA * x.transpose();
        gU.topRows(2 * H).noalias() += dA.topRows(2 * H) * h_prev.transpose();
        gU.bottomRows(H).noalias() += d_an * rh.transpose();
        gb.col(0).noalias() += dA.rowwise().sum();
        dx.noalias() = w.W->transpose() * dA;
        dh_prev.noalias() = w.U->topRows(2 * H).transpose() * dA.topRows(2 * H);
        dh_prev += d_rh.cwiseProduct(gr) + dh.cwiseProduct(gz);
        return;
    }
    // vanilla: h = tanh(Wx + Uh + b)
    Mat<T> d_a = dh.cwiseProduct(Mat<T>::Ones(rec.h.rows(), dh.cols()) - rec.h.cwiseProduct(rec.h));
    gW.noalias() += d_a * x.transpose();
    gU.noalias() += d_a * h_prev.transpose();
    gb.col(0).noalias() += d_a.rowwise().sum();
    dx.noalias() = w.W->transpose() * d_a;
    dh_prev.noalias() = w.U->transpose() * d_a;
}

}  // namespace detail

template <typename T>
void net_backward(const NetworkParams<T>& params, const PackedBatch<T>& batch, const Tape<T>& tape,
                  const std::vector<Mat<T>>& logits, const std::vector<Mat<T>>& dlogits,
                  TensorMap<T>& grads) {
    (void)logits;
    const NetDescriptor& desc = params.desc;
    const int T_max = batch.steps();
    const Mat<T>& headW = params.at("head.W");

    if (desc.kind == NetKind::Dense) {
        Mat<T>& gheadW = grads.at("head.W");
        Mat<T>& gheadb = grads.at("head.b");
        for (int t = 0; t < T_max; ++t) {
            const Mat<T>& top = desc.layers > 0 ? tape.dense_out[desc.layers - 1][t] : batch.x[t];
            gheadW.noalias() += dlogits[t] * top.transpose();
            gheadb.col(0).noalias() += dlogits[t].rowwise().sum();
            Mat<T> dcur = headW.transpose() * dlogits[t];
            for (int l = desc.layers - 1; l >= 0; --l) {
                const Mat<T>& pre = tape.dense_pre[l][t];
                Mat<T> dpre =
                    dcur.cwiseProduct((pre.array() > T(0)).template cast<T>().matrix());
                const Mat<T>& in = l == 0 ? batch.x[t] : tape.dense_out[l - 1][t];
                grads.at("fc" + std::to_string(l) + ".W").noalias() += dpre * in.transpose();
                grads.at("fc" + std::to_string(l) + ".b").col(0).noalias() += dpre.rowwise().sum();
                dcur = params.at("fc" + std::to_string(l) + ".W").transpose() * dpre;
            }
        }
        return;
    }

    const bool bidir = desc.kind == NetKind::Bidirectional;
    const int dirs = bidir ? 2 : 1;
    const long H = desc.hidden;

    // grad wrt the current layer's per-step output (concatenated directions)
    std::vector<Mat<T>> dout(T_max);
    {
        Mat<T>& gheadW = grads.at("head.W");
        Mat<T>& gheadb = grads.at("head.b");
        const auto& top_in = tape.layer_in[desc.layers];
        for (int t = 0; t < T_max; ++t) {
            gheadW.noalias() += dlogits[t] * top_in[t].transpose();
            gheadb.col(0).noalias() += dlogits[t].rowwise().sum();
            dout[t].noalias() = headW.transpose() * dlogits[t];
        }
    }

    for (int l = desc.layers - 1; l >= 0; --l) {
        std::vector<Mat<T>> din(T_max);
        const long in_dim = desc.layer_input_dim(l);
        for (int t = 0; t < T_max; ++t) din[t] = Mat<T>::Zero(in_dim, batch.n_active[t]);
        const auto& xin = l == 0 ? batch.x : tape.layer_in[l];

        for (int d = 0; d < dirs; ++d) {
            const CellWeights<T> w = detail::layer_weights(params, l, d);
            const std::string prefix = "l" + std::to_string(l) + (d == 0 ? ".fwd." : ".bwd.");
            Mat<T>& gW = grads.at(prefix + "W");
            Mat<T>& gU = grads.at(prefix + "U");
            Mat<T>& gb = grads.at(prefix + "b");

            Mat<T> carry_dh(H, 0);  // dh_prev emitted by scan step s+1
            Mat<T> carry_dc(H, 0);
            for (int s = T_max - 1; s >= 0; --s) {
                const int t = detail::scan_time(d, s, T_max);
                const int width = batch.n_active[t];
                Mat<T> dh = dout[t].middleRows(static_cast<long>(d) * H, H);
                {
                    const int shared = std::min<int>(width, static_cast<int>(carry_dh.cols()));
                    if (shared > 0) dh.leftCols(shared) += carry_dh.leftCols(shared);
                }
                Mat<T> dc = Mat<T>::Zero(H, width);
                if (desc.cell == CellKind::Lstm) {
                    const int shared = std::min<int>(width, static_cast<int>(carry_dc.cols()));
                    if (shared > 0) dc.leftCols(shared) = carry_dc.leftCols(shared);
                }
                const auto& rec = tape.rec[l][d][s];
                Mat<T> h_prev =
                    s == 0 ? Mat<T>::Zero(H, width)
                           : detail::fit_state(tape.rec[l][d][s - 1].h, H, width);
                Mat<T> c_prev;
                if (desc.cell == CellKind::Lstm) {
                    c_prev = s == 0 ? Mat<T>::Zero(H, width)
                                    : detail::fit_state(tape.rec[l][d][s - 1].c, H, width);
                }
                Mat<T> dx, dh_prev;
                detail::cell_backward_step(desc.cell, w, xin[t], h_prev, c_prev, rec, dh, dc, dx,
                                           dh_prev, gW, gU, gb);
                din[t] += dx;
                carry_dh = std::move(dh_prev);
                carry_dc = std::move(dc);
            }
        }
        dout = std::move(din);
    }
}

// ---- streaming ----

template <typename T>
RecurrentState<T> RecurrentState<T>::zero(const NetDescriptor& desc) {
    RecurrentState<T> st;
    st.h.assign(desc.layers, Vec<T>::Zero(desc.hidden));
    if (desc.cell == CellKind::Lstm) st.c.assign(desc.layers, Vec<T>::Zero(desc.hidden));
    return st;
}

template <typename T>
Vec<T> net_step(const NetworkParams<T>& params, const Vec<T>& x, RecurrentState<T>& state) {
    const NetDescriptor& desc = params.desc;
    if (desc.kind != NetKind::Recurrent) {
        throw std::invalid_argument("net_step: streaming requires a unidirectional recurrent net");
    }
    if (static_cast<int>(state.h.size()) != desc.layers || x.size() != desc.input_dim) {
        throw std::invalid_argument("net_step: state or input dimensions do not match descriptor");
    }
    Mat<T> cur = x;
    for (int l = 0; l < desc.layers; ++l) {
        const CellWeights<T> w = detail::layer_weights(params, l, 0);
        Mat<T> h_prev = state.h[l];
        Mat<T> c_prev = desc.cell == CellKind::Lstm ? Mat<T>(state.c[l]) : Mat<T>();
        Mat<T> h_out, c_out;
        cell_step(desc.cell, w, cur, h_prev, c_prev, h_out, c_out);
        state.h[l] = h_out.col(0);
        if (desc.cell == CellKind::Lstm) state.c[l] = c_out.col(0);
        cur = std::move(h_out);
    }
    return dense_forward(cur, params.at("head.W"), params.at("head.b"), Activation::None).col(0);
}

template <typename T>
std::vector<Vec<T>> net_window(const NetworkParams<T>& params, const std::vector<Vec<T>>& xs) {
    if (xs.empty()) throw std::invalid_argument("net_window: empty window");
    PackedBatch<T> batch = PackedBatch<T>::from_sequences({xs});
    const auto logits = net_forward(params, batch);
    std::vector<Vec<T>> out(xs.size());
    for (std::size_t t = 0; t < xs.size(); ++t) out[t] = logits[t].col(0);
    return out;
}

}  // namespace seqdet::nn
