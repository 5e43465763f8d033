#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "seqdet/features.hpp"
#include "seqdet/nn/tensor.hpp"
#include "seqdet/rng.hpp"

namespace seqdet::nn {

enum class CellKind : std::uint8_t { Vanilla = 0, Gru = 1, Lstm = 2 };
enum class NetKind : std::uint8_t { Dense = 0, Recurrent = 1, Bidirectional = 2 };

std::string to_string(CellKind k);
std::string to_string(NetKind k);
CellKind cell_kind_from_string(const std::string& s);

inline int gates_per_cell(CellKind k) {
    switch (k) {
        case CellKind::Vanilla: return 1;
        case CellKind::Gru: return 3;
        case CellKind::Lstm: return 4;
    }
    return 0;
}

struct NetDescriptor {
    NetKind kind = NetKind::Bidirectional;
    CellKind cell = CellKind::Lstm;
    int layers = 3;
    int hidden = 80;  // per direction
    int input_dim = 14;
    int classes = 2;
    int window_max = 50;  // trained window support (bidirectional nets)

    bool operator==(const NetDescriptor&) const = default;
    void validate() const;
    int layer_input_dim(int layer) const;
    int top_output_dim() const;
};

// All trainable weights, keyed by name. Every tensor the descriptor implies
// must be present with the exact shape; validate() enforces that.
template <typename T>
struct NetworkParams {
    NetDescriptor desc;
    TensorMap<T> tensors;

    static NetworkParams init(const NetDescriptor& desc, Rng& rng);
    void validate() const;

    Mat<T>& at(const std::string& name);
    const Mat<T>& at(const std::string& name) const;
};

// ---- activations ----

template <typename T>
inline T sigmoid_scalar(T x) {
    if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
    const T e = std::exp(x);
    return e / (T(1) + e);
}

// Stabilized softmax of each column in place.
template <typename T>
void softmax_columns(Mat<T>& logits);

// Cross entropy H(p, p_hat) against a target PMF, with the softmax gradient
// p_hat - p. logits and p_true are length-m vectors.
template <typename T>
std::pair<double, Vec<T>> softmax_cross_entropy(const Vec<T>& logits, const Vec<T>& p_true);

template <typename T>
Vec<T> one_hot(int cls, int m) {
    Vec<T> v = Vec<T>::Zero(m);
    v[cls] = T(1);
    return v;
}

// ---- dense layer ----

enum class Activation { None, Relu };

// y = act(W x + b); columns of x are independent samples. When preact is
// given the pre-activation is stored for the backward pass.
template <typename T>
Mat<T> dense_forward(const Mat<T>& x, const Mat<T>& W, const Mat<T>& b, Activation act,
                     Mat<T>* preact = nullptr);

// ---- recurrent cells ----

template <typename T>
struct CellWeights {
    const Mat<T>* W;  // (G*H x in)
    const Mat<T>* U;  // (G*H x H)
    const Mat<T>* b;  // (G*H x 1)
};

// One batched step of the given cell. h_prev/c_prev and the outputs all have
// one column per sample. c_* are unused for vanilla and GRU cells. gates,
// when given, records post-activation gate values for backprop.
template <typename T>
void cell_step(CellKind kind, const CellWeights<T>& w, const Mat<T>& x, const Mat<T>& h_prev,
               const Mat<T>& c_prev, Mat<T>& h_out, Mat<T>& c_out, Mat<T>* gates = nullptr);

// ---- packed variable-length batches ----

// Time-major batch of sequences sorted by non-increasing length; at step t
// only the first n_active[t] columns are live, so every matrix stays dense.
template <typename T>
struct PackedBatch {
    std::vector<Mat<T>> x;      // x[t]: (input_dim x n_active[t])
    std::vector<int> n_active;  // non-increasing
    std::vector<int> lengths;   // per column, sorted desc

    int steps() const { return static_cast<int>(x.size()); }
    int width() const { return n_active.empty() ? 0 : n_active[0]; }
    long total_positions() const {
        long s = 0;
        for (int n : n_active) s += n;
        return s;
    }
    static PackedBatch from_sequences(const std::vector<std::vector<Vec<T>>>& seqs,
                                      std::vector<int>* order = nullptr);
};

// Activation tape recorded by forward passes that intend to run backward.
template <typename T>
struct Tape {
    struct StepRec {
        Mat<T> gates;  // (G*H x n)
        Mat<T> h;      // (H x n)
        Mat<T> c;      // LSTM only
        Mat<T> tanh_c; // LSTM only
    };
    // [layer][direction][scan step]
    std::vector<std::vector<std::vector<StepRec>>> rec;
    // [layer][time step]: input fed to that layer (empty for layer 0 = batch x)
    std::vector<std::vector<Mat<T>>> layer_in;
    // dense nets: per fc layer, per step, pre-activations
    std::vector<std::vector<Mat<T>>> dense_pre;
    std::vector<std::vector<Mat<T>>> dense_out;
};

// Per-step logits (classes x n_active[t]) for the whole net.
template <typename T>
std::vector<Mat<T>> net_forward(const NetworkParams<T>& params, const PackedBatch<T>& batch,
                                Tape<T>* tape = nullptr);

// Mean cross-entropy over all valid positions; labels[col][t]. dlogits, when
// given, receives the loss gradient ready for net_backward.
template <typename T>
double batch_cross_entropy(const std::vector<Mat<T>>& logits, const PackedBatch<T>& batch,
                           const std::vector<std::vector<int>>& labels,
                           std::vector<Mat<T>>* dlogits = nullptr);

template <typename T>
void net_backward(const NetworkParams<T>& params, const PackedBatch<T>& batch, const Tape<T>& tape,
                  const std::vector<Mat<T>>& logits, const std::vector<Mat<T>>& dlogits,
                  TensorMap<T>& grads);

// Zero-initialized gradient map matching the parameter shapes.
template <typename T>
TensorMap<T> zero_like(const TensorMap<T>& params);

// ---- streaming state (unidirectional nets) ----

template <typename T>
struct RecurrentState {
    std::vector<Vec<T>> h;  // per layer
    std::vector<Vec<T>> c;  // per layer (LSTM)

    static RecurrentState zero(const NetDescriptor& desc);
};

// One streaming step: consumes one feature vector, returns logits and mutates
// the carried state. Only valid for NetKind::Recurrent.
template <typename T>
Vec<T> net_step(const NetworkParams<T>& params, const Vec<T>& x, RecurrentState<T>& state);

// Whole-window forward for a single sequence (any net kind); returns
// per-position logits. Shares the batched kernels at width 1.
template <typename T>
std::vector<Vec<T>> net_window(const NetworkParams<T>& params, const std::vector<Vec<T>>& xs);

}  // namespace seqdet::nn

#include "seqdet/nn/net_impl.hpp"
