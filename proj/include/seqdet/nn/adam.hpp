#pragma once

#include <cmath>

#include "seqdet/nn/net.hpp"

namespace seqdet::nn {

template <typename T>
struct AdamConfig {
    T lr = T(1e-3);
    T beta1 = T(0.9);
    T beta2 = T(0.999);
    T eps = T(1e-8);
};

template <typename T>
struct AdamState {
    TensorMap<T> m;
    TensorMap<T> v;
    long t = 0;

    static AdamState zero_for(const NetworkParams<T>& params) {
        AdamState st;
        st.m = zero_like(params.tensors);
        st.v = zero_like(params.tensors);
        return st;
    }
};

// Standard bias-corrected Adam update over every named tensor.
template <typename T>
void adam_step(NetworkParams<T>& params, const TensorMap<T>& grads, AdamState<T>& state,
               const AdamConfig<T>& cfg) {
    state.t += 1;
    const T c1 = T(1) - std::pow(cfg.beta1, static_cast<T>(state.t));
    const T c2 = T(1) - std::pow(cfg.beta2, static_cast<T>(state.t));
    for (auto& [name, p] : params.tensors) {
        const Mat<T>& g = grads.at(name);
        check_shape(name, g, p.rows(), p.cols());
        Mat<T>& m = state.m.at(name);
        Mat<T>& v = state.v.at(name);
        m = cfg.beta1 * m + (T(1) - cfg.beta1) * g;
        v = cfg.beta2 * v + (T(1) - cfg.beta2) * g.cwiseProduct(g);
        const Mat<T> m_hat = m / c1;
        const Mat<T> v_hat = v / c2;
        p.array() -= cfg.lr * m_hat.array() / (v_hat.array().sqrt() + cfg.eps);
    }
}

// L2 norm over every gradient tensor; used for the optional clipping flag.
template <typename T>
double grad_norm(const TensorMap<T>& grads) {
    double s = 0.0;
    for (const auto& [name, g] : grads) s += static_cast<double>(g.squaredNorm());
    return std::sqrt(s);
}

template <typename T>
void clip_grads(TensorMap<T>& grads, double max_norm) {
    const double n = grad_norm(grads);
    if (n > max_norm && n > 0.0) {
        const T scale = static_cast<T>(max_norm / n);
        for (auto& [name, g] : grads) g *= scale;
    }
}

}  // namespace seqdet::nn
