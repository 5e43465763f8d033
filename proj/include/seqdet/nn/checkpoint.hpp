#pragma once

#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>

#include "seqdet/features.hpp"
#include "seqdet/nn/net.hpp"

namespace seqdet::nn {

// Model checkpoint: descriptor + feature layout + named little-endian arrays.
// Loading validates the descriptor-implied tensor shapes and the requested
// scalar type against the stored dtype.

namespace ckpt_detail {

constexpr char kMagic[4] = {'S', 'Q', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void read_pod(std::istream& is, T& v) {
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
}

inline void write_string(std::ostream& os, const std::string& s) {
    write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(s.size()));
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_string(std::istream& is) {
    std::uint32_t n;
    read_pod(is, n);
    std::string s(n, '\0');
    is.read(s.data(), n);
    return s;
}

template <typename T>
constexpr std::uint8_t dtype_tag() {
    static_assert(std::is_same_v<T, float> || std::is_same_v<T, double>);
    return std::is_same_v<T, float> ? 0 : 1;
}

[[noreturn]] inline void fail(const std::string& what, const std::string& path) {
    throw std::runtime_error(what + ": " + path);
}

}  // namespace ckpt_detail

template <typename T>
void save_checkpoint(const NetworkParams<T>& params, const FeatureConfig& features,
                     const std::string& path) {
    using namespace ckpt_detail;
    params.validate();
    std::ofstream os(path, std::ios::binary);
    if (!os) fail("cannot open checkpoint for writing", path);
    os.write(kMagic, 4);
    write_pod(os, kVersion);
    write_pod<std::uint32_t>(os, 0x01020304u);

    const NetDescriptor& d = params.desc;
    write_pod<std::uint8_t>(os, static_cast<std::uint8_t>(d.kind));
    write_pod<std::uint8_t>(os, static_cast<std::uint8_t>(d.cell));
    write_pod<std::int32_t>(os, d.layers);
    write_pod<std::int32_t>(os, d.hidden);
    write_pod<std::int32_t>(os, d.input_dim);
    write_pod<std::int32_t>(os, d.classes);
    write_pod<std::int32_t>(os, d.window_max);

    write_pod<std::int32_t>(os, features.bins);
    write_pod<double>(os, features.gamma);
    write_pod<std::uint8_t>(os, features.include_slope);
    write_pod<std::uint8_t>(os, features.include_endpoints);
    write_pod<std::uint8_t>(os, features.include_mean_var);
    write_pod<std::uint8_t>(os, features.include_tau);
    write_pod<std::uint8_t>(os, features.slope_on_normalized);

    write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(params.tensors.size()));
    for (const auto& [name, t] : params.tensors) {
        write_string(os, name);
        write_pod<std::uint8_t>(os, dtype_tag<T>());
        write_pod<std::uint32_t>(os, 2);
        write_pod<std::uint64_t>(os, static_cast<std::uint64_t>(t.rows()));
        write_pod<std::uint64_t>(os, static_cast<std::uint64_t>(t.cols()));
        // column-major payload
        os.write(reinterpret_cast<const char*>(t.data()),
                 static_cast<std::streamsize>(sizeof(T) * t.size()));
    }
    if (!os) fail("write error on checkpoint", path);
}

template <typename T>
std::pair<NetworkParams<T>, FeatureConfig> load_checkpoint(const std::string& path) {
    using namespace ckpt_detail;
    std::ifstream is(path, std::ios::binary);
    if (!is) fail("cannot open checkpoint", path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0) fail("not a checkpoint file", path);
    std::uint32_t version, bom;
    read_pod(is, version);
    read_pod(is, bom);
    if (version != kVersion) fail("unsupported checkpoint version", path);
    if (bom != 0x01020304u) fail("checkpoint byte order mismatch", path);

    NetworkParams<T> params;
    NetDescriptor& d = params.desc;
    std::uint8_t kind, cell;
    std::int32_t layers, hidden, input_dim, classes, window_max;
    read_pod(is, kind);
    read_pod(is, cell);
    read_pod(is, layers);
    read_pod(is, hidden);
    read_pod(is, input_dim);
    read_pod(is, classes);
    read_pod(is, window_max);
    d.kind = static_cast<NetKind>(kind);
    d.cell = static_cast<CellKind>(cell);
    d.layers = layers;
    d.hidden = hidden;
    d.input_dim = input_dim;
    d.classes = classes;
    d.window_max = window_max;

    FeatureConfig features;
    std::uint8_t f1, f2, f3, f4, f5;
    read_pod(is, features.bins);
    read_pod(is, features.gamma);
    read_pod(is, f1);
    read_pod(is, f2);
    read_pod(is, f3);
    read_pod(is, f4);
    read_pod(is, f5);
    features.include_slope = f1;
    features.include_endpoints = f2;
    features.include_mean_var = f3;
    features.include_tau = f4;
    features.slope_on_normalized = f5;

    std::uint32_t n_tensors;
    read_pod(is, n_tensors);
    for (std::uint32_t i = 0; i < n_tensors; ++i) {
        const std::string name = read_string(is);
        std::uint8_t dtype;
        std::uint32_t ndim;
        read_pod(is, dtype);
        read_pod(is, ndim);
        if (dtype != dtype_tag<T>()) {
            fail("checkpoint dtype does not match requested scalar type", path);
        }
        if (ndim != 2) fail("unsupported tensor rank in checkpoint", path);
        std::uint64_t rows, cols;
        read_pod(is, rows);
        read_pod(is, cols);
        Mat<T> t(static_cast<long>(rows), static_cast<long>(cols));
        is.read(reinterpret_cast<char*>(t.data()),
                static_cast<std::streamsize>(sizeof(T) * t.size()));
        params.tensors.emplace(name, std::move(t));
    }
    if (!is) fail("truncated checkpoint", path);
    params.validate();  // refuses descriptor/tensor mismatches
    return {std::move(params), features};
}

}  // namespace seqdet::nn
