#pragma once

#include <Eigen/Dense>
#include <map>
#include <stdexcept>
#include <string>

namespace seqdet::nn {

// Dense numeric storage. Training and inference default to float; gradient
// checks instantiate everything at double.
template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

template <typename T>
using TensorMap = std::map<std::string, Mat<T>>;

inline void check_shape(const std::string& what, long rows, long cols, long want_rows,
                        long want_cols) {
    if (rows != want_rows || cols != want_cols) {
        throw std::invalid_argument(what + ": shape (" + std::to_string(rows) + "," +
                                    std::to_string(cols) + ") does not match expected (" +
                                    std::to_string(want_rows) + "," + std::to_string(want_cols) +
                                    ")");
    }
}

template <typename T>
void check_shape(const std::string& what, const Mat<T>& m, long want_rows, long want_cols) {
    check_shape(what, m.rows(), m.cols(), want_rows, want_cols);
}

}  // namespace seqdet::nn
