#pragma once

#include <vector>

#include <Eigen/Core>

#include "pry/common.hpp"

namespace pry::nn {

template <class S>
using MatrixRM =
    Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class S>
using VectorX = Eigen::Matrix<S, Eigen::Dynamic, 1>;

// Dense row-major tensor. Shape is metadata over a flat buffer; ops decide
// how to interpret it and use Eigen maps for the heavy lifting.
template <class S>
struct Tensor {
  std::vector<int> shape;
  std::vector<S> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> s)
      : shape(std::move(s)), data(size_t(numel_of(shape)), S(0)) {}

  static Tensor scalar(S v) {
    Tensor t({1});
    t.data[0] = v;
    return t;
  }

  static i64 numel_of(const std::vector<int>& s) {
    i64 n = 1;
    for (int d : s) {
      require(d >= 0, "tensor: negative dimension");
      n *= d;
    }
    return n;
  }

  i64 numel() const { return i64(data.size()); }
  int ndim() const { return static_cast<int>(shape.size()); }
  int dim(int i) const { return shape.at(size_t(i)); }

  S* ptr() { return data.data(); }
  const S* ptr() const { return data.data(); }

  void fill(S v) { std::fill(data.begin(), data.end(), v); }

  // Views the flat buffer as an r x c row-major matrix.
  Eigen::Map<MatrixRM<S>> mat(i64 r, i64 c) {
    require(r * c == numel(), "tensor: mat() shape mismatch");
    return Eigen::Map<MatrixRM<S>>(data.data(), r, c);
  }
  Eigen::Map<const MatrixRM<S>> mat(i64 r, i64 c) const {
    require(r * c == numel(), "tensor: mat() shape mismatch");
    return Eigen::Map<const MatrixRM<S>>(data.data(), r, c);
  }

  Eigen::Map<VectorX<S>> vec() {
    return Eigen::Map<VectorX<S>>(data.data(), numel());
  }
  Eigen::Map<const VectorX<S>> vec() const {
    return Eigen::Map<const VectorX<S>>(data.data(), numel());
  }
};

template <class S>
bool same_shape(const Tensor<S>& a, const Tensor<S>& b) {
  return a.shape == b.shape;
}

}  // namespace pry::nn
