#pragma once

#include <Eigen/Dense>

#include <complex>
#include <initializer_list>
#include <numeric>
#include <string>
#include <type_traits>
#include <vector>

#include "loglo/errors.hpp"

namespace loglo {

using Index = Eigen::Index;
using Shape = std::vector<Index>;
using cplx = std::complex<double>;

inline Index shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), Index{1},
                         [](Index a, Index b) { return a * b; });
}

std::string shape_string(const Shape& shape);

/// Tag for tensors whose every element is written before being read.
struct Uninitialized {};
inline constexpr Uninitialized uninitialized{};

/// Dense row-major array of arbitrary rank. Storage is an Eigen column
/// vector so whole-tensor arithmetic stays expression-friendly.
template <typename Scalar_>
class Tensor {
 public:
  using Scalar = Scalar_;
  using Storage = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

  Tensor() = default;
  explicit Tensor(Shape shape)
      : shape_(std::move(shape)), data_(Storage::Zero(shape_numel(shape_))) {}
  Tensor(Shape shape, Uninitialized) : shape_(std::move(shape)), data_(shape_numel(shape_)) {}
  Tensor(Shape shape, Storage data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != shape_numel(shape_)) {
      throw ShapeError("tensor data size " + std::to_string(data_.size()) +
                       " does not match shape " + shape_string(shape_));
    }
  }

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
  static Tensor constant(Shape shape, Scalar v) {
    Tensor t(std::move(shape));
    t.data_.setConstant(v);
    return t;
  }

  const Shape& shape() const { return shape_; }
  Index rank() const { return static_cast<Index>(shape_.size()); }
  Index dim(Index i) const { return shape_[static_cast<std::size_t>(i < 0 ? rank() + i : i)]; }
  Index size() const { return data_.size(); }

  Storage& array() { return data_; }
  const Storage& array() const { return data_; }
  Scalar* data() { return data_.data(); }
  const Scalar* data() const { return data_.data(); }

  Scalar& operator[](Index i) { return data_[i]; }
  const Scalar& operator[](Index i) const { return data_[i]; }

  /// Reinterprets the same storage under a new shape of equal element count.
  Tensor reshaped(Shape shape) const {
    if (shape_numel(shape) != size()) {
      throw ShapeError("cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
    }
    return Tensor(std::move(shape), data_);
  }

  bool all_finite() const {
    if constexpr (std::is_same_v<Scalar, cplx>) {
      return data_.real().isFinite().all() && data_.imag().isFinite().all();
    } else {
      return data_.isFinite().all();
    }
  }

 private:
  Shape shape_;
  Storage data_;
};

using RealTensor = Tensor<double>;
using ComplexTensor = Tensor<cplx>;

inline void require_same_shape(const Shape& a, const Shape& b, const char* where) {
  if (a != b) {
    throw ShapeError(std::string(where) + ": shape mismatch " + shape_string(a) + " vs " +
                     shape_string(b));
  }
}

/// Product of all dimensions in [begin, end).
inline Index span_numel(const Shape& s, std::size_t begin, std::size_t end) {
  Index n = 1;
  for (std::size_t i = begin; i < end && i < s.size(); ++i) n *= s[i];
  return n;
}

}  // namespace loglo
