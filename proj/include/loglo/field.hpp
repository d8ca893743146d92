#pragma once

#include "loglo/tensor.hpp"

namespace loglo {

enum class FftNorm { backward, ortho };

/// Real field [batch, channels, nx, ny] on a periodic rectangle of extent
/// (lx, ly). Channels may hold several physical variables or timesteps.
class Field {
 public:
  Field() = default;
  Field(Index batch, Index channels, Index nx, Index ny, double lx = 1.0, double ly = 1.0);
  explicit Field(RealTensor values, double lx = 1.0, double ly = 1.0);

  Index batch() const { return values_.dim(0); }
  Index channels() const { return values_.dim(1); }
  Index nx() const { return values_.dim(2); }
  Index ny() const { return values_.dim(3); }
  double lx() const { return lx_; }
  double ly() const { return ly_; }
  void set_lengths(double lx, double ly) { lx_ = lx; ly_ = ly; }

  Index offset(Index b, Index c, Index x, Index y) const {
    return ((b * channels() + c) * nx() + x) * ny() + y;
  }
  double& operator()(Index b, Index c, Index x, Index y) { return values_[offset(b, c, x, y)]; }
  double operator()(Index b, Index c, Index x, Index y) const {
    return values_[offset(b, c, x, y)];
  }

  /// Contiguous nx*ny slice for one (batch, channel).
  Eigen::Map<const Eigen::ArrayXd> slice(Index b, Index c) const {
    return {values_.data() + offset(b, c, 0, 0), nx() * ny()};
  }
  Eigen::Map<Eigen::ArrayXd> slice(Index b, Index c) {
    return {values_.data() + offset(b, c, 0, 0), nx() * ny()};
  }

  RealTensor& values() { return values_; }
  const RealTensor& values() const { return values_; }
  Eigen::ArrayXd& array() { return values_.array(); }
  const Eigen::ArrayXd& array() const { return values_.array(); }

  /// Throws InvalidInput on non-finite data or grids smaller than 2x2.
  void validate(const char* where) const;

  Field selected_batch(Index b) const;

 private:
  RealTensor values_;
  double lx_ = 1.0;
  double ly_ = 1.0;
};

/// Half-spectrum [batch, channels, nx, ny/2+1] of a real field.
struct SpectralField {
  ComplexTensor values;
  Index ny = 0;  // originating real length along the last axis
  FftNorm norm = FftNorm::backward;

  Index batch() const { return values.dim(0); }
  Index channels() const { return values.dim(1); }
  Index kx() const { return values.dim(2); }
  Index ky() const { return values.dim(3); }
  cplx operator()(Index b, Index c, Index x, Index y) const {
    return values[((b * channels() + c) * kx() + x) * ky() + y];
  }
};

bool same_shape(const Field& a, const Field& b);
void require_same_shape(const Field& a, const Field& b, const char* where);

}  // namespace loglo
