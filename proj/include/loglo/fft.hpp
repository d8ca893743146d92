#pragma once

#include <memory>
#include <vector>

#include "loglo/field.hpp"

namespace loglo {

enum class FftDirection { forward, inverse };

/// Mixed-radix (4, 2, 3, 5, generic) complex FFT of a fixed length and
/// direction. Unnormalized in both directions. Immutable once built, so a
/// single plan may be shared across threads.
class FftPlan {
 public:
  FftPlan(Index n, FftDirection direction);

  /// Cached plan for (n, direction).
  static std::shared_ptr<const FftPlan> get(Index n, FftDirection direction);

  Index size() const { return n_; }
  FftDirection direction() const { return direction_; }

  /// Out-of-place transform; `in` and `out` must not alias.
  void execute(const cplx* in, cplx* out) const;
  /// In-place transform through an internal scratch copy.
  void execute_inplace(cplx* data, std::vector<cplx>& scratch) const;

 private:
  void work(cplx* out, const cplx* in, Index fstride, const Index* factors) const;
  void butterfly2(cplx* out, Index fstride, Index m) const;
  void butterfly4(cplx* out, Index fstride, Index m) const;
  void butterfly_generic(cplx* out, Index fstride, Index m, Index p) const;

  Index n_;
  FftDirection direction_;
  std::vector<cplx> twiddles_;
  std::vector<Index> factors_;  // (radix, remaining length) pairs
};

// Tensor kernels: transform the last two axes, every leading axis is batch.

/// Real-input 2D DFT; output last axis has ny/2+1 bins.
ComplexTensor rfft2(const RealTensor& x, FftNorm norm);
/// Inverse of rfft2 for a real signal of last-axis length ny. Imaginary
/// parts of the ky=0 (and ky=ny/2 for even ny) bins are ignored.
RealTensor irfft2(const ComplexTensor& s, Index ny, FftNorm norm);
/// Full complex 2D DFT over the last two axes (unnormalized inverse when
/// direction is inverse and norm is backward).
ComplexTensor fft2(const ComplexTensor& x, FftDirection direction, FftNorm norm);

/// Row order of a retained kx window: the ceil(K/2) lowest non-negative
/// then the floor(K/2) highest (negative) frequencies.
inline Index retained_kx(Index i, Index kx_modes, Index nx) {
  return i < (kx_modes + 1) / 2 ? i : nx - kx_modes + i;
}

/// rfft2 restricted to a window of retained modes, evaluated as dense DFT
/// matrix products: [..., nx, ny] -> [..., kx_modes, ky_modes].
ComplexTensor rdft2_modes(const RealTensor& x, Index kx_modes, Index ky_modes, FftNorm norm);
/// irfft2 of a half spectrum whose only nonzero modes are the given window:
/// [..., kx_modes, ky_modes] -> [..., nx, ny].
RealTensor irdft2_modes(const ComplexTensor& s, Index nx, Index ny, FftNorm norm);

namespace detail {
/// Unnormalized windowed analysis sum_x,y x e^{-i(phi+theta)}, times
/// scale (and c_ky when `half_weights`).
ComplexTensor dft2_analysis(const RealTensor& x, Index kx_modes, Index ky_modes, double scale,
                            bool half_weights);
/// sum_kx,ky Re(s e^{i(phi+theta)}), times scale (and c_ky when `half_weights`).
RealTensor dft2_synthesis(const ComplexTensor& s, Index nx, Index ny, double scale,
                          bool half_weights);
}  // namespace detail

SpectralField rfft2(const Field& f, FftNorm norm);
Field irfft2(const SpectralField& s, Index nx, Index ny, FftNorm norm);

/// Hermitian multiplicity of half-spectrum bin ky for a real signal of
/// length ny: 1 for DC (and Nyquist when ny is even), 2 otherwise.
inline double half_spectrum_weight(Index ky, Index ny) {
  return (ky == 0 || (ny % 2 == 0 && ky == ny / 2)) ? 1.0 : 2.0;
}

}  // namespace loglo
