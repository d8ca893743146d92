#pragma once

#include "loglo/field.hpp"

namespace loglo {

/// Integer-radius bin map over the first spectral quadrant
/// [0, nx/2) x [0, ny/2) plus the low/mid/high cutoffs. Bands are
/// closed-open: low [0, i_low), mid [i_low, i_high), high [i_high, M].
struct RadialSpec {
  Index nx = 0;
  Index ny = 0;
  Eigen::Array<Index, Eigen::Dynamic, 1> bin_map;  // row-major [nx/2, ny/2]
  Index max_radius = 0;
  Index i_low = 4;
  Index i_high = 12;

  Index qx() const { return nx / 2; }
  Index qy() const { return ny / 2; }
  Index bins() const { return max_radius + 1; }
  Index radius(Index kx, Index ky) const { return bin_map[kx * qy() + ky]; }
};

/// floor(sqrt(kx^2 + ky^2)) computed in exact integer arithmetic.
Index floor_radius(Index kx, Index ky);

RadialSpec radial_bin_map(Index nx, Index ny, Index i_low = 4, Index i_high = 12);

/// Sum of e[..., kx, ky] into bins [..., M+1]; e is [..., nx/2, ny/2].
RealTensor bin_aggregate(const RealTensor& e, const RadialSpec& spec);

/// Same aggregation read directly from the quadrant of a half-spectrum
/// array [..., nx, ny/2+1]; the adjoint scatters back into that layout.
RealTensor bin_quadrant(const RealTensor& half_spectrum, const RadialSpec& spec);
RealTensor bin_quadrant_adjoint(const RealTensor& grad_bins, const RadialSpec& spec);

/// Radially binned |rfft2(f)|^2 (backward norm) per (batch, channel): [b, c, M+1].
RealTensor energy_spectrum(const Field& f);

/// Per-band arithmetic means along the last (radius) axis: [..., M+1] -> [..., 3].
/// Empty bands contribute 0. Throws ConfigError when i_high > M+1.
RealTensor band_means(const RealTensor& binned, const RadialSpec& spec);
RealTensor band_means_adjoint(const RealTensor& grad_bands, const RadialSpec& spec);

struct BandErrors {
  Eigen::ArrayXd low;   // one entry per channel (channel x time) slice
  Eigen::ArrayXd mid;
  Eigen::ArrayXd high;

  double low_mean() const { return low.size() ? low.mean() : 0.0; }
  double mid_mean() const { return mid.size() ? mid.mean() : 0.0; }
  double high_mean() const { return high.size() ? high.mean() : 0.0; }
};

/// Band-classifies binned values [slices, M+1] (any leading shape flattened).
BandErrors band_classify(const RealTensor& binned, const RadialSpec& spec);

}  // namespace loglo
