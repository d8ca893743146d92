#pragma once

#include "loglo/field.hpp"

namespace loglo {

/// Non-overlapping square patches of a field, layout [b, c, m, p, p] with
/// patches ordered row-major over (patch_row, patch_col).
struct PatchSet {
  RealTensor values;
  Index grid_x = 0;  // patches along x
  Index grid_y = 0;  // patches along y
  Index patch = 0;
  double lx = 1.0;
  double ly = 1.0;

  Index batch() const { return values.dim(0); }
  Index channels() const { return values.dim(1); }
  Index count() const { return values.dim(2); }
  Index nx() const { return grid_x * patch; }
  Index ny() const { return grid_y * patch; }
};

// Kernels: x is [b, c, nx, ny] <-> [b, c, gx*gy, p, p].
RealTensor extract_patches(const RealTensor& x, Index patch);
RealTensor reassemble_patches(const RealTensor& patches, Index grid_x, Index grid_y);

PatchSet extract_patches(const Field& f, Index patch);
Field reassemble_patches(const PatchSet& ps);

}  // namespace loglo
