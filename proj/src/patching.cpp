#include "loglo/patching.hpp"

namespace loglo {

namespace {

void check_divides(Index n, Index patch, const char* axis) {
  if (patch < 1 || n % patch != 0) {
    throw ShapeError("patch size " + std::to_string(patch) + " does not divide " + axis +
                     " size " + std::to_string(n));
  }
}

}  // namespace

RealTensor extract_patches(const RealTensor& x, Index patch) {
  if (x.rank() != 4) throw ShapeError("extract_patches expects [b, c, nx, ny]");
  const Index b = x.dim(0), c = x.dim(1), nx = x.dim(2), ny = x.dim(3);
  check_divides(nx, patch, "x");
  check_divides(ny, patch, "y");
  const Index gx = nx / patch, gy = ny / patch;
  RealTensor out(Shape{b, c, gx * gy, patch, patch}, uninitialized);
  double* o = out.data();
  for (Index s = 0; s < b * c; ++s) {
    const double* in = x.data() + s * nx * ny;
    for (Index pr = 0; pr < gx; ++pr) {
      for (Index pc = 0; pc < gy; ++pc) {
        for (Index i = 0; i < patch; ++i) {
          const double* row = in + (pr * patch + i) * ny + pc * patch;
          for (Index j = 0; j < patch; ++j) *o++ = row[j];
        }
      }
    }
  }
  return out;
}

RealTensor reassemble_patches(const RealTensor& patches, Index grid_x, Index grid_y) {
  if (patches.rank() != 5 || patches.dim(3) != patches.dim(4)) {
    throw ShapeError("reassemble_patches expects [b, c, m, p, p], got " +
                     shape_string(patches.shape()));
  }
  const Index b = patches.dim(0), c = patches.dim(1), m = patches.dim(2), p = patches.dim(3);
  if (grid_x < 1 || grid_y < 1 || grid_x * grid_y != m) {
    throw ShapeError("patch grid " + std::to_string(grid_x) + "x" + std::to_string(grid_y) +
                     " inconsistent with " + std::to_string(m) + " patches");
  }
  const Index nx = grid_x * p, ny = grid_y * p;
  RealTensor out(Shape{b, c, nx, ny}, uninitialized);
  const double* in = patches.data();
  for (Index s = 0; s < b * c; ++s) {
    double* o = out.data() + s * nx * ny;
    for (Index pr = 0; pr < grid_x; ++pr) {
      for (Index pc = 0; pc < grid_y; ++pc) {
        for (Index i = 0; i < p; ++i) {
          double* row = o + (pr * p + i) * ny + pc * p;
          for (Index j = 0; j < p; ++j) row[j] = *in++;
        }
      }
    }
  }
  return out;
}

PatchSet extract_patches(const Field& f, Index patch) {
  PatchSet ps;
  ps.values = extract_patches(f.values(), patch);
  ps.grid_x = f.nx() / patch;
  ps.grid_y = f.ny() / patch;
  ps.patch = patch;
  ps.lx = f.lx();
  ps.ly = f.ly();
  return ps;
}

Field reassemble_patches(const PatchSet& ps) {
  if (ps.values.rank() != 5 || ps.patch != ps.values.dim(3)) {
    throw ShapeError("patch set metadata inconsistent with its data");
  }
  return Field(reassemble_patches(ps.values, ps.grid_x, ps.grid_y), ps.lx, ps.ly);
}

}  // namespace loglo
