#include "loglo/resample.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace loglo {

InterpMode parse_interp_mode(std::string_view name) {
  if (name == "nearest") return InterpMode::nearest;
  if (name == "bilinear") return InterpMode::bilinear;
  throw ConfigError("unknown interpolation mode '" + std::string(name) + "'");
}

std::string_view to_string(InterpMode mode) {
  return mode == InterpMode::nearest ? "nearest" : "bilinear";
}

Index pooled_size(Index n, Index kernel, Index stride) {
  if (kernel < 1 || stride < 1) throw ShapeError("pooling kernel and stride must be >= 1");
  if (kernel > n) {
    throw ShapeError("pooling kernel " + std::to_string(kernel) + " exceeds grid size " +
                     std::to_string(n));
  }
  if (kernel == stride && n % stride != 0) {
    throw ShapeError("grid size " + std::to_string(n) + " not divisible by pooling stride " +
                     std::to_string(stride));
  }
  return (n - kernel) / stride + 1;
}

RealTensor avg_pool2(const RealTensor& x, Index kernel, Index stride) {
  const Index nx = x.dim(-2);
  const Index ny = x.dim(-1);
  const Index ox = pooled_size(nx, kernel, stride);
  const Index oy = pooled_size(ny, kernel, stride);
  const Index outer = x.size() / (nx * ny);
  Shape shape = x.shape();
  shape[shape.size() - 2] = ox;
  shape.back() = oy;
  RealTensor out(shape);
  const double count = static_cast<double>(kernel * kernel);
  for (Index s = 0; s < outer; ++s) {
    const double* in = x.data() + s * nx * ny;
    double* o = out.data() + s * ox * oy;
    for (Index i = 0; i < ox; ++i) {
      for (Index j = 0; j < oy; ++j) {
        // Summed relative to the window's first value, so constant windows are exact.
        const double shift = in[i * stride * ny + j * stride];
        double acc = 0.0;
        for (Index a = 0; a < kernel; ++a) {
          const double* row = in + (i * stride + a) * ny + j * stride;
          for (Index b = 0; b < kernel; ++b) acc += row[b] - shift;
        }
        o[i * oy + j] = shift + acc / count;
      }
    }
  }
  return out;
}

RealTensor avg_pool2_adjoint(const RealTensor& grad_out, Index nx, Index ny, Index kernel,
                             Index stride) {
  const Index ox = grad_out.dim(-2);
  const Index oy = grad_out.dim(-1);
  const Index outer = grad_out.size() / (ox * oy);
  Shape shape = grad_out.shape();
  shape[shape.size() - 2] = nx;
  shape.back() = ny;
  RealTensor gin(shape);
  const double inv = 1.0 / static_cast<double>(kernel * kernel);
  for (Index s = 0; s < outer; ++s) {
    const double* g = grad_out.data() + s * ox * oy;
    double* gi = gin.data() + s * nx * ny;
    for (Index i = 0; i < ox; ++i) {
      for (Index j = 0; j < oy; ++j) {
        const double v = g[i * oy + j] * inv;
        for (Index a = 0; a < kernel; ++a) {
          double* row = gi + (i * stride + a) * ny + j * stride;
          for (Index b = 0; b < kernel; ++b) row[b] += v;
        }
      }
    }
  }
  return gin;
}

namespace {

struct AxisTap {
  Index i0;
  Index i1;
  double frac;  // weight of i1
};

std::vector<AxisTap> axis_taps(Index in, Index out, InterpMode mode) {
  std::vector<AxisTap> taps(static_cast<std::size_t>(out));
  for (Index d = 0; d < out; ++d) {
    AxisTap& t = taps[static_cast<std::size_t>(d)];
    if (mode == InterpMode::nearest) {
      t = {std::min((d * in) / out, in - 1), 0, 0.0};
      t.i1 = t.i0;
      continue;
    }
    const double scale = static_cast<double>(in) / static_cast<double>(out);
    double src = (static_cast<double>(d) + 0.5) * scale - 0.5;
    if (src < 0.0) src = 0.0;
    Index i0 = static_cast<Index>(std::floor(src));
    if (i0 > in - 1) i0 = in - 1;
    const Index i1 = std::min(i0 + 1, in - 1);
    t = {i0, i1, i1 == i0 ? 0.0 : src - static_cast<double>(i0)};
  }
  return taps;
}

}  // namespace

RealTensor interpolate2(const RealTensor& x, Index out_nx, Index out_ny, InterpMode mode) {
  const Index nx = x.dim(-2);
  const Index ny = x.dim(-1);
  if (out_nx < nx || out_ny < ny) {
    throw ShapeError("interpolate2 only upsamples; requested " + std::to_string(out_nx) + "x" +
                     std::to_string(out_ny) + " from " + std::to_string(nx) + "x" +
                     std::to_string(ny));
  }
  const auto tx = axis_taps(nx, out_nx, mode);
  const auto ty = axis_taps(ny, out_ny, mode);
  const Index outer = x.size() / (nx * ny);
  Shape shape = x.shape();
  shape[shape.size() - 2] = out_nx;
  shape.back() = out_ny;
  RealTensor out(shape);
  for (Index s = 0; s < outer; ++s) {
    const double* in = x.data() + s * nx * ny;
    double* o = out.data() + s * out_nx * out_ny;
    for (Index i = 0; i < out_nx; ++i) {
      const AxisTap& a = tx[static_cast<std::size_t>(i)];
      const double* r0 = in + a.i0 * ny;
      const double* r1 = in + a.i1 * ny;
      for (Index j = 0; j < out_ny; ++j) {
        const AxisTap& b = ty[static_cast<std::size_t>(j)];
        // lerp form keeps constants exact
        const double v0 = r0[b.i0] + b.frac * (r0[b.i1] - r0[b.i0]);
        const double v1 = r1[b.i0] + b.frac * (r1[b.i1] - r1[b.i0]);
        o[i * out_ny + j] = v0 + a.frac * (v1 - v0);
      }
    }
  }
  return out;
}

RealTensor interpolate2_adjoint(const RealTensor& grad_out, Index in_nx, Index in_ny,
                                InterpMode mode) {
  const Index out_nx = grad_out.dim(-2);
  const Index out_ny = grad_out.dim(-1);
  const auto tx = axis_taps(in_nx, out_nx, mode);
  const auto ty = axis_taps(in_ny, out_ny, mode);
  const Index outer = grad_out.size() / (out_nx * out_ny);
  Shape shape = grad_out.shape();
  shape[shape.size() - 2] = in_nx;
  shape.back() = in_ny;
  RealTensor gin(shape);
  for (Index s = 0; s < outer; ++s) {
    const double* g = grad_out.data() + s * out_nx * out_ny;
    double* gi = gin.data() + s * in_nx * in_ny;
    for (Index i = 0; i < out_nx; ++i) {
      const AxisTap& a = tx[static_cast<std::size_t>(i)];
      for (Index j = 0; j < out_ny; ++j) {
        const AxisTap& b = ty[static_cast<std::size_t>(j)];
        const double v = g[i * out_ny + j];
        const double wx0 = 1.0 - a.frac;
        const double wy0 = 1.0 - b.frac;
        gi[a.i0 * in_ny + b.i0] += v * wx0 * wy0;
        gi[a.i0 * in_ny + b.i1] += v * wx0 * b.frac;
        gi[a.i1 * in_ny + b.i0] += v * a.frac * wy0;
        gi[a.i1 * in_ny + b.i1] += v * a.frac * b.frac;
      }
    }
  }
  return gin;
}

Field avg_pool2(const Field& f, Index kernel, Index stride) {
  if (!f.values().all_finite()) throw InvalidInput("avg_pool2: non-finite values");
  return Field(avg_pool2(f.values(), kernel, stride), f.lx(), f.ly());
}

Field interpolate2(const Field& f, Index out_nx, Index out_ny, InterpMode mode) {
  return Field(interpolate2(f.values(), out_nx, out_ny, mode), f.lx(), f.ly());
}

}  // namespace loglo
