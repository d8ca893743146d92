#include "loglo/spectra.hpp"

#include <array>
#include <cmath>

#include "loglo/fft.hpp"

namespace loglo {

Index floor_radius(Index kx, Index ky) {
  const Index r2 = kx * kx + ky * ky;
  auto r = static_cast<Index>(std::sqrt(static_cast<double>(r2)));
  while (r * r > r2) --r;
  while ((r + 1) * (r + 1) <= r2) ++r;
  return r;
}

RadialSpec radial_bin_map(Index nx, Index ny, Index i_low, Index i_high) {
  if (nx < 2 || ny < 2 || nx % 2 != 0 || ny % 2 != 0) {
    throw ShapeError("radial bin map needs even grid sizes, got " + std::to_string(nx) + "x" +
                     std::to_string(ny));
  }
  if (i_low <= 0 || i_low >= i_high) {
    throw ConfigError("radial cutoffs need 0 < i_low < i_high, got (" + std::to_string(i_low) +
                      ", " + std::to_string(i_high) + ")");
  }
  RadialSpec spec;
  spec.nx = nx;
  spec.ny = ny;
  spec.i_low = i_low;
  spec.i_high = i_high;
  spec.bin_map.resize(spec.qx() * spec.qy());
  for (Index kx = 0; kx < spec.qx(); ++kx) {
    for (Index ky = 0; ky < spec.qy(); ++ky) spec.bin_map[kx * spec.qy() + ky] = floor_radius(kx, ky);
  }
  spec.max_radius = spec.bin_map.maxCoeff();
  return spec;
}

RealTensor bin_aggregate(const RealTensor& e, const RadialSpec& spec) {
  if (e.rank() < 2 || e.dim(-2) != spec.qx() || e.dim(-1) != spec.qy()) {
    throw ShapeError("bin_aggregate: input " + shape_string(e.shape()) +
                     " does not match quadrant " + std::to_string(spec.qx()) + "x" +
                     std::to_string(spec.qy()));
  }
  const Index q = spec.qx() * spec.qy();
  const Index outer = e.size() / q;
  Shape shape(e.shape().begin(), e.shape().end() - 2);
  shape.push_back(spec.bins());
  RealTensor out(shape);
  for (Index s = 0; s < outer; ++s) {
    const double* in = e.data() + s * q;
    double* o = out.data() + s * spec.bins();
    for (Index i = 0; i < q; ++i) o[spec.bin_map[i]] += in[i];
  }
  return out;
}

RealTensor bin_quadrant(const RealTensor& half_spectrum, const RadialSpec& spec) {
  const Index nk = spec.ny / 2 + 1;
  if (half_spectrum.rank() < 2 || half_spectrum.dim(-2) != spec.nx || half_spectrum.dim(-1) != nk) {
    throw ShapeError("bin_quadrant: spectrum " + shape_string(half_spectrum.shape()) +
                     " does not match radial spec for " + std::to_string(spec.nx) + "x" +
                     std::to_string(spec.ny));
  }
  const Index outer = half_spectrum.size() / (spec.nx * nk);
  Shape shape(half_spectrum.shape().begin(), half_spectrum.shape().end() - 2);
  shape.push_back(spec.bins());
  RealTensor out(shape);
  for (Index s = 0; s < outer; ++s) {
    const double* in = half_spectrum.data() + s * spec.nx * nk;
    double* o = out.data() + s * spec.bins();
    for (Index kx = 0; kx < spec.qx(); ++kx) {
      for (Index ky = 0; ky < spec.qy(); ++ky) o[spec.radius(kx, ky)] += in[kx * nk + ky];
    }
  }
  return out;
}

RealTensor bin_quadrant_adjoint(const RealTensor& grad_bins, const RadialSpec& spec) {
  const Index nk = spec.ny / 2 + 1;
  const Index outer = grad_bins.size() / spec.bins();
  Shape shape(grad_bins.shape().begin(), grad_bins.shape().end() - 1);
  shape.push_back(spec.nx);
  shape.push_back(nk);
  RealTensor out(shape);
  for (Index s = 0; s < outer; ++s) {
    const double* g = grad_bins.data() + s * spec.bins();
    double* o = out.data() + s * spec.nx * nk;
    for (Index kx = 0; kx < spec.qx(); ++kx) {
      for (Index ky = 0; ky < spec.qy(); ++ky) o[kx * nk + ky] = g[spec.radius(kx, ky)];
    }
  }
  return out;
}

RealTensor energy_spectrum(const Field& f) {
  f.validate("energy_spectrum");
  const RadialSpec spec = radial_bin_map(f.nx(), f.ny(), 1, 2);
  const ComplexTensor s = rfft2(f.values(), FftNorm::backward);
  RealTensor power(s.shape(), s.array().abs2());
  return bin_quadrant(power, spec);
}

namespace {

void check_cutoffs(const RadialSpec& spec) {
  if (spec.i_high > spec.bins()) {
    throw ConfigError("radial cutoff i_high=" + std::to_string(spec.i_high) +
                      " exceeds bin count M+1=" + std::to_string(spec.bins()));
  }
}

struct Band {
  Index begin;
  Index end;
};

std::array<Band, 3> bands_of(const RadialSpec& spec) {
  return {Band{0, spec.i_low}, Band{spec.i_low, spec.i_high}, Band{spec.i_high, spec.bins()}};
}

}  // namespace

RealTensor band_means(const RealTensor& binned, const RadialSpec& spec) {
  check_cutoffs(spec);
  if (binned.dim(-1) != spec.bins()) {
    throw ShapeError("band_means: radius axis has " + std::to_string(binned.dim(-1)) +
                     " bins, expected " + std::to_string(spec.bins()));
  }
  const Index outer = binned.size() / spec.bins();
  Shape shape(binned.shape().begin(), binned.shape().end() - 1);
  shape.push_back(3);
  RealTensor out(shape);
  const auto bands = bands_of(spec);
  for (Index s = 0; s < outer; ++s) {
    const double* in = binned.data() + s * spec.bins();
    for (int k = 0; k < 3; ++k) {
      const Band b = bands[static_cast<std::size_t>(k)];
      if (b.end <= b.begin) continue;
      double acc = 0.0;
      for (Index r = b.begin; r < b.end; ++r) acc += in[r];
      out[s * 3 + k] = acc / static_cast<double>(b.end - b.begin);
    }
  }
  return out;
}

RealTensor band_means_adjoint(const RealTensor& grad_bands, const RadialSpec& spec) {
  const Index outer = grad_bands.size() / 3;
  Shape shape(grad_bands.shape().begin(), grad_bands.shape().end() - 1);
  shape.push_back(spec.bins());
  RealTensor out(shape);
  const auto bands = bands_of(spec);
  for (Index s = 0; s < outer; ++s) {
    double* o = out.data() + s * spec.bins();
    for (int k = 0; k < 3; ++k) {
      const Band b = bands[static_cast<std::size_t>(k)];
      if (b.end <= b.begin) continue;
      const double v = grad_bands[s * 3 + k] / static_cast<double>(b.end - b.begin);
      for (Index r = b.begin; r < b.end; ++r) o[r] += v;
    }
  }
  return out;
}

BandErrors band_classify(const RealTensor& binned, const RadialSpec& spec) {
  const RealTensor means = band_means(binned, spec);
  const Index n = means.size() / 3;
  BandErrors out;
  out.low.resize(n);
  out.mid.resize(n);
  out.high.resize(n);
  for (Index s = 0; s < n; ++s) {
    out.low[s] = means[s * 3];
    out.mid[s] = means[s * 3 + 1];
    out.high[s] = means[s * 3 + 2];
  }
  return out;
}

}  // namespace loglo
