#include "loglo/fft.hpp"

#include <array>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

namespace loglo {

FftPlan::FftPlan(Index n, FftDirection direction) : n_(n), direction_(direction) {
  if (n < 1) throw ShapeError("FFT length must be positive");
  const double sign = direction == FftDirection::forward ? -1.0 : 1.0;
  twiddles_.resize(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    const double phase = sign * 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n);
    twiddles_[static_cast<std::size_t>(i)] = {std::cos(phase), std::sin(phase)};
  }
  Index rest = n;
  Index p = 4;
  while (rest > 1) {
    while (rest % p != 0) {
      if (p == 4) {
        p = 2;
      } else if (p == 2) {
        p = 3;
      } else {
        p += 2;
      }
      if (p * p > rest) p = rest;
    }
    rest /= p;
    factors_.push_back(p);
    factors_.push_back(rest);
  }
  if (factors_.empty()) {
    factors_ = {1, 1};
  }
}

std::shared_ptr<const FftPlan> FftPlan::get(Index n, FftDirection direction) {
  static std::mutex mutex;
  static std::map<std::pair<Index, int>, std::shared_ptr<const FftPlan>> cache;
  const std::pair<Index, int> key{n, static_cast<int>(direction)};
  std::lock_guard lock(mutex);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  auto plan = std::make_shared<const FftPlan>(n, direction);
  cache.emplace(key, plan);
  return plan;
}

void FftPlan::execute(const cplx* in, cplx* out) const {
  if (n_ == 1) {
    out[0] = in[0];
    return;
  }
  work(out, in, 1, factors_.data());
}

void FftPlan::execute_inplace(cplx* data, std::vector<cplx>& scratch) const {
  scratch.assign(data, data + n_);
  execute(scratch.data(), data);
}

void FftPlan::work(cplx* out, const cplx* in, Index fstride, const Index* factors) const {
  const Index p = factors[0];
  const Index m = factors[1];
  cplx* const begin = out;
  cplx* const end = out + p * m;
  if (m == 1) {
    for (cplx* o = out; o != end; ++o, in += fstride) *o = *in;
  } else {
    for (cplx* o = out; o != end; o += m, in += fstride) work(o, in, fstride * p, factors + 2);
  }
  switch (p) {
    case 2:
      butterfly2(begin, fstride, m);
      break;
    case 4:
      butterfly4(begin, fstride, m);
      break;
    default:
      butterfly_generic(begin, fstride, m, p);
      break;
  }
}

void FftPlan::butterfly2(cplx* out, Index fstride, Index m) const {
  cplx* out2 = out + m;
  const cplx* tw = twiddles_.data();
  for (Index k = 0; k < m; ++k) {
    const cplx t = out2[k] * tw[k * fstride];
    out2[k] = out[k] - t;
    out[k] += t;
  }
}

void FftPlan::butterfly4(cplx* out, Index fstride, Index m) const {
  const cplx* tw = twiddles_.data();
  const bool inverse = direction_ == FftDirection::inverse;
  for (Index k = 0; k < m; ++k) {
    const cplx s0 = out[k + m] * tw[k * fstride];
    const cplx s1 = out[k + 2 * m] * tw[2 * k * fstride];
    const cplx s2 = out[k + 3 * m] * tw[3 * k * fstride];
    const cplx s5 = out[k] - s1;
    out[k] += s1;
    const cplx s3 = s0 + s2;
    const cplx s4 = s0 - s2;
    out[k + 2 * m] = out[k] - s3;
    out[k] += s3;
    if (inverse) {
      out[k + m] = {s5.real() - s4.imag(), s5.imag() + s4.real()};
      out[k + 3 * m] = {s5.real() + s4.imag(), s5.imag() - s4.real()};
    } else {
      out[k + m] = {s5.real() + s4.imag(), s5.imag() - s4.real()};
      out[k + 3 * m] = {s5.real() - s4.imag(), s5.imag() + s4.real()};
    }
  }
}

void FftPlan::butterfly_generic(cplx* out, Index fstride, Index m, Index p) const {
  const cplx* tw = twiddles_.data();
  std::vector<cplx> scratch(static_cast<std::size_t>(p));
  for (Index u = 0; u < m; ++u) {
    for (Index q = 0, k = u; q < p; ++q, k += m) scratch[static_cast<std::size_t>(q)] = out[k];
    for (Index q1 = 0, k = u; q1 < p; ++q1, k += m) {
      Index twidx = 0;
      cplx acc = scratch[0];
      for (Index q = 1; q < p; ++q) {
        twidx += fstride * k;
        if (twidx >= n_) twidx -= n_;
        acc += scratch[static_cast<std::size_t>(q)] * tw[twidx];
      }
      out[k] = acc;
    }
  }
}

namespace {

double forward_scale(FftNorm norm, Index n) {
  return norm == FftNorm::ortho ? 1.0 / std::sqrt(static_cast<double>(n)) : 1.0;
}

double inverse_scale(FftNorm norm, Index n) {
  return norm == FftNorm::ortho ? 1.0 / std::sqrt(static_cast<double>(n))
                                : 1.0 / static_cast<double>(n);
}

// Complex transforms along axis -2 of a [outer, nx, nk] complex array, in place.
void columns_inplace(cplx* data, Index outer, Index nx, Index nk, FftDirection dir) {
  if (nx == 1) return;
  auto plan = FftPlan::get(nx, dir);
  std::vector<cplx> in(static_cast<std::size_t>(nx)), out(static_cast<std::size_t>(nx));
  for (Index s = 0; s < outer; ++s) {
    cplx* base = data + s * nx * nk;
    for (Index k = 0; k < nk; ++k) {
      for (Index x = 0; x < nx; ++x) in[static_cast<std::size_t>(x)] = base[x * nk + k];
      plan->execute(in.data(), out.data());
      for (Index x = 0; x < nx; ++x) base[x * nk + k] = out[static_cast<std::size_t>(x)];
    }
  }
}

}  // namespace

ComplexTensor rfft2(const RealTensor& x, FftNorm norm) {
  if (x.rank() < 2) throw ShapeError("rfft2 needs at least two axes");
  const Index nx = x.dim(-2);
  const Index ny = x.dim(-1);
  const Index nk = ny / 2 + 1;
  const Index outer = x.size() / (nx * ny);
  Shape out_shape = x.shape();
  out_shape.back() = nk;
  ComplexTensor out(out_shape);

  // Rows: two real rows packed into one complex transform.
  const Index rows = outer * nx;
  auto plan = FftPlan::get(ny, FftDirection::forward);
  std::vector<cplx> z(static_cast<std::size_t>(ny)), zf(static_cast<std::size_t>(ny));
  const double* src = x.data();
  cplx* dst = out.data();
  for (Index r = 0; r < rows; r += 2) {
    const bool pair = r + 1 < rows;
    const double* a = src + r * ny;
    const double* b = pair ? a + ny : nullptr;
    for (Index j = 0; j < ny; ++j) z[static_cast<std::size_t>(j)] = {a[j], pair ? b[j] : 0.0};
    plan->execute(z.data(), zf.data());
    cplx* oa = dst + r * nk;
    cplx* ob = pair ? oa + nk : nullptr;
    for (Index k = 0; k < nk; ++k) {
      const cplx zk = zf[static_cast<std::size_t>(k)];
      const cplx zc = std::conj(zf[static_cast<std::size_t>((ny - k) % ny)]);
      oa[k] = 0.5 * (zk + zc);
      if (pair) ob[k] = cplx(0.0, -0.5) * (zk - zc);
    }
  }
  columns_inplace(dst, outer, nx, nk, FftDirection::forward);
  const double scale = forward_scale(norm, nx * ny);
  if (scale != 1.0) out.array() *= scale;
  return out;
}

RealTensor irfft2(const ComplexTensor& s, Index ny, FftNorm norm) {
  if (s.rank() < 2) throw ShapeError("irfft2 needs at least two axes");
  const Index nk = ny / 2 + 1;
  if (s.dim(-1) != nk) {
    throw ShapeError("irfft2: last axis has " + std::to_string(s.dim(-1)) + " bins, expected " +
                     std::to_string(nk) + " for ny=" + std::to_string(ny));
  }
  const Index nx = s.dim(-2);
  const Index outer = s.size() / (nx * nk);
  ComplexTensor work = s;
  columns_inplace(work.data(), outer, nx, nk, FftDirection::inverse);

  Shape out_shape = s.shape();
  out_shape.back() = ny;
  RealTensor out(out_shape);
  const Index rows = outer * nx;
  auto plan = FftPlan::get(ny, FftDirection::inverse);
  std::vector<cplx> z(static_cast<std::size_t>(ny)), zt(static_cast<std::size_t>(ny));
  const bool even = ny % 2 == 0;
  auto half = [&](const cplx* row, Index k) -> cplx {
    if (k == 0 || (even && k == ny / 2)) return {row[k].real(), 0.0};
    if (k < nk) return row[k];
    return std::conj(row[ny - k]);
  };
  for (Index r = 0; r < rows; r += 2) {
    const bool pair = r + 1 < rows;
    const cplx* a = work.data() + r * nk;
    const cplx* b = pair ? a + nk : nullptr;
    for (Index k = 0; k < ny; ++k) {
      const cplx ak = half(a, k);
      const cplx bk = pair ? half(b, k) : cplx{};
      z[static_cast<std::size_t>(k)] = ak + cplx(0.0, 1.0) * bk;
    }
    plan->execute(z.data(), zt.data());
    double* oa = out.data() + r * ny;
    for (Index j = 0; j < ny; ++j) oa[j] = zt[static_cast<std::size_t>(j)].real();
    if (pair) {
      double* ob = oa + ny;
      for (Index j = 0; j < ny; ++j) ob[j] = zt[static_cast<std::size_t>(j)].imag();
    }
  }
  out.array() *= inverse_scale(norm, nx * ny);
  return out;
}

ComplexTensor fft2(const ComplexTensor& x, FftDirection direction, FftNorm norm) {
  if (x.rank() < 2) throw ShapeError("fft2 needs at least two axes");
  const Index nx = x.dim(-2);
  const Index ny = x.dim(-1);
  const Index outer = x.size() / (nx * ny);
  ComplexTensor out = x;
  auto plan = FftPlan::get(ny, direction);
  std::vector<cplx> scratch;
  for (Index r = 0; r < outer * nx; ++r) plan->execute_inplace(out.data() + r * ny, scratch);
  columns_inplace(out.data(), outer, nx, ny, direction);
  const double scale = direction == FftDirection::forward ? forward_scale(norm, nx * ny)
                                                          : inverse_scale(norm, nx * ny);
  if (scale != 1.0) out.array() *= scale;
  return out;
}

SpectralField rfft2(const Field& f, FftNorm norm) {
  f.validate("rfft2");
  return SpectralField{rfft2(f.values(), norm), f.ny(), norm};
}

Field irfft2(const SpectralField& s, Index nx, Index ny, FftNorm norm) {
  if (s.values.rank() != 4 || s.kx() != nx || s.ky() != ny / 2 + 1) {
    throw ShapeError("irfft2: spectrum shape " + shape_string(s.values.shape()) +
                     " inconsistent with grid " + std::to_string(nx) + "x" + std::to_string(ny));
  }
  return Field(irfft2(s.values, ny, norm));
}

// ---- windowed DFTs ---------------------------------------------------------------

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowMatC = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

double twiddle_angle(Index k, Index n, Index len) {
  return 2.0 * std::numbers::pi * static_cast<double>((k * n) % len) / static_cast<double>(len);
}

void check_window(Index kx_modes, Index ky_modes, Index nx, Index ny, const char* where) {
  if (nx < 1 || ny < 1 || kx_modes < 1 || ky_modes < 1 || kx_modes > nx || ky_modes > ny / 2 + 1) {
    throw ShapeError(std::string(where) + ": window (" + std::to_string(kx_modes) + ", " +
                     std::to_string(ky_modes) + ") does not fit grid " + std::to_string(nx) + "x" +
                     std::to_string(ny));
  }
}

}  // namespace

namespace {

// Twiddles for the separable path, cached per window. ya/ys hold the y
// transform as real matrices over interleaved (re, im) columns/rows.
struct SeparableTwiddles {
  RowMat ya;   // [ny, 2 Ky]: cos, -sin
  RowMat ys;   // [2 Ky, ny]: cos, -sin (applied to (re, im) pairs)
  RowMatC fx;  // [Kx, nx]: e^{-i kx x}
  RowMatC gx;  // [nx, Kx]: e^{+i kx x}
};

std::shared_ptr<const SeparableTwiddles> separable_twiddles(Index nx, Index ny, Index kx_modes,
                                                            Index ky_modes) {
  static std::mutex mu;
  static std::map<std::array<Index, 4>, std::shared_ptr<const SeparableTwiddles>> cache;
  const std::array<Index, 4> key{nx, ny, kx_modes, ky_modes};
  std::lock_guard<std::mutex> lock(mu);
  if (auto it = cache.find(key); it != cache.end()) return it->second;
  auto t = std::make_shared<SeparableTwiddles>();
  t->ya.resize(ny, 2 * ky_modes);
  t->ys.resize(2 * ky_modes, ny);
  for (Index y = 0; y < ny; ++y) {
    for (Index k = 0; k < ky_modes; ++k) {
      const double a = twiddle_angle(y, k, ny);
      t->ya(y, 2 * k) = t->ys(2 * k, y) = std::cos(a);
      t->ya(y, 2 * k + 1) = t->ys(2 * k + 1, y) = -std::sin(a);
    }
  }
  t->fx.resize(kx_modes, nx);
  t->gx.resize(nx, kx_modes);
  for (Index i = 0; i < kx_modes; ++i) {
    const Index kx = retained_kx(i, kx_modes, nx);
    for (Index xi = 0; xi < nx; ++xi) {
      t->fx(i, xi) = std::polar(1.0, -twiddle_angle(kx, xi, nx));
      t->gx(xi, i) = std::conj(t->fx(i, xi));
    }
  }
  cache.emplace(key, t);
  return t;
}

Eigen::RowVectorXd column_scales(Index kx_modes, Index ky_modes, Index ny, double scale, bool half_weights);

ComplexTensor separable_analysis(const RealTensor& x, Index kx_modes, Index ky_modes, double scale,
                                 bool half_weights) {
  const Index nx = x.dim(-2), ny = x.dim(-1);
  const Index rows = x.size() / (nx * ny);
  const auto tw = separable_twiddles(nx, ny, kx_modes, ky_modes);

  // Along y for every row at once: [rows*nx, ny] -> complex [rows, nx, Ky].
  RowMatC t(rows * nx, ky_modes);
  Eigen::Map<RowMat>(reinterpret_cast<double*>(t.data()), rows * nx, 2 * ky_modes).noalias() =
      Eigen::Map<const RowMat>(x.data(), rows * nx, ny) * tw->ya;
  // Along x with images side by side.
  RowMatC tt(nx, rows * ky_modes);
  for (Index r = 0; r < rows; ++r) tt.middleCols(r * ky_modes, ky_modes) = t.middleRows(r * nx, nx);
  const RowMatC o = tw->fx * tt;

  Shape out_shape = x.shape();
  out_shape[out_shape.size() - 2] = kx_modes;
  out_shape.back() = ky_modes;
  ComplexTensor out(out_shape, uninitialized);
  for (Index r = 0; r < rows; ++r) {
    Eigen::Map<RowMatC>(out.data() + r * kx_modes * ky_modes, kx_modes, ky_modes) =
        o.middleCols(r * ky_modes, ky_modes);
  }
  Eigen::Map<RowMat>(reinterpret_cast<double*>(out.data()), rows, 2 * kx_modes * ky_modes).array().rowwise() *=
      column_scales(kx_modes, ky_modes, ny, scale, half_weights).array();
  return out;
}

RealTensor separable_synthesis(const ComplexTensor& s, Index nx, Index ny, double scale,
                               bool half_weights) {
  const Index kx_modes = s.dim(-2), ky_modes = s.dim(-1);
  const Index rows = s.size() / (kx_modes * ky_modes);
  const auto tw = separable_twiddles(nx, ny, kx_modes, ky_modes);

  RowMatC sm(kx_modes, rows * ky_modes);
  for (Index r = 0; r < rows; ++r) {
    sm.middleCols(r * ky_modes, ky_modes) =
        Eigen::Map<const RowMatC>(s.data() + r * kx_modes * ky_modes, kx_modes, ky_modes);
  }
  const Eigen::RowVectorXd cs = column_scales(1, ky_modes, ny, scale, half_weights);
  Eigen::Map<RowMat> smr(reinterpret_cast<double*>(sm.data()), kx_modes * rows, 2 * ky_modes);
  smr.array().rowwise() *= cs.array();
  const RowMatC z = tw->gx * sm;
  RowMatC zt(rows * nx, ky_modes);
  for (Index r = 0; r < rows; ++r) zt.middleRows(r * nx, nx) = z.middleCols(r * ky_modes, ky_modes);

  Shape out_shape = s.shape();
  out_shape[out_shape.size() - 2] = nx;
  out_shape.back() = ny;
  RealTensor out(out_shape, uninitialized);
  Eigen::Map<RowMat>(out.data(), rows * nx, ny).noalias() =
      Eigen::Map<const RowMat>(reinterpret_cast<const double*>(zt.data()), rows * nx, 2 * ky_modes) * tw->ys;
  return out;
}

// Dense [nx*ny, 2*K] matrix of e^{-i(phi+theta)} with (re, im) column pairs,
// so a row-major complex [rows, K] result is one real GEMM away.
// Used when nx*ny*Kx*Ky is at most this (patch-sized windows).
constexpr Index kDenseLimit = 4096;

std::shared_ptr<const RowMat> dense_dft_matrix(Index nx, Index ny, Index kx_modes, Index ky_modes) {
  static std::mutex mu;
  static std::map<std::array<Index, 4>, std::shared_ptr<const RowMat>> cache;
  const std::array<Index, 4> key{nx, ny, kx_modes, ky_modes};
  std::lock_guard<std::mutex> lock(mu);
  if (auto it = cache.find(key); it != cache.end()) return it->second;
  auto d = std::make_shared<RowMat>(nx * ny, 2 * kx_modes * ky_modes);
  for (Index xi = 0; xi < nx; ++xi) {
    for (Index i = 0; i < kx_modes; ++i) {
      const Index fx = (retained_kx(i, kx_modes, nx) * xi) % nx;
      for (Index y = 0; y < ny; ++y) {
        for (Index k = 0; k < ky_modes; ++k) {
          const double turns = static_cast<double>(fx) / static_cast<double>(nx) +
                               static_cast<double>((k * y) % ny) / static_cast<double>(ny);
          const double a = 2.0 * std::numbers::pi * turns;
          const Index q = i * ky_modes + k;
          (*d)(xi * ny + y, 2 * q) = std::cos(a);
          (*d)(xi * ny + y, 2 * q + 1) = -std::sin(a);
        }
      }
    }
  }
  cache.emplace(key, d);
  return d;
}

// Per (re, im) column scale: `scale`, times c_ky when requested.
Eigen::RowVectorXd column_scales(Index kx_modes, Index ky_modes, Index ny, double scale, bool half_weights) {
  Eigen::RowVectorXd w(2 * kx_modes * ky_modes);
  for (Index i = 0; i < kx_modes; ++i) {
    for (Index k = 0; k < ky_modes; ++k) {
      const double v = scale * (half_weights ? half_spectrum_weight(k, ny) : 1.0);
      w[2 * (i * ky_modes + k)] = v;
      w[2 * (i * ky_modes + k) + 1] = v;
    }
  }
  return w;
}

}  // namespace

ComplexTensor detail::dft2_analysis(const RealTensor& x, Index kx_modes, Index ky_modes,
                                    double scale, bool half_weights) {
  if (x.rank() < 2) throw ShapeError("dft2_analysis needs at least 2 axes");
  const Index nx = x.dim(-2), ny = x.dim(-1);
  check_window(kx_modes, ky_modes, nx, ny, "dft2_analysis");
  if (nx * ny * kx_modes * ky_modes > kDenseLimit) {
    return separable_analysis(x, kx_modes, ky_modes, scale, half_weights);
  }
  const Index rows = x.size() / (nx * ny);
  const auto d = dense_dft_matrix(nx, ny, kx_modes, ky_modes);
  Shape out_shape = x.shape();
  out_shape[out_shape.size() - 2] = kx_modes;
  out_shape.back() = ky_modes;
  ComplexTensor out(out_shape, uninitialized);
  Eigen::Map<RowMat> om(reinterpret_cast<double*>(out.data()), rows, 2 * kx_modes * ky_modes);
  om.noalias() = Eigen::Map<const RowMat>(x.data(), rows, nx * ny) * (*d);
  om.array().rowwise() *= column_scales(kx_modes, ky_modes, ny, scale, half_weights).array();
  return out;
}

RealTensor detail::dft2_synthesis(const ComplexTensor& s, Index nx, Index ny, double scale,
                                  bool half_weights) {
  if (s.rank() < 2) throw ShapeError("dft2_synthesis needs at least 2 axes");
  const Index kx_modes = s.dim(-2), ky_modes = s.dim(-1);
  check_window(kx_modes, ky_modes, nx, ny, "dft2_synthesis");
  if (nx * ny * kx_modes * ky_modes > kDenseLimit) {
    return separable_synthesis(s, nx, ny, scale, half_weights);
  }
  const Index rows = s.size() / (kx_modes * ky_modes);
  const auto d = dense_dft_matrix(nx, ny, kx_modes, ky_modes);
  RowMat sm = Eigen::Map<const RowMat>(reinterpret_cast<const double*>(s.data()), rows,
                                       2 * kx_modes * ky_modes);
  sm.array().rowwise() *= column_scales(kx_modes, ky_modes, ny, scale, half_weights).array();
  Shape out_shape = s.shape();
  out_shape[out_shape.size() - 2] = nx;
  out_shape.back() = ny;
  RealTensor out(out_shape, uninitialized);
  Eigen::Map<RowMat>(out.data(), rows, nx * ny).noalias() = sm * d->transpose();
  return out;
}

ComplexTensor rdft2_modes(const RealTensor& x, Index kx_modes, Index ky_modes, FftNorm norm) {
  const double n = x.rank() >= 2 ? static_cast<double>(x.dim(-2) * x.dim(-1)) : 1.0;
  return detail::dft2_analysis(x, kx_modes, ky_modes, norm == FftNorm::ortho ? 1.0 / std::sqrt(n) : 1.0,
                               false);
}

RealTensor irdft2_modes(const ComplexTensor& s, Index nx, Index ny, FftNorm norm) {
  const double n = static_cast<double>(nx * ny);
  return detail::dft2_synthesis(s, nx, ny, norm == FftNorm::ortho ? 1.0 / std::sqrt(n) : 1.0 / n, true);
}

}  // namespace loglo
