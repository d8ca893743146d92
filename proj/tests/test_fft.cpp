#include <doctest.h>

#include <array>

#include "loglo/fft.hpp"
#include "oracles.hpp"

using namespace loglo;

TEST_CASE("1D plan matches direct DFT for mixed radices") {
  for (Index n : {1, 2, 3, 4, 5, 6, 7, 8, 12, 16, 30, 49, 64, 97, 128}) {
    std::vector<cplx> x(static_cast<std::size_t>(n)), y(x.size());
    std::mt19937 rng(static_cast<unsigned>(n));
    std::normal_distribution<double> nd;
    for (auto& v : x) v = {nd(rng), nd(rng)};
    FftPlan::get(n, FftDirection::forward)->execute(x.data(), y.data());
    for (Index k = 0; k < n; ++k) {
      cplx acc = 0.0;
      for (Index j = 0; j < n; ++j) acc += x[j] * std::polar(1.0, -2.0 * std::numbers::pi * k * j / n);
      CHECK(std::abs(acc - y[k]) < 1e-9 * n);
    }
  }
}

TEST_CASE("rfft2 equals the half of a direct 2D DFT") {
  for (auto [nx, ny] : {std::pair<Index, Index>{4, 4}, {6, 10}, {8, 5}, {3, 7}, {16, 16}}) {
    RealTensor x = oracle::random_tensor({2, nx, ny}, 7);
    ComplexTensor s = rfft2(x, FftNorm::backward);
    const Index nk = ny / 2 + 1;
    REQUIRE(s.shape() == Shape{2, nx, nk});
    for (Index b = 0; b < 2; ++b) {
      auto ref = oracle::dft2(x.data() + b * nx * ny, nx, ny);
      for (Index kx = 0; kx < nx; ++kx)
        for (Index ky = 0; ky < nk; ++ky)
          CHECK(std::abs(ref[kx * ny + ky] - s[(b * nx + kx) * nk + ky]) < 1e-10);
    }
  }
}

TEST_CASE("irfft2 inverts rfft2 under both norms") {
  RealTensor x = oracle::random_tensor({3, 12, 8}, 3);
  for (FftNorm norm : {FftNorm::backward, FftNorm::ortho}) {
    RealTensor y = irfft2(rfft2(x, norm), 8, norm);
    CHECK(oracle::max_abs_diff(x, y) < 1e-12);
  }
  RealTensor odd = oracle::random_tensor({1, 5, 7}, 4);
  CHECK(oracle::max_abs_diff(odd, irfft2(rfft2(odd, FftNorm::ortho), 7, FftNorm::ortho)) < 1e-12);
}

TEST_CASE("ortho norm preserves energy") {
  RealTensor x = oracle::random_tensor({1, 8, 8}, 11);
  ComplexTensor s = rfft2(x, FftNorm::ortho);
  double e = 0.0;
  for (Index kx = 0; kx < 8; ++kx)
    for (Index ky = 0; ky < 5; ++ky) e += half_spectrum_weight(ky, 8) * std::norm(s[kx * 5 + ky]);
  CHECK(e == doctest::Approx(x.array().square().sum()).epsilon(1e-12));
}

TEST_CASE("fft2 round trip") {
  ComplexTensor x(Shape{2, 6, 4});
  std::mt19937 rng(5);
  std::normal_distribution<double> nd;
  for (Index i = 0; i < x.size(); ++i) x[i] = {nd(rng), nd(rng)};
  ComplexTensor y = fft2(fft2(x, FftDirection::forward, FftNorm::ortho), FftDirection::inverse,
                         FftNorm::ortho);
  CHECK((x.array() - y.array()).abs().maxCoeff() < 1e-12);
}

TEST_CASE("field transforms validate input") {
  Field f(1, 1, 4, 4, 1.0, 1.0);
  f(0, 0, 1, 1) = std::nan("");
  CHECK_THROWS_AS(rfft2(f, FftNorm::backward), InvalidInput);
  SpectralField s{ComplexTensor(Shape{1, 1, 4, 2}), 4, FftNorm::backward};
  CHECK_THROWS_AS(irfft2(s, 4, 4, FftNorm::backward), ShapeError);
}

TEST_CASE("windowed transforms equal truncated full transforms") {
  for (auto [nx, ny, kx, ky] :
       {std::array<Index, 4>{8, 8, 8, 5}, {8, 8, 3, 2}, {32, 32, 8, 5}, {32, 16, 7, 9}, {12, 10, 5, 6}}) {
    INFO(nx, "x", ny, " window ", kx, "x", ky);
    const RealTensor x = oracle::random_tensor({3, nx, ny}, 40);
    for (FftNorm norm : {FftNorm::backward, FftNorm::ortho}) {
      const ComplexTensor full = rfft2(x, norm);
      const ComplexTensor win = rdft2_modes(x, kx, ky, norm);
      REQUIRE(win.shape() == Shape{3, kx, ky});
      ComplexTensor padded(full.shape());
      double err = 0.0;
      for (Index b = 0; b < 3; ++b)
        for (Index i = 0; i < kx; ++i)
          for (Index k = 0; k < ky; ++k) {
            const Index row = retained_kx(i, kx, nx);
            const cplx ref = full[(b * nx + row) * (ny / 2 + 1) + k];
            err = std::max(err, std::abs(win[(b * kx + i) * ky + k] - ref));
            padded[(b * nx + row) * (ny / 2 + 1) + k] = ref;
          }
      CHECK(err < 1e-10 * std::max(1.0, full.array().abs().maxCoeff()));
      const RealTensor back = irdft2_modes(win, nx, ny, norm);
      CHECK(oracle::max_abs_diff(back, irfft2(padded, ny, norm)) < 1e-12);
    }
  }
  CHECK_THROWS_AS(rdft2_modes(RealTensor(Shape{4, 4}), 5, 2, FftNorm::ortho), ShapeError);
  CHECK_THROWS_AS(rdft2_modes(RealTensor(Shape{4, 4}), 2, 4, FftNorm::ortho), ShapeError);
}
