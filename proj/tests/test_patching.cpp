#include <doctest.h>

#include "loglo/patching.hpp"
#include "loglo/resample.hpp"
#include "oracles.hpp"

using namespace loglo;

TEST_CASE("patch round trip is exact") {
  RealTensor x = oracle::random_tensor({2, 3, 8, 12}, 1);
  RealTensor p = extract_patches(x, 4);
  CHECK(p.shape() == Shape{2, 3, 6, 4, 4});
  CHECK(reassemble_patches(p, 2, 3).array().isApprox(x.array(), 0.0));
}

TEST_CASE("patches are ordered row-major over the patch grid") {
  RealTensor x(Shape{1, 1, 4, 4});
  for (Index i = 0; i < 16; ++i) x[i] = static_cast<double>(i);
  RealTensor p = extract_patches(x, 2);
  // patch 1 is rows 0-1, columns 2-3
  CHECK(p[4] == 2.0);
  CHECK(p[5] == 3.0);
  CHECK(p[6] == 6.0);
  CHECK(p[7] == 7.0);
  // patch 2 is rows 2-3, columns 0-1
  CHECK(p[8] == 8.0);
}

TEST_CASE("patch errors") {
  RealTensor x(Shape{1, 1, 6, 8});
  CHECK_THROWS_AS(extract_patches(x, 4), ShapeError);
  CHECK_THROWS_AS(extract_patches(x, 0), ShapeError);
  RealTensor p(Shape{1, 1, 4, 2, 2});
  CHECK_THROWS_AS(reassemble_patches(p, 3, 1), ShapeError);
}

TEST_CASE("bilinear upsampling golden values") {
  RealTensor x(Shape{1, 1, 2, 2}, Eigen::ArrayXd::Map(std::array<double, 4>{0, 1, 0, 1}.data(), 4));
  RealTensor y = interpolate2(x, 2, 4, InterpMode::bilinear);
  CHECK(y[0] == doctest::Approx(0.0));
  CHECK(y[1] == doctest::Approx(0.25));
  CHECK(y[2] == doctest::Approx(0.75));
  CHECK(y[3] == doctest::Approx(1.0));
}

TEST_CASE("pool then nearest reproduces block means") {
  RealTensor x = oracle::random_tensor({1, 2, 8, 8}, 9);
  RealTensor pooled = avg_pool2(x, 2, 2);
  RealTensor up = interpolate2(pooled, 8, 8, InterpMode::nearest);
  for (Index c = 0; c < 2; ++c)
    for (Index i = 0; i < 8; ++i)
      for (Index j = 0; j < 8; ++j) {
        const Index bi = i / 2 * 2, bj = j / 2 * 2;
        const double* s = x.data() + c * 64;
        const double m = (s[bi * 8 + bj] + s[bi * 8 + bj + 1] + s[(bi + 1) * 8 + bj] + s[(bi + 1) * 8 + bj + 1]) / 4;
        CHECK(up[c * 64 + i * 8 + j] == doctest::Approx(m));
      }
  // idempotent on block-constant fields
  CHECK(oracle::max_abs_diff(interpolate2(avg_pool2(up, 2, 2), 8, 8, InterpMode::nearest), up) < 1e-15);
}

TEST_CASE("resampling adjoints satisfy the dot-product identity") {
  RealTensor x = oracle::random_tensor({1, 1, 8, 6}, 2);
  RealTensor y = oracle::random_tensor({1, 1, 4, 3}, 3);
  CHECK((avg_pool2(x, 2, 2).array() * y.array()).sum() ==
        doctest::Approx((x.array() * avg_pool2_adjoint(y, 8, 6, 2, 2).array()).sum()));
  RealTensor z = oracle::random_tensor({1, 1, 4, 3}, 4);
  for (InterpMode m : {InterpMode::nearest, InterpMode::bilinear}) {
    CHECK((interpolate2(z, 8, 6, m).array() * x.array()).sum() ==
          doctest::Approx((z.array() * interpolate2_adjoint(x, 4, 3, m).array()).sum()));
  }
}

TEST_CASE("resampling errors") {
  RealTensor x(Shape{1, 1, 6, 6});
  CHECK_THROWS_AS(avg_pool2(x, 4, 4), ShapeError);
  CHECK_THROWS_AS(avg_pool2(x, 7, 1), ShapeError);
  CHECK_THROWS_AS(interpolate2(x, 3, 3, InterpMode::nearest), ShapeError);
  CHECK_THROWS_AS(parse_interp_mode("bicubic"), ConfigError);
}
