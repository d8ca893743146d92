#include "gelu_kernel.hpp"

#include <cmath>

#if defined(LOGLO_HAVE_LIBMVEC) && defined(__AVX2__)
#include <immintrin.h>
// glibc vector math (libmvec), AVX2 variants.
extern "C" __m256d _ZGVdN4v_erf(__m256d);
extern "C" __m256d _ZGVdN4v_exp(__m256d);
#define LOGLO_GELU_SIMD 1
#if defined(__AVX512F__)
extern "C" __m512d _ZGVeN8v_erf(__m512d);
extern "C" __m512d _ZGVeN8v_exp(__m512d);
#define LOGLO_GELU_SIMD512 1
#endif
#endif

namespace loglo::detail {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

}  // namespace

void gelu_kernel(const double* x, double* y, double* dy, Index n) {
  Index i = 0;
#ifdef LOGLO_GELU_SIMD512
  {
    const __m512d half = _mm512_set1_pd(0.5);
    const __m512d one = _mm512_set1_pd(1.0);
    const __m512d r2 = _mm512_set1_pd(kInvSqrt2);
    const __m512d c = _mm512_set1_pd(kInvSqrt2Pi);
    const __m512d mhalf = _mm512_set1_pd(-0.5);
    for (; i + 8 <= n; i += 8) {
      const __m512d xv = _mm512_loadu_pd(x + i);
      const __m512d cdf = _mm512_mul_pd(half, _mm512_add_pd(one, _ZGVeN8v_erf(_mm512_mul_pd(xv, r2))));
      _mm512_storeu_pd(y + i, _mm512_mul_pd(xv, cdf));
      if (dy) {
        const __m512d e = _ZGVeN8v_exp(_mm512_mul_pd(mhalf, _mm512_mul_pd(xv, xv)));
        _mm512_storeu_pd(dy + i, _mm512_add_pd(cdf, _mm512_mul_pd(_mm512_mul_pd(xv, c), e)));
      }
    }
  }
#endif
#ifdef LOGLO_GELU_SIMD
  const __m256d half = _mm256_set1_pd(0.5);
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d r2 = _mm256_set1_pd(kInvSqrt2);
  const __m256d c = _mm256_set1_pd(kInvSqrt2Pi);
  const __m256d mhalf = _mm256_set1_pd(-0.5);
  for (; i + 4 <= n; i += 4) {
    const __m256d xv = _mm256_loadu_pd(x + i);
    const __m256d cdf = _mm256_mul_pd(half, _mm256_add_pd(one, _ZGVdN4v_erf(_mm256_mul_pd(xv, r2))));
    _mm256_storeu_pd(y + i, _mm256_mul_pd(xv, cdf));
    if (dy) {
      const __m256d e = _ZGVdN4v_exp(_mm256_mul_pd(mhalf, _mm256_mul_pd(xv, xv)));
      _mm256_storeu_pd(dy + i, _mm256_add_pd(cdf, _mm256_mul_pd(_mm256_mul_pd(xv, c), e)));
    }
  }
#endif
  for (; i < n; ++i) {
    const double xi = x[i];
    const double cdf = 0.5 * (1.0 + std::erf(xi * kInvSqrt2));
    y[i] = xi * cdf;
    if (dy) dy[i] = cdf + xi * kInvSqrt2Pi * std::exp(-0.5 * xi * xi);
  }
}

}  // namespace loglo::detail
