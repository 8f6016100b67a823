// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.
#include "kernels_impl.hpp"

#if defined(QLAB_HAVE_AVX2_TABLE)

#include <immintrin.h>

namespace qlab::kernels::detail {
namespace {

// One __m256d holds two complex<double> as (re0, im0, re1, im1).
inline __m256d load2(const Complex* p) { return _mm256_loadu_pd(reinterpret_cast<const double*>(p)); }

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

Complex dotc_avx2(const Complex* x, const Complex* y, std::size_t n) {
  // same = sum x*y lane-wise -> (xr yr, xi yi, ...)
  // cross = sum x*swap(y)    -> (xr yi, xi yr, ...)
  __m256d same0 = _mm256_setzero_pd(), same1 = _mm256_setzero_pd();
  __m256d cross0 = _mm256_setzero_pd(), cross1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d xa = load2(x + i), ya = load2(y + i);
    const __m256d xb = load2(x + i + 2), yb = load2(y + i + 2);
    same0 = _mm256_fmadd_pd(xa, ya, same0);
    same1 = _mm256_fmadd_pd(xb, yb, same1);
    cross0 = _mm256_fmadd_pd(xa, _mm256_permute_pd(ya, 0b0101), cross0);
    cross1 = _mm256_fmadd_pd(xb, _mm256_permute_pd(yb, 0b0101), cross1);
  }
  for (; i + 2 <= n; i += 2) {
    const __m256d xa = load2(x + i), ya = load2(y + i);
    same0 = _mm256_fmadd_pd(xa, ya, same0);
    cross0 = _mm256_fmadd_pd(xa, _mm256_permute_pd(ya, 0b0101), cross0);
  }
  const __m256d same = _mm256_add_pd(same0, same1);
  const __m256d cross = _mm256_add_pd(cross0, cross1);
  // imaginary part: even lanes minus odd lanes of cross
  const __m256d sign = _mm256_set_pd(-1.0, 1.0, -1.0, 1.0);
  double re = hsum(same);
  double im = hsum(_mm256_mul_pd(cross, sign));
  for (; i < n; ++i) {
    const double xr = x[i].real(), xi = x[i].imag();
    const double yr = y[i].real(), yi = y[i].imag();
    re += xr * yr + xi * yi;
    im += xr * yi - xi * yr;
  }
  return {re, im};
}

void axpy_avx2(Complex a, const Complex* x, Complex* y, std::size_t n) {
  const __m256d ar = _mm256_set1_pd(a.real());
  // (-ai, +ai) per complex so that ai_signed * swap(x) = (-ai xi, ai xr)
  const __m256d ai = _mm256_set_pd(a.imag(), -a.imag(), a.imag(), -a.imag());
  double* yd = reinterpret_cast<double*>(y);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const __m256d xv = load2(x + i);
    __m256d yv = _mm256_loadu_pd(yd + 2 * i);
    yv = _mm256_fmadd_pd(ar, xv, yv);
    yv = _mm256_fmadd_pd(ai, _mm256_permute_pd(xv, 0b0101), yv);
    _mm256_storeu_pd(yd + 2 * i, yv);
  }
  for (; i < n; ++i) {
    const double xr = x[i].real(), xi = x[i].imag();
    y[i] = Complex(y[i].real() + a.real() * xr - a.imag() * xi,
                   y[i].imag() + a.real() * xi + a.imag() * xr);
  }
}

double norm_sq_avx2(const Complex* x, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd(), acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d a = load2(x + i), b = load2(x + i + 2);
    acc0 = _mm256_fmadd_pd(a, a, acc0);
    acc1 = _mm256_fmadd_pd(b, b, acc1);
  }
  for (; i + 2 <= n; i += 2) {
    const __m256d a = load2(x + i);
    acc0 = _mm256_fmadd_pd(a, a, acc0);
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += x[i].real() * x[i].real() + x[i].imag() * x[i].imag();
  return s;
}

}  // namespace

const KernelTable kAvx2Table{Isa::Avx2, &dotc_avx2, &axpy_avx2, &norm_sq_avx2};

}  // namespace qlab::kernels::detail

#endif
