#include "kernels_impl.hpp"

#if defined(QLAB_HAVE_NEON_TABLE)

#include <arm_neon.h>

namespace qlab::kernels::detail {
namespace {

// One float64x2_t holds a single complex<double> as (re, im).
inline float64x2_t load1(const Complex* p) { return vld1q_f64(reinterpret_cast<const double*>(p)); }

Complex dotc_neon(const Complex* x, const Complex* y, std::size_t n) {
  float64x2_t same = vdupq_n_f64(0.0);
  float64x2_t cross = vdupq_n_f64(0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const float64x2_t xv = load1(x + i);
    const float64x2_t yv = load1(y + i);
    same = vfmaq_f64(same, xv, yv);
    cross = vfmaq_f64(cross, xv, vextq_f64(yv, yv, 1));
  }
  return {vgetq_lane_f64(same, 0) + vgetq_lane_f64(same, 1),
          vgetq_lane_f64(cross, 0) - vgetq_lane_f64(cross, 1)};
}

void axpy_neon(Complex a, const Complex* x, Complex* y, std::size_t n) {
  const float64x2_t ar = vdupq_n_f64(a.real());
  const double ai_vals[2] = {-a.imag(), a.imag()};
  const float64x2_t ai = vld1q_f64(ai_vals);
  double* yd = reinterpret_cast<double*>(y);
  for (std::size_t i = 0; i < n; ++i) {
    const float64x2_t xv = load1(x + i);
    float64x2_t yv = vld1q_f64(yd + 2 * i);
    yv = vfmaq_f64(yv, ar, xv);
    yv = vfmaq_f64(yv, ai, vextq_f64(xv, xv, 1));
    vst1q_f64(yd + 2 * i, yv);
  }
}

double norm_sq_neon(const Complex* x, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const float64x2_t v = load1(x + i);
    acc = vfmaq_f64(acc, v, v);
  }
  return vgetq_lane_f64(acc, 0) + vgetq_lane_f64(acc, 1);
}

}  // namespace

const KernelTable kNeonTable{Isa::Neon, &dotc_neon, &axpy_neon, &norm_sq_neon};

}  // namespace qlab::kernels::detail

#endif
