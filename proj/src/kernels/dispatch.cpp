#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <string>

#include "kernels_impl.hpp"
#include "qlab/error.hpp"

namespace qlab::kernels {
namespace {

bool cpu_supports(Isa isa) noexcept {
  switch (isa) {
    case Isa::Scalar:
      return true;
    case Isa::Avx2:
#if defined(QLAB_HAVE_AVX2_TABLE) && (defined(__GNUC__) || defined(__clang__))
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::Neon:
#if defined(QLAB_HAVE_NEON_TABLE)
      return true;
#else
      return false;
#endif
  }
  return false;
}

const KernelTable* table_ptr(Isa isa) noexcept {
  switch (isa) {
    case Isa::Scalar: return &detail::kScalarTable;
#if defined(QLAB_HAVE_AVX2_TABLE)
    case Isa::Avx2: return &detail::kAvx2Table;
#endif
#if defined(QLAB_HAVE_NEON_TABLE)
    case Isa::Neon: return &detail::kNeonTable;
#endif
    default: return nullptr;
  }
}

Isa initial_isa() noexcept {
  if (const char* forced = std::getenv("QLAB_SIMD")) {
    const std::string name(forced);
    for (Isa isa : {Isa::Scalar, Isa::Avx2, Isa::Neon}) {
      if (name == isa_name(isa) && isa_available(isa)) return isa;
    }
  }
  return detect_best_isa();
}

std::atomic<const KernelTable*>& active_slot() {
  static std::atomic<const KernelTable*> slot{table_ptr(initial_isa())};
  return slot;
}

}  // namespace

std::string_view isa_name(Isa isa) noexcept {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
    case Isa::Neon: return "neon";
  }
  return "unknown";
}

bool isa_available(Isa isa) noexcept { return table_ptr(isa) != nullptr && cpu_supports(isa); }

Isa detect_best_isa() noexcept {
  if (isa_available(Isa::Avx2)) return Isa::Avx2;
  if (isa_available(Isa::Neon)) return Isa::Neon;
  return Isa::Scalar;
}

const KernelTable& table(Isa isa) {
  if (!isa_available(isa)) {
    fail(Errc::ConfigError, "SIMD variant '" + std::string(isa_name(isa)) + "' is not available");
  }
  return *table_ptr(isa);
}

const KernelTable& active() { return *active_slot().load(std::memory_order_acquire); }

Isa active_isa() noexcept { return active_slot().load(std::memory_order_acquire)->isa; }

void set_active_isa(Isa isa) { active_slot().store(&table(isa), std::memory_order_release); }

Complex dotc(std::span<const Complex> x, std::span<const Complex> y) {
  if (x.size() != y.size()) fail(Errc::DimensionMismatch, "dotc length mismatch");
  return active().dotc(x.data(), y.data(), x.size());
}

void axpy(Complex a, std::span<const Complex> x, std::span<Complex> y) {
  if (x.size() != y.size()) fail(Errc::DimensionMismatch, "axpy length mismatch");
  active().axpy(a, x.data(), y.data(), x.size());
}

double norm_sq(std::span<const Complex> x) { return active().norm_sq(x.data(), x.size()); }

void apply_slot(const CMatrix& op, std::span<const Complex> in, std::span<Complex> out,
                std::size_t d, int length, int slot) {
  if (slot < 0 || slot >= length) fail(Errc::IndexOutOfRange, "slot out of range");
  if (static_cast<std::size_t>(op.rows()) != d || static_cast<std::size_t>(op.cols()) != d) {
    fail(Errc::DimensionMismatch, "slot operator must be d x d");
  }
  std::size_t stride = 1;
  for (int l = slot + 1; l < length; ++l) stride *= d;
  const std::size_t block = stride * d;
  if (in.size() != out.size() || in.size() % block != 0) {
    fail(Errc::DimensionMismatch, "vector length is not d^L");
  }
  const std::size_t outer = in.size() / block;
  const KernelTable& k = active();
  if (stride == 1) {
    for (std::size_t o = 0; o < outer; ++o) {
      const Complex* src = in.data() + o * block;
      Complex* dst = out.data() + o * block;
      for (std::size_t a = 0; a < d; ++a) {
        Complex acc = 0.0;
        for (std::size_t b = 0; b < d; ++b) acc += op(a, b) * src[b];
        dst[a] = acc;
      }
    }
    return;
  }
  for (std::size_t o = 0; o < outer; ++o) {
    const Complex* src = in.data() + o * block;
    Complex* dst = out.data() + o * block;
    for (std::size_t a = 0; a < d; ++a) {
      Complex* row = dst + a * stride;
      std::fill(row, row + stride, Complex(0.0));
      for (std::size_t b = 0; b < d; ++b) {
        const Complex c = op(a, b);
        if (c != Complex(0.0)) k.axpy(c, src + b * stride, row, stride);
      }
    }
  }
}

CMatrix slot_reduced(std::span<const Complex> left, std::span<const Complex> right,
                     std::size_t d, int length, int slot) {
  if (slot < 0 || slot >= length) fail(Errc::IndexOutOfRange, "slot out of range");
  std::size_t stride = 1;
  for (int l = slot + 1; l < length; ++l) stride *= d;
  const std::size_t block = stride * d;
  if (left.size() != right.size() || left.size() % block != 0) {
    fail(Errc::DimensionMismatch, "vector length is not d^L");
  }
  const std::size_t outer = left.size() / block;
  const KernelTable& k = active();
  CMatrix r = CMatrix::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  for (std::size_t o = 0; o < outer; ++o) {
    const Complex* l = left.data() + o * block;
    const Complex* rr = right.data() + o * block;
    for (std::size_t a = 0; a < d; ++a) {
      for (std::size_t b = 0; b < d; ++b) {
        r(a, b) += k.dotc(rr + b * stride, l + a * stride, stride);
      }
    }
  }
  return r;
}

}  // namespace qlab::kernels
