#pragma once

// Data-parallel inner loops over complex amplitude vectors.
//
// Every kernel has a scalar reference implementation plus SIMD variants
// (AVX2+FMA on x86-64, NEON on AArch64). The variant is picked once at
// startup from the host CPU, can be forced with QLAB_SIMD=scalar|avx2|neon,
// and is switchable at runtime for equivalence testing.

#include <cstddef>
#include <span>
#include <string_view>

#include "qlab/linalg.hpp"

namespace qlab::kernels {

enum class Isa { Scalar, Avx2, Neon };

struct KernelTable {
  Isa isa;
  // sum_i conj(x_i) * y_i
  Complex (*dotc)(const Complex* x, const Complex* y, std::size_t n);
  // y_i += a * x_i
  void (*axpy)(Complex a, const Complex* x, Complex* y, std::size_t n);
  // sum_i |x_i|^2
  double (*norm_sq)(const Complex* x, std::size_t n);
};

std::string_view isa_name(Isa isa) noexcept;
bool isa_available(Isa isa) noexcept;
Isa detect_best_isa() noexcept;

/// Table for a specific variant; throws Error(ConfigError)
/// when the variant is not compiled in or not supported by this CPU.
const KernelTable& table(Isa isa);
const KernelTable& active();
Isa active_isa() noexcept;
void set_active_isa(Isa isa);

/// RAII override of the active variant, restored on scope exit.
class ScopedIsa {
 public:
  explicit ScopedIsa(Isa isa) : previous_(active_isa()) { set_active_isa(isa); }
  ~ScopedIsa() { set_active_isa(previous_); }
  ScopedIsa(const ScopedIsa&) = delete;
  ScopedIsa& operator=(const ScopedIsa&) = delete;

 private:
  Isa previous_;
};

Complex dotc(std::span<const Complex> x, std::span<const Complex> y);
void axpy(Complex a, std::span<const Complex> x, std::span<Complex> y);
double norm_sq(std::span<const Complex> x);

// Tensor-slot operations. A vector over (C^d)^{(x) L} is stored with slot 0
// most significant, i.e. the layout produced by repeated kron().

/// out = (I (x) .. (x) op_slot (x) .. (x) I) in. `in` and `out` must not alias.
void apply_slot(const CMatrix& op, std::span<const Complex> in, std::span<Complex> out,
                std::size_t d, int length, int slot);

/// R(a, b) = sum over all other slots of left[.., a, ..] * conj(right[.., b, ..]),
/// i.e. Tr_{other slots} |left><right|.
CMatrix slot_reduced(std::span<const Complex> left, std::span<const Complex> right,
                     std::size_t d, int length, int slot);

}  // namespace qlab::kernels
