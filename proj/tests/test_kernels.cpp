#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "qlab/error.hpp"
#include "qlab/kernels.hpp"
#include "qlab/rng.hpp"

using namespace qlab;

namespace {

std::vector<kernels::Isa> available_isas() {
  std::vector<kernels::Isa> out;
  for (kernels::Isa isa : {kernels::Isa::Scalar, kernels::Isa::Avx2, kernels::Isa::Neon}) {
    if (kernels::isa_available(isa)) out.push_back(isa);
  }
  return out;
}

CVector random_vector(std::size_t n, Rng& rng) {
  std::normal_distribution<double> g;
  CVector v(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = {g(rng), g(rng)};
  return v;
}

CMatrix random_matrix(std::size_t d, Rng& rng) {
  std::normal_distribution<double> g;
  CMatrix m(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = {g(rng), g(rng)};
  return m;
}

}  // namespace

TEST_CASE("scalar variant is always available and detection picks an available one") {
  CHECK(kernels::isa_available(kernels::Isa::Scalar));
  CHECK(kernels::isa_available(kernels::detect_best_isa()));
  CHECK(kernels::isa_name(kernels::Isa::Avx2) == "avx2");
}

TEST_CASE("unavailable variant is rejected") {
  for (kernels::Isa isa : {kernels::Isa::Avx2, kernels::Isa::Neon}) {
    if (!kernels::isa_available(isa)) CHECK_THROWS_AS((void)kernels::table(isa), Error);
  }
}

TEST_CASE("vector kernels agree with the scalar reference for every length") {
  Rng rng(11);
  const kernels::KernelTable& ref = kernels::table(kernels::Isa::Scalar);
  for (kernels::Isa isa : available_isas()) {
    const kernels::KernelTable& t = kernels::table(isa);
    for (std::size_t n = 0; n <= 37; ++n) {
      const CVector x = random_vector(n, rng);
      const CVector y = random_vector(n, rng);
      const double scale = 1.0 + x.squaredNorm() + y.squaredNorm();
      CHECK(std::abs(t.dotc(x.data(), y.data(), n) - ref.dotc(x.data(), y.data(), n)) <= 1e-12 * scale);
      CHECK(std::abs(t.dotc(x.data(), y.data(), n) - x.dot(y)) <= 1e-12 * scale);
      CHECK(t.norm_sq(x.data(), n) == doctest::Approx(x.squaredNorm()).epsilon(1e-13));
      const Complex a(0.3, -1.7);
      CVector y1 = y;
      CVector y2 = y;
      t.axpy(a, x.data(), y1.data(), n);
      ref.axpy(a, x.data(), y2.data(), n);
      CHECK((y1 - y2).norm() <= 1e-13 * scale);
      CHECK((y1 - (y + a * x)).norm() <= 1e-13 * scale);
    }
  }
}

TEST_CASE("slot application matches the dense embedded operator") {
  Rng rng(5);
  for (kernels::Isa isa : available_isas()) {
    kernels::ScopedIsa scoped(isa);
    for (int d : {2, 3}) {
      for (int length = 1; length <= 4; ++length) {
        const auto dim = static_cast<std::size_t>(std::pow(d, length));
        const CVector v = random_vector(dim, rng);
        const CVector w = random_vector(dim, rng);
        const CMatrix op = random_matrix(static_cast<std::size_t>(d), rng);
        for (int slot = 0; slot < length; ++slot) {
          CVector out(static_cast<Eigen::Index>(dim));
          kernels::apply_slot(op, {v.data(), dim}, {out.data(), dim}, static_cast<std::size_t>(d), length, slot);
          const CVector expected = oracle::embed(op, d, length, slot) * v;
          CHECK((out - expected).norm() <= 1e-12 * (1.0 + expected.norm()));

          const CMatrix reduced = kernels::slot_reduced({v.data(), dim}, {w.data(), dim}, static_cast<std::size_t>(d), length, slot);
          const CMatrix expected_reduced = oracle::partial_trace_keep(v * w.adjoint(), d, length, slot);
          CHECK((reduced - expected_reduced).norm() <= 1e-12 * (1.0 + expected_reduced.norm()));
        }
      }
    }
  }
}

TEST_CASE("scoped override restores the previous variant") {
  const kernels::Isa before = kernels::active_isa();
  {
    kernels::ScopedIsa scoped(kernels::Isa::Scalar);
    CHECK(kernels::active_isa() == kernels::Isa::Scalar);
  }
  CHECK(kernels::active_isa() == before);
}
