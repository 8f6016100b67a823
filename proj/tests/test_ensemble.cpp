#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "qlab/ensemble.hpp"
#include "qlab/error.hpp"
#include "qlab/rng.hpp"
#include "support.hpp"

using namespace qlab;

namespace {

CMatrix haar_unitary(std::size_t d, Rng& rng) {
  CMatrix m(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  for (Eigen::Index c = 0; c < m.cols(); ++c) m.col(c) = haar_vector(d, rng);
  Eigen::HouseholderQR<CMatrix> qr(m);
  return qr.householderQ();
}

}  // namespace

TEST_CASE("two-state ensemble with alpha^2 = 0.9 has rho = diag(0.9, 0.1)") {
  const DensityMatrix rho = density_matrix(ensembles::two_state(0.9));
  CMatrix expected = CMatrix::Zero(2, 2);
  expected(0, 0) = 0.9;
  expected(1, 1) = 0.1;
  CHECK((rho.matrix - expected).norm() < 1e-12);
  CHECK(rho.max_eigenvalue() == doctest::Approx(0.9).epsilon(1e-12));
  CHECK(von_neumann_entropy(rho) == doctest::Approx(0.468996).epsilon(1e-6));
  CHECK(von_neumann_entropy(rho) ==
        doctest::Approx(-0.9 * std::log2(0.9) - 0.1 * std::log2(0.1)).epsilon(1e-12));
}

TEST_CASE("trine ensemble is maximally mixed") {
  const DensityMatrix rho = density_matrix(ensembles::trine());
  CHECK((rho.matrix - 0.5 * CMatrix::Identity(2, 2)).norm() < 1e-12);
  CHECK(von_neumann_entropy(rho) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("single pure state gives a projector with zero entropy") {
  const Ensemble e({PureState(CVector::Unit(2, 0))}, {1.0});
  const DensityMatrix rho = density_matrix(e);
  CHECK(rho.eigenvalues(0) == doctest::Approx(1.0));
  CHECK(rho.eigenvalues(1) == doctest::Approx(0.0));
  CHECK(von_neumann_entropy(rho) == 0.0);
}

TEST_CASE("density matrix reconstructs from its eigensystem with unit trace") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const DensityMatrix rho = density_matrix(ensembles::bloch_sample(7, seed));
    const CMatrix rebuilt = rho.eigenvectors * rho.eigenvalues.cast<Complex>().asDiagonal() * rho.eigenvectors.adjoint();
    CHECK((rebuilt - rho.matrix).norm() < 1e-9);
    CHECK(std::abs(rho.matrix.trace() - Complex(1.0)) < 1e-10);
    CHECK(rho.eigenvalues(0) >= rho.eigenvalues(1));
  }
}

TEST_CASE("tensor ensemble of the trine has 9 states in dimension 4") {
  const Ensemble t = tensor_ensemble(ensembles::trine(), 2);
  CHECK(t.size() == 9);
  CHECK(t.dim() == 4);
  for (double p : t.probs()) CHECK(p == doctest::Approx(1.0 / 9.0));
  const Ensemble same = tensor_ensemble(ensembles::trine(), 1);
  CHECK(same.size() == 3);
  CHECK((same.state(2).amplitudes() - ensembles::trine().state(2).amplitudes()).norm() == 0.0);
}

TEST_CASE("entropy is additive over tensor powers") {
  for (const Ensemble& e : {ensembles::two_state(0.9), ensembles::trine(), ensembles::bloch_sample(5, 9)}) {
    const double h = von_neumann_entropy(density_matrix(e));
    for (int length = 1; length <= 5; ++length) {
      const DensityMatrix product = density_matrix(tensor_ensemble(e, length));
      CHECK(von_neumann_entropy(product) == doctest::Approx(length * h).epsilon(1e-8));
      CHECK((product.matrix - oracle::kron_power(density_matrix(e).matrix, length)).norm() < 1e-10);
    }
  }
  const DensityMatrix three = density_matrix(tensor_ensemble(ensembles::two_state(0.9), 3));
  CHECK(von_neumann_entropy(three) == doctest::Approx(3 * 0.4689955935892812).epsilon(1e-10));
}

TEST_CASE("density matrix is unitarily covariant") {
  Rng rng(42);
  for (int trial = 0; trial < 5; ++trial) {
    const std::size_t d = 2 + static_cast<std::size_t>(trial % 3);
    std::vector<PureState> states;
    std::vector<PureState> rotated;
    const CMatrix u = haar_unitary(d, rng);
    for (int i = 0; i < 4; ++i) {
      const CVector v = haar_vector(d, rng);
      states.emplace_back(v);
      rotated.push_back(PureState::normalized(u * v));
    }
    const std::vector<double> p = {0.1, 0.2, 0.3, 0.4};
    const DensityMatrix a = density_matrix(Ensemble(states, p));
    const DensityMatrix b = density_matrix(Ensemble(rotated, p));
    CHECK((u * a.matrix * u.adjoint() - b.matrix).norm() < 1e-9);
    CHECK(std::abs(von_neumann_entropy(a) - von_neumann_entropy(b)) < 1e-10);
  }
}

TEST_CASE("invalid inputs are rejected with specific codes") {
  CHECK(code_of([] { (void)PureState(CVector::Ones(2)); }) == Errc::InvalidState);
  CHECK(code_of([] { (void)PureState(CVector::Zero(2)); }) == Errc::InvalidState);
  CHECK(code_of([] {
          (void)Ensemble({PureState(CVector::Unit(2, 0)), PureState(CVector::Unit(2, 1))}, {0.5, 0.6});
        }) == Errc::InvalidProbability);
  CHECK(code_of([] {
          (void)Ensemble({PureState(CVector::Unit(2, 0)), PureState(CVector::Unit(3, 1))}, {0.5, 0.5});
        }) == Errc::DimensionMismatch);
  CHECK(code_of([] { (void)tensor_ensemble(ensembles::trine(), 13); }) == Errc::CapExceeded);
  CMatrix bad = CMatrix::Identity(2, 2);
  CHECK(code_of([&] { (void)make_density_matrix(bad); }) == Errc::InvalidState);
}

TEST_CASE("normalization on request reports the correction") {
  double correction = 0.0;
  const PureState s = PureState::normalized(CVector::Ones(2), &correction);
  CHECK(s.amplitudes().norm() == doctest::Approx(1.0));
  CHECK(correction == doctest::Approx(std::sqrt(2.0) - 1.0));
}
