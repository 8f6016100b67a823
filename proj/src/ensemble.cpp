#include "qlab/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qlab/error.hpp"
#include "qlab/rng.hpp"

namespace qlab {
namespace {

constexpr double kNormTol = 1e-9;
constexpr double kProbTol = 1e-9;
constexpr double kEigenFloor = 1e-12;

void check_finite(const CVector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v(i).real()) || !std::isfinite(v(i).imag())) {
      fail(Errc::InvalidState, "non-finite amplitude");
    }
  }
}

}  // namespace

PureState::PureState(CVector amplitudes) : amps_(std::move(amplitudes)) {
  if (amps_.size() < 1) fail(Errc::InvalidState, "state dimension must be at least 1");
  check_finite(amps_);
  const double norm = amps_.norm();
  if (std::abs(norm - 1.0) > kNormTol) {
    fail(Errc::InvalidState, "state norm " + std::to_string(norm) + " differs from 1");
  }
}

PureState PureState::normalized(CVector amplitudes, double* correction) {
  if (amplitudes.size() < 1) fail(Errc::InvalidState, "state dimension must be at least 1");
  check_finite(amplitudes);
  const double norm = amplitudes.norm();
  if (!(norm > 0.0)) fail(Errc::InvalidState, "zero state vector");
  if (correction) *correction = std::abs(1.0 - norm);
  amplitudes /= norm;
  return PureState(std::move(amplitudes));
}

DensityMatrix make_density_matrix(const CMatrix& rho) {
  if (rho.rows() != rho.cols() || rho.rows() < 1) fail(Errc::DimensionMismatch, "density matrix must be square");
  if (hermiticity_residual(rho) > 1e-9) fail(Errc::InvalidState, "density matrix is not Hermitian");
  const double trace = rho.trace().real();
  if (std::abs(trace - 1.0) > 1e-9) fail(Errc::InvalidState, "density matrix trace " + std::to_string(trace));
  DensityMatrix out;
  out.matrix = hermitian_part(rho);
  HermitianEigen eig = eigh_descending(out.matrix);
  for (Eigen::Index i = 0; i < eig.values.size(); ++i) {
    const double v = eig.values(i);
    if (v < -1e-10 || v > 1.0 + 1e-10) fail(Errc::InvalidState, "density matrix eigenvalue out of [0,1]");
    eig.values(i) = std::clamp(v, 0.0, 1.0);
  }
  out.eigenvalues = std::move(eig.values);
  out.eigenvectors = std::move(eig.vectors);
  return out;
}

Ensemble::Ensemble(std::vector<PureState> states, std::vector<double> probs)
    : states_(std::move(states)), probs_(std::move(probs)) {
  if (states_.empty()) fail(Errc::InvalidProbability, "ensemble has no states");
  if (states_.size() != probs_.size()) fail(Errc::InvalidProbability, "one probability per state required");
  dim_ = states_.front().dim();
  double total = 0.0;
  for (std::size_t i = 0; i < states_.size(); ++i) {
    if (states_[i].dim() != dim_) fail(Errc::DimensionMismatch, "ensemble states differ in dimension");
    const double p = probs_[i];
    if (!std::isfinite(p) || p < 0.0 || p > 1.0) fail(Errc::InvalidProbability, "probability outside [0,1]");
    total += p;
  }
  if (std::abs(total - 1.0) > kProbTol) {
    fail(Errc::InvalidProbability, "probabilities sum to " + std::to_string(total));
  }
}

DensityMatrix density_matrix(const Ensemble& ensemble) {
  const auto d = static_cast<Eigen::Index>(ensemble.dim());
  CMatrix rho = CMatrix::Zero(d, d);
  for (std::size_t i = 0; i < ensemble.size(); ++i) {
    const CVector& v = ensemble.state(i).amplitudes();
    rho.noalias() += ensemble.prob(i) * (v * v.adjoint());
  }
  return make_density_matrix(rho);
}

double von_neumann_entropy(const RVector& eigenvalues) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) {
    const double v = eigenvalues(i);
    if (v > kEigenFloor) h -= v * std::log2(v);
  }
  return h;
}

double von_neumann_entropy(const DensityMatrix& rho) { return von_neumann_entropy(rho.eigenvalues); }

Ensemble tensor_ensemble(const Ensemble& ensemble, int length, std::size_t dim_cap) {
  if (length < 1) fail(Errc::ShapeMismatch, "block length must be positive");
  checked_power(ensemble.dim(), length, dim_cap);
  std::vector<PureState> states{ensemble.states()};
  std::vector<double> probs{ensemble.probs()};
  for (int l = 1; l < length; ++l) {
    std::vector<PureState> next_states;
    std::vector<double> next_probs;
    next_states.reserve(states.size() * ensemble.size());
    for (std::size_t a = 0; a < states.size(); ++a) {
      for (std::size_t b = 0; b < ensemble.size(); ++b) {
        next_states.push_back(PureState::normalized(kron(states[a].amplitudes(), ensemble.state(b).amplitudes())));
        next_probs.push_back(probs[a] * ensemble.prob(b));
      }
    }
    states = std::move(next_states);
    probs = std::move(next_probs);
  }
  return Ensemble(std::move(states), std::move(probs));
}

CMatrix tensor_power(const CMatrix& m, int length, std::size_t dim_cap) {
  if (length < 1) fail(Errc::ShapeMismatch, "tensor power must be positive");
  checked_power(static_cast<std::size_t>(m.rows()), length, dim_cap);
  CMatrix out = m;
  for (int l = 1; l < length; ++l) out = kron(out, m);
  return out;
}

namespace ensembles {

Ensemble two_state(double alpha2) {
  if (!(alpha2 >= 0.0 && alpha2 <= 1.0)) fail(Errc::InvalidState, "alpha^2 must lie in [0,1]");
  const double a = std::sqrt(alpha2);
  const double b = std::sqrt(1.0 - alpha2);
  CVector s1(2), s2(2);
  s1 << a, b;
  s2 << a, -b;
  return Ensemble({PureState::normalized(s1), PureState::normalized(s2)}, {0.5, 0.5});
}

Ensemble trine() {
  const double h = std::sqrt(3.0) / 2.0;
  CVector s1(2), s2(2), s3(2);
  s1 << 1.0, 0.0;
  s2 << 0.5, h;
  s3 << 0.5, -h;
  const double p = 1.0 / 3.0;
  return Ensemble({PureState::normalized(s1), PureState::normalized(s2), PureState::normalized(s3)}, {p, p, 1.0 - 2.0 * p});
}

Ensemble z_pair() {
  CVector up(2), down(2);
  up << 1.0, 0.0;
  down << 0.0, 1.0;
  return Ensemble({PureState(up), PureState(down)}, {0.5, 0.5});
}

Ensemble bloch_sample(std::size_t n, std::uint64_t seed) {
  if (n == 0) fail(Errc::InvalidProbability, "sample count must be positive");
  Rng rng(derive_seed(seed, "bloch", 0));
  std::vector<PureState> states;
  states.reserve(n);
  for (std::size_t i = 0; i < n; ++i) states.push_back(PureState::normalized(haar_vector(2, rng)));
  // Equal weights; absorb rounding into the last entry so the sum is exactly 1.
  std::vector<double> probs(n, 1.0 / static_cast<double>(n));
  double head = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) head += probs[i];
  probs.back() = 1.0 - head;
  return Ensemble(std::move(states), std::move(probs));
}

}  // namespace ensembles

}  // namespace qlab
