#include "qlab/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qlab/error.hpp"

namespace qlab {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::InvalidProbability: return "InvalidProbability";
    case Errc::InvalidState: return "InvalidState";
    case Errc::CapExceeded: return "CapExceeded";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::DecompositionFailure: return "DecompositionFailure";
    case Errc::NonConvergence: return "NonConvergence";
    case Errc::AlignmentError: return "AlignmentError";
    case Errc::IndexOutOfRange: return "IndexOutOfRange";
    case Errc::BadWeights: return "BadWeights";
    case Errc::UnknownDemo: return "UnknownDemo";
    case Errc::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

HermitianEigen eigh_descending(const CMatrix& hermitian) {
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(hermitian_part(hermitian));
  if (solver.info() != Eigen::Success) {
    fail(Errc::DecompositionFailure, "Hermitian eigensolver did not converge");
  }
  // Eigen returns ascending order.
  HermitianEigen out;
  out.values = solver.eigenvalues().reverse();
  out.vectors = solver.eigenvectors().rowwise().reverse();
  return out;
}

CMatrix hermitian_part(const CMatrix& m) { return 0.5 * (m + m.adjoint()); }

double hermiticity_residual(const CMatrix& m) { return (m - m.adjoint()).norm(); }

double min_eigenvalue(const CMatrix& m) {
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(hermitian_part(m), Eigen::EigenvaluesOnly);
  return solver.eigenvalues()(0);
}

double hermitian_op_norm(const CMatrix& m) {
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(hermitian_part(m), Eigen::EigenvaluesOnly);
  const auto& ev = solver.eigenvalues();
  return std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
}

CMatrix psd_factor(const CMatrix& m, double rel_cutoff) {
  const HermitianEigen eig = eigh_descending(m);
  const double top = std::max(eig.values.size() ? eig.values(0) : 0.0, 0.0);
  const double cutoff = rel_cutoff * top;
  Eigen::Index kept = 0;
  while (kept < eig.values.size() && eig.values(kept) > cutoff && eig.values(kept) > 0.0) ++kept;
  CMatrix w(m.rows(), kept);
  for (Eigen::Index c = 0; c < kept; ++c) {
    w.col(c) = eig.vectors.col(c) * std::sqrt(eig.values(c));
  }
  return w;
}

CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

CVector kron(const CVector& a, const CVector& b) {
  CVector out(a.size() * b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) out.segment(i * b.size(), b.size()) = a(i) * b;
  return out;
}

std::size_t checked_power(std::size_t d, int length, std::size_t cap) {
  if (length < 0) fail(Errc::ShapeMismatch, "negative block length");
  std::size_t out = 1;
  for (int l = 0; l < length; ++l) {
    if (d != 0 && out > cap / d) {
      fail(Errc::CapExceeded, std::to_string(d) + "^" + std::to_string(length) +
                                  " exceeds dimension cap " + std::to_string(cap));
    }
    out *= d;
  }
  if (out > cap) {
    fail(Errc::CapExceeded, std::to_string(d) + "^" + std::to_string(length) +
                                " exceeds dimension cap " + std::to_string(cap));
  }
  return out;
}

double binary_entropy_bits(double p) { return shannon_bits({p, 1.0 - p}); }

double shannon_bits(const std::vector<double>& probs) {
  double h = 0.0;
  for (double p : probs) {
    if (p > 0.0) h -= p * std::log2(p);
  }
  return h;
}

}  // namespace qlab
