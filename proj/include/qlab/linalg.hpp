#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace qlab {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

/// Default ceiling on any materialized Hilbert-space dimension d^L.
inline constexpr std::size_t kDefaultDimCap = 4096;

/// Eigensystem of a Hermitian matrix, eigenvalues sorted descending and
/// eigenvectors stored column-wise in the same order.
struct HermitianEigen {
  RVector values;
  CMatrix vectors;
};

HermitianEigen eigh_descending(const CMatrix& hermitian);

CMatrix hermitian_part(const CMatrix& m);
double hermiticity_residual(const CMatrix& m);
double min_eigenvalue(const CMatrix& m);  // of the Hermitian part
double hermitian_op_norm(const CMatrix& m);  // largest |eigenvalue| of the Hermitian part

/// Factor W with W W^dagger = m, keeping eigen-directions above
/// rel_cutoff * max(largest eigenvalue, 0). Columns are ordered by
/// descending eigenvalue.
CMatrix psd_factor(const CMatrix& m, double rel_cutoff = 1e-12);

CMatrix kron(const CMatrix& a, const CMatrix& b);
CVector kron(const CVector& a, const CVector& b);

/// d^L, throwing CapExceeded when the result would exceed cap.
std::size_t checked_power(std::size_t d, int length, std::size_t cap);

double binary_entropy_bits(double p);
/// -sum p log2 p with 0 log 0 := 0.
double shannon_bits(const std::vector<double>& probs);

}  // namespace qlab
