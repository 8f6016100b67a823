#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qlab/linalg.hpp"

namespace qlab {

/// Normalized amplitude vector.
class PureState {
 public:
  /// Rejects zero vectors and non-finite amplitudes; otherwise requires
  /// unit norm within 1e-9.
  explicit PureState(CVector amplitudes);

  /// Rescales to unit norm. `correction` receives |1 - norm| when given.
  static PureState normalized(CVector amplitudes, double* correction = nullptr);

  const CVector& amplitudes() const noexcept { return amps_; }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(amps_.size()); }
  CMatrix projector() const { return amps_ * amps_.adjoint(); }

 private:
  CVector amps_;
};

/// rho together with its eigensystem (eigenvalues descending, clamped to [0, 1]).
struct DensityMatrix {
  CMatrix matrix;
  RVector eigenvalues;
  CMatrix eigenvectors;

  std::size_t dim() const noexcept { return static_cast<std::size_t>(matrix.rows()); }
  double max_eigenvalue() const { return eigenvalues(0); }
};

/// Validates Hermiticity, positivity and unit trace, then diagonalizes.
DensityMatrix make_density_matrix(const CMatrix& rho);

class Ensemble {
 public:
  Ensemble(std::vector<PureState> states, std::vector<double> probs);

  const std::vector<PureState>& states() const noexcept { return states_; }
  const std::vector<double>& probs() const noexcept { return probs_; }
  const PureState& state(std::size_t i) const { return states_.at(i); }
  double prob(std::size_t i) const { return probs_.at(i); }
  std::size_t size() const noexcept { return states_.size(); }
  std::size_t dim() const noexcept { return dim_; }

 private:
  std::vector<PureState> states_;
  std::vector<double> probs_;
  std::size_t dim_ = 0;
};

DensityMatrix density_matrix(const Ensemble& ensemble);

/// -sum lambda log2 lambda over eigenvalues above 1e-12.
double von_neumann_entropy(const DensityMatrix& rho);
double von_neumann_entropy(const RVector& eigenvalues);

/// i.i.d. product ensemble over dimension d^L; state index is the base-M
/// number (i_1 .. i_L) with i_1 most significant.
Ensemble tensor_ensemble(const Ensemble& ensemble, int length, std::size_t dim_cap = kDefaultDimCap);

/// 1 x 1 ... tensor power of a density matrix (dimension guarded by cap).
CMatrix tensor_power(const CMatrix& m, int length, std::size_t dim_cap = kDefaultDimCap);

namespace ensembles {

/// alpha|up> +- beta|down>, equiprobable, alpha^2 = alpha2.
Ensemble two_state(double alpha2);
/// |up>, (|up> +- sqrt3 |down>)/2 with p = 1/3 each.
Ensemble trine();
/// |up_z>, |down_z> with p = 1/2 each.
Ensemble z_pair();
/// Equal-weight sample of n Haar-random qubit states (uniform on the Bloch sphere).
Ensemble bloch_sample(std::size_t n, std::uint64_t seed);

}  // namespace ensembles

}  // namespace qlab
