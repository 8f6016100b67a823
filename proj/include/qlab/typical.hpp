#pragma once

#include <string>
#include <vector>

#include "qlab/block.hpp"
#include "qlab/ensemble.hpp"
#include "qlab/fidelity.hpp"

namespace qlab {

/// Product eigenvalues of rho^{(x)L'} sharing one occupation pattern of rho's spectrum.
struct TypeClass {
  std::vector<int> counts;     // occurrences of each eigenvalue of rho
  double log2_eigenvalue = 0;  // sum_i counts_i log2 lambda_i (-inf when a zero eigenvalue occurs)
  double multiplicity = 0;     // multinomial coefficient
  double weight = 0;           // multiplicity * eigenvalue
  bool kept = false;
};

/// Projector onto the span of product eigenvectors of rho^{(x)L'} whose
/// eigenvalue lies in the closed window [2^{-L'(H+eta')}, 2^{-L'(H-eta')}].
struct TypicalProjector {
  int length = 0;        // L'
  double eta = 0.0;      // eta'
  double entropy = 0.0;  // H(rho) in bits
  RVector spectrum;      // eigenvalues of rho, descending
  CMatrix eigenvectors;  // of rho
  std::vector<TypeClass> classes;
  double kept_dim = 0.0;     // exact while below 2^53
  double kept_weight = 0.0;  // Tr(Pi rho^{(x)L'})
  double epsilon = 0.0;      // summed weight of the classes outside the window
  double log2_lo = 0.0;      // -L'(H + eta')
  double log2_hi = 0.0;      // -L'(H - eta')
  std::vector<std::string> warnings;

  // Present only when d^{L'} is within the materialization cap.
  bool materialized = false;
  std::vector<std::size_t> kept_indices;  // flat product-eigenvector indices, ascending
  CMatrix basis;                          // d^{L'} x kept_dim, columns are kept product eigenvectors
  CMatrix rejected_basis;                 // remaining product eigenvectors

  std::size_t local_dim() const noexcept { return static_cast<std::size_t>(spectrum.size()); }
  std::size_t full_dim() const;  // d^{L'} (materialized only)
  CMatrix projector() const;     // materialized only
  double bound_lo() const;       // (1 - epsilon) 2^{L'(H - eta')}
  double bound_hi() const;       // 2^{L'(H + eta')}
};

/// Builds the type-class table for any L' up to 64 and materializes the
/// kept basis when d^{L'} <= dim_cap.
TypicalProjector typical_projector(const DensityMatrix& rho, int length, double eta,
                                   std::size_t dim_cap = kDefaultDimCap);

/// {Pi A_j Pi} plus an (I - Pi) outcome scored at f_min.
BlockPovm restrict_povm(const BlockPovm& block, const TypicalProjector& pi, double f_min);
BlockPovm restrict_povm(const BlockPovm& block, const TypicalProjector& pi, const Ensemble& ensemble,
                        const FidelityKernel& kernel);

/// ||Pi rho^{(x)L'} - rho^{(x)L'} Pi||_F on the materialized projector.
double commutation_residual(const TypicalProjector& pi, const DensityMatrix& rho);

}  // namespace qlab
