#pragma once

#include <string>
#include <vector>

#include "qlab/ensemble.hpp"
#include "qlab/linalg.hpp"
#include "qlab/rng.hpp"

namespace qlab {

/// Measurement elements a_j with the kernel guess attached to each outcome.
/// `guess[j]` indexes the fidelity kernel's guess list; `labels[j]` is a
/// free-form outcome identifier carried through refinement.
struct Povm {
  std::vector<CMatrix> elements;
  std::vector<std::size_t> guess;
  std::vector<std::string> labels;

  /// Outcome j guesses j, labels "0", "1", ...
  static Povm from_elements(std::vector<CMatrix> elements);

  std::size_t size() const noexcept { return elements.size(); }
  std::size_t dim() const noexcept { return elements.empty() ? 0 : static_cast<std::size_t>(elements.front().rows()); }
};

/// Rank-one form |b_j><b_j| with unnormalized vectors b_j.
struct RankOnePovm {
  std::vector<CVector> vectors;
  std::vector<std::size_t> parent;  // outcome of the POVM this piece came from
  std::vector<std::size_t> guess;
  std::vector<std::string> labels;

  std::size_t size() const noexcept { return vectors.size(); }
  std::size_t dim() const noexcept { return vectors.empty() ? 0 : static_cast<std::size_t>(vectors.front().size()); }
  double weight(std::size_t j) const { return vectors.at(j).squaredNorm(); }
  std::vector<double> weights() const;
  CVector direction(std::size_t j) const { return vectors.at(j) / vectors.at(j).norm(); }
  Povm to_povm() const;
};

struct PovmValidation {
  double completeness_residual = 0.0;
  std::vector<double> min_eigenvalues;
  std::vector<double> hermiticity_residuals;
  std::vector<std::string> failures;

  bool ok() const noexcept { return failures.empty(); }
};

PovmValidation validate(const Povm& povm);

/// Checks shape, completeness (1e-8) and positivity; throws ShapeMismatch /
/// InvalidState with the validation failures.
void require_valid(const Povm& povm);

/// Splits every element by eigendecomposition, keeping eigenvalues above
/// 1e-12 relative to the element's largest one.
RankOnePovm refine_to_rank_one(const Povm& povm);

/// Drops elements whose trace is below `trace_cutoff`; messages describing
/// the dropped outcomes are appended to `warnings`.
Povm drop_zero_elements(const Povm& povm, std::vector<std::string>& warnings, double trace_cutoff = 1e-10);

struct OutcomeDistribution {
  std::vector<double> probs;  // p_j
  RMatrix conditional;        // (i, j) -> p(j | i)
};

OutcomeDistribution outcome_distribution(const Povm& povm, const Ensemble& ensemble);

double shannon_entropy(const OutcomeDistribution& dist);

/// H(inputs) - H(inputs | outcome) from the joint table p_i p(j|i).
double mutual_information(const Povm& povm, const Ensemble& ensemble);

/// Haar-random rank-one POVM with `outcomes` elements: random directions
/// orthonormalized as S^{-1/2}|v_j> with S = sum |v_j><v_j|.
RankOnePovm random_rank_one_povm(std::size_t dim, std::size_t outcomes, Rng& rng);

/// Projective measurement onto the computational basis.
Povm computational_basis_povm(std::size_t dim);

/// sigma_x eigenbasis {|+x><+x|, |-x><-x|}.
Povm sigma_x_povm();

}  // namespace qlab
