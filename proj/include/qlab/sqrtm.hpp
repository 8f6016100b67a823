#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qlab/block.hpp"
#include "qlab/fidelity.hpp"
#include "qlab/povm.hpp"

namespace qlab {

/// N product directions |B_j> = |b_{j1}> (x) ... (x) |b_{jL}> built from the
/// unit directions of a rank-one POVM.
struct SampledBlocks {
  std::size_t local_dim = 0;
  int length = 0;
  std::vector<std::vector<std::size_t>> factor_indices;  // N x L, indices into the rank-one POVM
  std::vector<std::vector<std::size_t>> guess;           // N x L kernel guesses inherited from the factors
  CMatrix vectors;                                        // d^L x N, unit columns

  std::size_t size() const noexcept { return factor_indices.size(); }
};

struct SqrtLimits {
  std::size_t dim_cap = kDefaultDimCap;     // d^L
  std::size_t outcome_cap = 1u << 16;       // N
  std::size_t work_cap = std::size_t{1} << 24;  // d^L * N complex entries per dense buffer
};

/// Draws N i.i.d. index sequences with P(i) = w_i / d, w_i = <b_i|b_i>.
/// Seeded from derive_seed(seed, "sqrtm.sample", 0).
SampledBlocks sample_blocks(const RankOnePovm& rank1, int length, std::size_t count, std::uint64_t seed,
                            const SqrtLimits& limits = {});

/// Deterministic variant with caller-chosen index sequences.
SampledBlocks blocks_from_indices(const RankOnePovm& rank1, int length,
                                  std::vector<std::vector<std::size_t>> indices, const SqrtLimits& limits = {});

struct SqrtMeasurement {
  /// Outcome 0 is the complement C_0 = I - P_B (factor = null-space basis of B,
  /// possibly with zero columns); outcome j >= 1 is C_j = |c_j><c_j| with
  /// |c_j> = B^{-1/2}|B_j>.
  BlockPovm povm;
  CMatrix b;                      // sum_j |B_j><B_j|
  std::size_t dim_hb = 0;         // rank of B after the pseudo-inverse cutoff
  double cutoff = 0.0;            // 1e-10 * largest eigenvalue
  double gap_ratio = 0.0;         // smallest kept / largest dropped eigenvalue (inf when none dropped)
  bool rank_ambiguous = false;    // an eigenvalue sits within a factor 10 of the cutoff
  double completeness_residual = 0.0;
  std::vector<double> alpha_sq;   // <B_j|B^{-1/2}|B_j>^2
  std::vector<double> perp_norms; // Tr C_j - alpha_j^2
  std::vector<std::string> warnings;
};

/// Square-root measurement on span(B); `complement_guess` is the per-slot
/// kernel guess attached to C_0.
SqrtMeasurement build_sqrt_measurement(const SampledBlocks& blocks, std::size_t complement_guess = 0);

struct SqrtMeasurementReport {
  std::uint64_t seed = 0;
  int length = 0;
  std::size_t outcomes = 0;  // N
  std::size_t dim_hb = 0;
  double completeness_residual = 0.0;
  std::vector<double> alpha_sq;
  std::vector<double> perp_norms;
  double mean_perp = 0.0;
  double perp_sum = 0.0;
  double fidelity = 0.0;              // C_0 guesses the best blind guess on every slot
  double fidelity_pessimistic = 0.0;  // C_0 scored at f_min
  double fidelity_floor = 0.0;        // F_ref - C rho_max^{L-1} [sum perp + (d^L - dim_HB)]
  double entropy_per_slot = 0.0;      // bits
  double c0_weight = 0.0;             // Tr(rho^{(x)L} C_0)
  bool rank_ambiguous = false;
  std::vector<std::string> warnings;
};

/// Reference data for one rank-one POVM against one ensemble.
struct SqrtReference {
  double fidelity = 0.0;        // sum_j Tr(F_{g_j} |b_j><b_j|)
  double bound_constant = 0.0;  // max_m ||F_m - herm(lambda)||_op
  double rho_max = 0.0;
  std::size_t blind_guess = 0;  // argmax_m Tr F_m, lowest index on ties
  double f_min = 0.0;
};

SqrtReference sqrt_reference(const RankOnePovm& rank1, const Ensemble& ensemble, const FidelityKernel& kernel);

/// Scores one square-root measurement (fidelity via reduced operators,
/// output entropy, C_0 weight, fidelity floor).
SqrtMeasurementReport score_sqrt_measurement(const SqrtMeasurement& m, const DensityMatrix& rho,
                                             const ScoreOperators& ops, const SqrtReference& ref);

/// One report per seed, in seed order.
std::vector<SqrtMeasurementReport> evaluate_sqrt_measurement(const RankOnePovm& rank1, const Ensemble& ensemble,
                                                             const FidelityKernel& kernel, int length,
                                                             std::size_t count, const std::vector<std::uint64_t>& seeds,
                                                             const SqrtLimits& limits = {});

/// ceil(2^{L (2 log2 d + log2 rho_max + eta)}); CapExceeded above `cap`.
std::size_t threshold_outcomes(std::size_t d, double rho_max, int length, double eta,
                               std::size_t cap = std::size_t{1} << 16);

/// (d^L / N) ((d^L - 1) / N): expected mean of the perpendicular norms.
double expected_perp_bound(std::size_t dim, std::size_t count);
/// d^L (1 - (d^L - 1) / N): lower bound on the expected dimension of span(B).
double expected_dim_bound(std::size_t dim, std::size_t count);

}  // namespace qlab
