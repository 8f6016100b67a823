#pragma once

#include <optional>
#include <vector>

#include "qlab/ensemble.hpp"
#include "qlab/fidelity.hpp"
#include "qlab/povm.hpp"

namespace qlab {

/// One outcome of a measurement on L copies. The element is stored as a
/// factor W with A = W W^dagger (a single column for rank-one outcomes),
/// which keeps product and square-root measurements at O(D) per outcome.
struct BlockOutcome {
  CMatrix factor;                      // D x r
  std::vector<std::size_t> guess;      // per-slot kernel guess indices (length L)
  std::optional<double> fixed_score;   // when set, every slot scores this value

  CMatrix element() const { return factor * factor.adjoint(); }
};

struct BlockPovm {
  std::size_t local_dim = 0;  // d
  int length = 0;             // L
  std::vector<BlockOutcome> outcomes;

  std::size_t dim() const;    // d^L
  std::size_t size() const noexcept { return outcomes.size(); }
};

/// ||sum_j A_j - I||_F; the D x D sum is materialized.
double completeness_residual(const BlockPovm& block);

/// Checks factor shapes and guess sequences against the kernel guess count.
void require_consistent(const BlockPovm& block, std::size_t guess_count);

/// All M^L products a_{j1} (x) ... (x) a_{jL}, outcome index base-M with j1 most significant.
BlockPovm product_povm(const Povm& povm, int length, std::size_t dim_cap = kDefaultDimCap);

/// A_j^{(k)} = Tr_{l != k}[(rho^{(x)(L-1)} (x) I_k) A_j].
CMatrix reduced_operator(const BlockPovm& block, std::size_t outcome, int slot, const DensityMatrix& rho);

enum class BlockFidelityPath { Reduced, Direct };

/// Maximum inputs^L * outcomes for the direct summation path.
inline constexpr double kDirectTermLimit = 1e7;

/// Per-slot averaged fidelity F_L. The reduced path goes through
/// reduced_operator; the direct path sums over every input sequence.
double block_fidelity(const BlockPovm& block, const Ensemble& ensemble, const FidelityKernel& kernel,
                      BlockFidelityPath path = BlockFidelityPath::Reduced);

/// Reduced-path fidelity from precomputed score operators / table.
double block_fidelity_reduced(const BlockPovm& block, const DensityMatrix& rho, const ScoreOperators& ops);
double block_fidelity_direct(const BlockPovm& block, const Ensemble& ensemble, const ScoreTable& table);

/// Probabilities Tr(rho^{(x)L} A_j) computed slot-wise without forming rho^{(x)L}.
std::vector<double> block_outcome_probabilities(const BlockPovm& block, const DensityMatrix& rho);

/// (rho (x) ... (x) rho) v using one slot application per factor; `skip`
/// leaves that slot untouched (pass -1 to apply on all).
CVector apply_product_operator(const CMatrix& op, const CVector& v, std::size_t d, int length, int skip = -1);

}  // namespace qlab
