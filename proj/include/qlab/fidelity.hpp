#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qlab/ensemble.hpp"
#include "qlab/povm.hpp"

namespace qlab {

enum class KernelRule {
  GuessScore,  // +1 for naming the emitted state, -1 otherwise
  Overlap,     // |<guess|psi>|^2
  Overlap4,    // |<guess|psi>|^4
  Matrix,      // explicit table f(i, j)
};

std::string to_string(KernelRule rule);

/// Score table bound to one ensemble: f(i, j) for input i and guess j.
struct ScoreTable {
  RMatrix f;
  double f_min = 0.0;
  double f_max = 0.0;

  std::size_t inputs() const noexcept { return static_cast<std::size_t>(f.rows()); }
  std::size_t guesses() const noexcept { return static_cast<std::size_t>(f.cols()); }
};

/// Fixed guessing strategy plus a score rule.
class FidelityKernel {
 public:
  static FidelityKernel guess_score();
  static FidelityKernel overlap(std::vector<PureState> guesses);
  static FidelityKernel overlap4(std::vector<PureState> guesses);
  static FidelityKernel matrix(RMatrix scores);

  KernelRule rule() const noexcept { return rule_; }
  const std::vector<PureState>& guesses() const noexcept { return guesses_; }
  const RMatrix& matrix_scores() const noexcept { return scores_; }

  std::size_t guess_count(const Ensemble& ensemble) const;
  ScoreTable table(const Ensemble& ensemble) const;

 private:
  KernelRule rule_ = KernelRule::Matrix;
  std::vector<PureState> guesses_;
  RMatrix scores_;
};

/// F_j = sum_i p_i |psi_i><psi_i| f(i, j), one per guess.
struct ScoreOperators {
  std::vector<CMatrix> ops;

  std::size_t size() const noexcept { return ops.size(); }
  std::size_t dim() const noexcept { return ops.empty() ? 0 : static_cast<std::size_t>(ops.front().rows()); }
};

ScoreOperators score_operators(const Ensemble& ensemble, const FidelityKernel& kernel);
ScoreOperators score_operators(const Ensemble& ensemble, const ScoreTable& table);

/// F = sum_i p_i sum_j p(j|i) f(i, guess_j).
double mean_fidelity(const Povm& povm, const Ensemble& ensemble, const FidelityKernel& kernel);
double mean_fidelity(const Povm& povm, const Ensemble& ensemble, const ScoreTable& table);
/// sum_j Tr(F_{guess_j} a_j); equals mean_fidelity for every POVM.
double operator_fidelity(const Povm& povm, const ScoreOperators& ops);
double operator_fidelity(const RankOnePovm& povm, const ScoreOperators& ops);

struct OptimalityCertificate {
  CMatrix lambda;                     // sum_j F_{g_j} |b_j><b_j|
  double stationarity_residual = 0.0;  // max_j ||(F_{g_j} - lambda)|b_j>|| / ||b_j||
  double dual_min_eig = 0.0;          // min over guesses of lambda_min(herm(lambda) - F_m)
  double fidelity = 0.0;              // Re Tr lambda
  double anti_hermitian_residual = 0.0;
  double bound_constant = 0.0;        // max over guesses of ||F_m - herm(lambda)||_op

  bool certified(double tol) const noexcept {
    return stationarity_residual <= tol && dual_min_eig >= -tol;
  }
};

OptimalityCertificate certify(const RankOnePovm& povm, const ScoreOperators& ops);
OptimalityCertificate certify(const RankOnePovm& povm, const Ensemble& ensemble, const FidelityKernel& kernel);

struct OptimizerConfig {
  int max_iter = 20000;
  double tol = 1e-10;  // stationarity residual target
  std::uint64_t seed = 0;
  int restarts = 8;
};

struct OptimizeResult {
  Povm povm;
  RankOnePovm rank_one;
  OptimalityCertificate certificate;
  bool converged = false;
  int iterations = 0;  // of the selected restart
  int best_restart = 0;
  std::vector<double> fidelity_trace;  // per iteration, selected restart
  std::vector<std::string> warnings;
};

/// Fixed-point ascent a_j <- L^{-1/2} G_j a_j G_j L^{-1/2}, L = sum_k G_k a_k G_k,
/// on shifted operators G_j = F_j + c I, from Haar-random rank-one starts.
/// Non-convergence is reported through `converged`, with the best iterate kept.
OptimizeResult optimize_povm(const Ensemble& ensemble, const FidelityKernel& kernel, const OptimizerConfig& config = {});
OptimizeResult optimize_povm(const ScoreOperators& ops, const OptimizerConfig& config = {});
/// Same iteration from a given rank-one start (single run, no restarts).
OptimizeResult refine_povm(const ScoreOperators& ops, RankOnePovm start, const OptimizerConfig& config = {});

struct PerturbationGap {
  double gap = 0.0;           // F_max - F(a')
  double z_trace_sum = 0.0;   // sum_j Tr z_j
  double bound_constant = 0.0;
  double exact_shift = 0.0;   // sum_j Tr[(F_j - lambda) z_j]
  bool holds = false;         // gap <= C * z_trace_sum (+1e-9)
};

/// Compares a' (outcome j aligned with b_j and its guess) to a stationary
/// rank-one POVM via the split a'_j = X|b><b| + Y|b><b_perp| + h.c. + z_j.
PerturbationGap perturbation_gap(const Povm& povm_prime, const RankOnePovm& optimal, const Ensemble& ensemble,
                                 const FidelityKernel& kernel);

}  // namespace qlab
