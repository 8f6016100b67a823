#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qlab/fidelity.hpp"
#include "qlab/sqrtm.hpp"
#include "qlab/typical.hpp"

namespace qlab {

/// Accepted L'-sequences in kept-basis coordinates, renormalized.
struct KeptEnsemble {
  Ensemble ensemble;
  std::vector<std::vector<std::size_t>> sequences;  // source input indices of each kept state
  bool sampled = false;
};

struct KeptEnsembleOptions {
  std::size_t enumerate_limit = 100000;  // inputs^L' at or below this are enumerated exactly
  std::size_t samples = 4096;
  std::uint64_t seed = 0;
};

KeptEnsemble kept_ensemble(const Ensemble& ensemble, const TypicalProjector& pi, const KeptEnsembleOptions& options = {});

/// f(s, g) = (1/L') sum_k f(s_k, g_k) for kept sequences s and every guess
/// sequence g (base-M index, first slot most significant).
RMatrix sequence_score_table(const ScoreTable& single, const std::vector<std::vector<std::size_t>>& sequences,
                             int length, std::size_t guess_cap = 1u << 16);

struct ProtocolConfig {
  ProtocolConfig(Ensemble e, FidelityKernel k) : ensemble(std::move(e)), kernel(std::move(k)) {}

  Ensemble ensemble;
  FidelityKernel kernel;
  int block_length = 1;      // L'
  int blocks = 1;            // L
  double eta_prime = 0.1;
  double eta = 0.5;
  std::optional<std::size_t> outcomes;  // N; empty selects ceil(2^{L(L'(H + 3 eta') + eta)})
  std::vector<std::uint64_t> seeds;
  double epsilon_target = 0.0;  // reported only
  std::uint64_t master_seed = 0;
  std::size_t dim_cap = kDefaultDimCap;
  SqrtLimits limits;
  KeptEnsembleOptions kept;
  OptimizerConfig optimizer;
};

struct ProtocolSeedReport {
  std::uint64_t seed = 0;
  SqrtMeasurementReport sqrtm;
  double fidelity_total = 0.0;      // (1 - eps') F_kept + eps' f_min
  double outcome_entropy_bits = 0.0;  // Shannon entropy of the N + 1 block outcomes
  double entropy_bits_total = 0.0;  // L h(eps') + outcome entropy
  double per_state_bits = 0.0;      // entropy_bits_total / (L L')
};

struct ProtocolReport {
  int block_length = 0;
  int blocks = 0;
  double eta_prime = 0.0;
  double eta = 0.0;
  std::size_t outcomes = 0;
  bool auto_outcomes = false;
  bool identity_filter = false;  // Pi = I, sqrtm ran on L L' raw states

  double fidelity_max = 0.0;  // single-copy optimum
  double f_min = 0.0;
  double f_max = 0.0;
  double entropy_vn = 0.0;
  double epsilon = 0.0;  // eps'
  double kept_dim = 0.0;
  double kept_weight = 0.0;
  double pass_fail_bits = 0.0;  // h(eps') per L'-block
  std::size_t kept_inputs = 0;
  bool kept_sampled = false;

  double reference_fidelity = 0.0;  // stationary reference measurement on one kept block
  double bound_constant = 0.0;
  double kept_rho_max = 0.0;
  bool reference_converged = false;

  double entropy_bound = 0.0;           // log2 N + L h(eps')
  double entropy_counting_bound = 0.0;  // log2(N + 1) + L h(eps')
  double epsilon_target = 0.0;

  std::vector<ProtocolSeedReport> seeds;
  double fidelity_mean = 0.0;
  double fidelity_stderr = 0.0;
  double per_state_bits_mean = 0.0;
  std::vector<std::string> warnings;
};

/// Filters L'-blocks onto the typical subspace, then measures L kept blocks
/// with a square-root measurement built from a stationary kept-space reference.
ProtocolReport run_protocol(const ProtocolConfig& config);

/// N = ceil(2^{L(L'(H + 3 eta') + eta)}).
std::size_t auto_outcomes(double entropy, int block_length, int blocks, double eta_prime, double eta,
                          std::size_t cap = std::size_t{1} << 16);

struct EntropyAccounting {
  double per_state_bits = 0.0;   // largest over seeds
  double bound_per_state = 0.0;  // H + 3 eta' + eta / L' + h(eps') / L'
  bool holds = false;
};

EntropyAccounting entropy_accounting(const ProtocolReport& report);

/// Lower bound on fidelity_total: F_max - eps'(f_max - f_min) - (1 - eps')(F_ref - floor).
double protocol_fidelity_floor(const ProtocolReport& report, const ProtocolSeedReport& seed);

}  // namespace qlab
