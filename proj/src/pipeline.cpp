#include "qlab/pipeline.hpp"

#include <cmath>
#include <string>

#include "qlab/error.hpp"
#include "qlab/rng.hpp"
#include "qlab/stats.hpp"

namespace qlab {
namespace {

constexpr double kNegligible = 1e-14;

std::vector<std::size_t> digits_of(std::size_t index, std::size_t base, int length) {
  std::vector<std::size_t> digits(static_cast<std::size_t>(length));
  for (int l = length - 1; l >= 0; --l) {
    digits[static_cast<std::size_t>(l)] = index % base;
    index /= base;
  }
  return digits;
}

double power_or_inf(std::size_t base, int length) {
  return std::pow(static_cast<double>(base), static_cast<double>(length));
}

CVector product_state(const Ensemble& ensemble, const std::vector<std::size_t>& seq) {
  CVector v = ensemble.state(seq[0]).amplitudes();
  for (std::size_t l = 1; l < seq.size(); ++l) v = kron(v, ensemble.state(seq[l]).amplitudes());
  return v;
}

/// Largest L (given L') and largest L' (given L) whose effective dimension fits.
std::string feasibility_hint(double kept_dim, int blocks, std::size_t cap) {
  int best_l = 0;
  while (best_l < 64 && std::pow(kept_dim, best_l + 1) <= static_cast<double>(cap)) ++best_l;
  return "kept_dim^L = " + std::to_string(kept_dim) + "^" + std::to_string(blocks) + " exceeds the cap " +
         std::to_string(cap) + "; largest feasible L at this L' is " + std::to_string(best_l);
}

void finalize(ProtocolReport& report, const ProtocolConfig& config) {
  RunningStats fidelity;
  RunningStats bits;
  const double states = static_cast<double>(config.blocks) * config.block_length;
  for (ProtocolSeedReport& s : report.seeds) {
    s.entropy_bits_total = config.blocks * report.pass_fail_bits + s.outcome_entropy_bits;
    s.per_state_bits = s.entropy_bits_total / states;
    fidelity.add(s.fidelity_total);
    bits.add(s.per_state_bits);
  }
  report.fidelity_mean = fidelity.mean();
  report.fidelity_stderr = fidelity.stderr_mean();
  report.per_state_bits_mean = bits.mean();
  const double n = static_cast<double>(report.outcomes);
  report.entropy_bound = std::log2(n) + config.blocks * report.pass_fail_bits;
  report.entropy_counting_bound = std::log2(n + 1.0) + config.blocks * report.pass_fail_bits;
}

}  // namespace

KeptEnsemble kept_ensemble(const Ensemble& ensemble, const TypicalProjector& pi, const KeptEnsembleOptions& options) {
  if (!pi.materialized) fail(Errc::CapExceeded, "kept ensemble needs a materialized typical projector");
  if (ensemble.dim() != pi.local_dim()) fail(Errc::ShapeMismatch, "ensemble dimension differs from the projector");
  if (pi.basis.cols() == 0) fail(Errc::InvalidState, "typical subspace is empty");
  const std::size_t n = ensemble.size();
  const int length = pi.length;

  std::vector<CVector> states;
  std::vector<double> weights;
  KeptEnsemble out{Ensemble({PureState(CVector::Ones(1))}, {1.0}), {}, false};
  auto offer = [&](const std::vector<std::size_t>& seq, double prior) {
    CVector projected = pi.basis.adjoint() * product_state(ensemble, seq);
    const double norm_sq = projected.squaredNorm();
    if (norm_sq < kNegligible || prior * norm_sq <= 0.0) return;
    states.push_back(std::move(projected));
    weights.push_back(prior * norm_sq);
    out.sequences.push_back(seq);
  };

  if (power_or_inf(n, length) <= static_cast<double>(options.enumerate_limit)) {
    const auto count = static_cast<std::size_t>(power_or_inf(n, length));
    for (std::size_t idx = 0; idx < count; ++idx) {
      const std::vector<std::size_t> seq = digits_of(idx, n, length);
      double prior = 1.0;
      for (std::size_t i : seq) prior *= ensemble.prob(i);
      offer(seq, prior);
    }
  } else {
    out.sampled = true;
    const DiscreteSampler sampler(ensemble.probs());
    Rng rng(derive_seed(options.seed, "pipeline.kept", 0));
    std::vector<std::size_t> seq(static_cast<std::size_t>(length));
    for (std::size_t s = 0; s < options.samples; ++s) {
      for (auto& i : seq) i = sampler(rng);
      offer(seq, 1.0);
    }
  }
  if (states.empty()) fail(Errc::InvalidState, "no input sequence has weight in the typical subspace");

  double total = 0.0;
  for (double w : weights) total += w;
  std::vector<PureState> pure;
  pure.reserve(states.size());
  for (CVector& v : states) pure.push_back(PureState::normalized(std::move(v)));
  for (double& w : weights) w /= total;
  out.ensemble = Ensemble(std::move(pure), std::move(weights));
  return out;
}

RMatrix sequence_score_table(const ScoreTable& single, const std::vector<std::vector<std::size_t>>& sequences,
                             int length, std::size_t guess_cap) {
  const std::size_t m = single.guesses();
  if (power_or_inf(m, length) > static_cast<double>(guess_cap)) {
    fail(Errc::CapExceeded, "M^L' = " + std::to_string(m) + "^" + std::to_string(length) + " guess sequences exceed " +
                                std::to_string(guess_cap));
  }
  const auto guesses = static_cast<std::size_t>(power_or_inf(m, length));
  RMatrix f(static_cast<Eigen::Index>(sequences.size()), static_cast<Eigen::Index>(guesses));
  for (std::size_t g = 0; g < guesses; ++g) {
    const std::vector<std::size_t> gs = digits_of(g, m, length);
    for (std::size_t s = 0; s < sequences.size(); ++s) {
      if (sequences[s].size() != static_cast<std::size_t>(length)) fail(Errc::ShapeMismatch, "sequence length differs from L'");
      double total = 0.0;
      for (int k = 0; k < length; ++k) {
        total += single.f(static_cast<Eigen::Index>(sequences[s][static_cast<std::size_t>(k)]),
                          static_cast<Eigen::Index>(gs[static_cast<std::size_t>(k)]));
      }
      f(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(g)) = total / length;
    }
  }
  return f;
}

std::size_t auto_outcomes(double entropy, int block_length, int blocks, double eta_prime, double eta, std::size_t cap) {
  const double exponent = blocks * (block_length * (entropy + 3.0 * eta_prime) + eta);
  if (exponent > std::log2(static_cast<double>(cap)) + 1e-12) {
    fail(Errc::CapExceeded, "auto N = 2^" + std::to_string(exponent) + " exceeds the outcome cap " + std::to_string(cap));
  }
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(std::exp2(exponent) - 1e-9)));
}

ProtocolReport run_protocol(const ProtocolConfig& config) {
  if (config.block_length < 1 || config.blocks < 1) fail(Errc::ConfigError, "L' and L must be positive");
  if (!(config.eta >= 0.0) || !(config.eta_prime >= 0.0)) fail(Errc::ConfigError, "eta and eta' must be non-negative");
  if (config.seeds.empty()) fail(Errc::ConfigError, "seed list is empty");
  if (config.outcomes && *config.outcomes < 1) fail(Errc::ConfigError, "N must be at least 1");

  const Ensemble& ensemble = config.ensemble;
  const DensityMatrix rho = density_matrix(ensemble);
  const ScoreTable table = config.kernel.table(ensemble);
  const ScoreOperators ops = score_operators(ensemble, table);
  const OptimizeResult single = optimize_povm(ops, config.optimizer);

  ProtocolReport report;
  report.block_length = config.block_length;
  report.blocks = config.blocks;
  report.eta_prime = config.eta_prime;
  report.eta = config.eta;
  report.fidelity_max = single.certificate.fidelity;
  report.f_min = table.f_min;
  report.f_max = table.f_max;
  report.entropy_vn = von_neumann_entropy(rho);
  report.epsilon_target = config.epsilon_target;
  report.warnings = single.warnings;

  const TypicalProjector pi = typical_projector(rho, config.block_length, config.eta_prime, config.dim_cap);
  for (const std::string& w : pi.warnings) report.warnings.push_back(w);
  if (!pi.materialized) {
    fail(Errc::CapExceeded, "d^L' exceeds the cap " + std::to_string(config.dim_cap) +
                                "; reduce L' so that d^L' fits (largest feasible L' is " +
                                std::to_string(static_cast<int>(std::floor(
                                    std::log(static_cast<double>(config.dim_cap)) / std::log(static_cast<double>(rho.dim()))))) +
                                ")");
  }
  report.epsilon = pi.epsilon;
  report.kept_dim = pi.kept_dim;
  report.kept_weight = pi.kept_weight;
  report.pass_fail_bits = binary_entropy_bits(std::min(1.0, std::max(0.0, pi.epsilon)));
  report.auto_outcomes = !config.outcomes.has_value();
  report.outcomes = config.outcomes ? *config.outcomes
                                    : auto_outcomes(report.entropy_vn, config.block_length, config.blocks,
                                                    config.eta_prime, config.eta, config.limits.outcome_cap);
  if (std::pow(pi.kept_dim, config.blocks) > static_cast<double>(config.limits.dim_cap)) {
    fail(Errc::CapExceeded, feasibility_hint(pi.kept_dim, config.blocks, config.limits.dim_cap));
  }

  if (pi.kept_dim == 0.0) {
    // Every block is rejected and scored at f_min.
    report.pass_fail_bits = 0.0;
    for (std::uint64_t seed : config.seeds) {
      ProtocolSeedReport s;
      s.seed = seed;
      s.fidelity_total = table.f_min;
      report.seeds.push_back(std::move(s));
    }
    finalize(report, config);
    return report;
  }

  report.identity_filter = pi.epsilon == 0.0 && pi.kept_dim == static_cast<double>(pi.full_dim());
  if (report.identity_filter) {
    // Filtering is the identity: square-root measurement on L L' raw states.
    const int total_length = config.blocks * config.block_length;
    const SqrtReference ref = sqrt_reference(single.rank_one, ensemble, config.kernel);
    report.reference_fidelity = ref.fidelity;
    report.bound_constant = ref.bound_constant;
    report.kept_rho_max = ref.rho_max;
    report.reference_converged = single.converged;
    report.kept_inputs = ensemble.size();
    const std::vector<SqrtMeasurementReport> runs = evaluate_sqrt_measurement(
        single.rank_one, ensemble, config.kernel, total_length, report.outcomes, config.seeds, config.limits);
    for (const SqrtMeasurementReport& r : runs) {
      ProtocolSeedReport s;
      s.seed = r.seed;
      s.sqrtm = r;
      s.fidelity_total = r.fidelity;
      s.outcome_entropy_bits = r.entropy_per_slot * total_length;
      report.seeds.push_back(std::move(s));
    }
    finalize(report, config);
    return report;
  }

  KeptEnsembleOptions kept_options = config.kept;
  kept_options.seed = derive_seed(config.master_seed, "pipeline.kept-ensemble", 0);
  const KeptEnsemble kept = kept_ensemble(ensemble, pi, kept_options);
  report.kept_inputs = kept.ensemble.size();
  report.kept_sampled = kept.sampled;
  const FidelityKernel kept_kernel =
      FidelityKernel::matrix(sequence_score_table(table, kept.sequences, config.block_length));
  const ScoreOperators kept_ops = score_operators(kept.ensemble, kept_kernel);

  // Start from the restricted product of the single-copy optimum.
  const RankOnePovm& base = single.rank_one;
  const std::size_t pieces = base.size();
  if (power_or_inf(pieces, config.block_length) > static_cast<double>(std::size_t{1} << 16)) {
    fail(Errc::CapExceeded, "reference start needs " + std::to_string(pieces) + "^" +
                                std::to_string(config.block_length) + " product vectors");
  }
  const auto starts = static_cast<std::size_t>(power_or_inf(pieces, config.block_length));
  const std::size_t m = table.guesses();
  RankOnePovm start;
  for (std::size_t idx = 0; idx < starts; ++idx) {
    const std::vector<std::size_t> seq = digits_of(idx, pieces, config.block_length);
    CVector v = base.vectors[seq[0]];
    std::size_t guess = base.guess[seq[0]];
    for (std::size_t l = 1; l < seq.size(); ++l) {
      v = kron(v, base.vectors[seq[l]]);
      guess = guess * m + base.guess[seq[l]];
    }
    CVector restricted = pi.basis.adjoint() * v;
    if (restricted.squaredNorm() < kNegligible) continue;
    start.vectors.push_back(std::move(restricted));
    start.guess.push_back(guess);
    start.parent.push_back(idx);
    start.labels.push_back(std::to_string(idx));
  }
  const OptimizeResult reference = refine_povm(kept_ops, std::move(start), config.optimizer);
  for (const std::string& w : reference.warnings) report.warnings.push_back("kept reference: " + w);
  report.reference_converged = reference.converged;

  const SqrtReference ref = sqrt_reference(reference.rank_one, kept.ensemble, kept_kernel);
  report.reference_fidelity = ref.fidelity;
  report.bound_constant = ref.bound_constant;
  report.kept_rho_max = ref.rho_max;
  const std::vector<SqrtMeasurementReport> runs = evaluate_sqrt_measurement(
      reference.rank_one, kept.ensemble, kept_kernel, config.blocks, report.outcomes, config.seeds, config.limits);
  for (const SqrtMeasurementReport& r : runs) {
    ProtocolSeedReport s;
    s.seed = r.seed;
    s.sqrtm = r;
    s.fidelity_total = (1.0 - pi.epsilon) * r.fidelity + pi.epsilon * table.f_min;
    s.outcome_entropy_bits = r.entropy_per_slot * config.blocks;
    report.seeds.push_back(std::move(s));
  }
  finalize(report, config);
  return report;
}

EntropyAccounting entropy_accounting(const ProtocolReport& report) {
  EntropyAccounting out;
  for (const ProtocolSeedReport& s : report.seeds) out.per_state_bits = std::max(out.per_state_bits, s.per_state_bits);
  out.bound_per_state = report.entropy_vn + 3.0 * report.eta_prime + report.eta / report.block_length +
                        report.pass_fail_bits / report.block_length;
  out.holds = out.per_state_bits <= out.bound_per_state + 1e-9;
  return out;
}

double protocol_fidelity_floor(const ProtocolReport& report, const ProtocolSeedReport& seed) {
  const double eps = report.epsilon;
  return report.fidelity_max - eps * (report.f_max - report.f_min) -
         (1.0 - eps) * (report.reference_fidelity - seed.sqrtm.fidelity_floor);
}

}  // namespace qlab
