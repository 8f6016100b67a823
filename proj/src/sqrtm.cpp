#include "qlab/sqrtm.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "qlab/error.hpp"
#include "qlab/rng.hpp"

namespace qlab {
namespace {

std::size_t check_sizes(std::size_t d, int length, std::size_t count, const SqrtLimits& limits) {
  if (length < 1) fail(Errc::ShapeMismatch, "block length must be positive");
  if (count < 1) fail(Errc::ShapeMismatch, "need at least one sampled direction");
  const std::size_t dim = checked_power(d, length, limits.dim_cap);
  if (count > limits.outcome_cap) {
    fail(Errc::CapExceeded, "N = " + std::to_string(count) + " exceeds the outcome cap " +
                                std::to_string(limits.outcome_cap));
  }
  if (static_cast<double>(dim) * static_cast<double>(count) > static_cast<double>(limits.work_cap)) {
    fail(Errc::CapExceeded, "d^L * N = " + std::to_string(dim) + " * " + std::to_string(count) +
                                " exceeds the work cap " + std::to_string(limits.work_cap));
  }
  return dim;
}

void check_rank_one(const RankOnePovm& rank1) {
  if (rank1.size() == 0) fail(Errc::ShapeMismatch, "rank-one POVM is empty");
  for (const CVector& v : rank1.vectors) {
    if (static_cast<std::size_t>(v.size()) != rank1.dim()) fail(Errc::ShapeMismatch, "rank-one vectors differ in dimension");
    if (v.squaredNorm() <= 0.0) fail(Errc::BadWeights, "rank-one POVM has a zero vector");
  }
  if (rank1.guess.size() != rank1.size()) fail(Errc::ShapeMismatch, "rank-one POVM guess list has the wrong length");
}

}  // namespace

SampledBlocks blocks_from_indices(const RankOnePovm& rank1, int length,
                                  std::vector<std::vector<std::size_t>> indices, const SqrtLimits& limits) {
  check_rank_one(rank1);
  const std::size_t d = rank1.dim();
  const std::size_t dim = check_sizes(d, length, indices.size(), limits);
  std::vector<CVector> directions;
  directions.reserve(rank1.size());
  for (std::size_t i = 0; i < rank1.size(); ++i) directions.push_back(rank1.direction(i));

  SampledBlocks out;
  out.local_dim = d;
  out.length = length;
  out.vectors.resize(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(indices.size()));
  out.guess.reserve(indices.size());
  for (std::size_t j = 0; j < indices.size(); ++j) {
    const std::vector<std::size_t>& seq = indices[j];
    if (seq.size() != static_cast<std::size_t>(length)) fail(Errc::ShapeMismatch, "index sequence length differs from L");
    std::vector<std::size_t> guess;
    guess.reserve(seq.size());
    for (std::size_t i : seq) {
      if (i >= rank1.size()) fail(Errc::IndexOutOfRange, "factor index out of range");
      guess.push_back(rank1.guess[i]);
    }
    CVector v = directions[seq[0]];
    for (int l = 1; l < length; ++l) v = kron(v, directions[seq[static_cast<std::size_t>(l)]]);
    out.vectors.col(static_cast<Eigen::Index>(j)) = v;
    out.guess.push_back(std::move(guess));
  }
  out.factor_indices = std::move(indices);
  return out;
}

SampledBlocks sample_blocks(const RankOnePovm& rank1, int length, std::size_t count, std::uint64_t seed,
                            const SqrtLimits& limits) {
  check_rank_one(rank1);
  const auto d = static_cast<double>(rank1.dim());
  std::vector<double> probs = rank1.weights();
  double total = 0.0;
  for (double w : probs) total += w;
  if (std::abs(total - d) > 1e-8) {
    fail(Errc::BadWeights, "rank-one weights sum to " + std::to_string(total) + ", expected d = " + std::to_string(d));
  }
  for (double& p : probs) p /= d;
  check_sizes(rank1.dim(), length, count, limits);

  const DiscreteSampler sampler(probs);
  Rng rng(derive_seed(seed, "sqrtm.sample", 0));
  std::vector<std::vector<std::size_t>> indices(count, std::vector<std::size_t>(static_cast<std::size_t>(length)));
  for (auto& seq : indices) {
    for (auto& i : seq) i = sampler(rng);
  }
  return blocks_from_indices(rank1, length, std::move(indices), limits);
}

SqrtMeasurement build_sqrt_measurement(const SampledBlocks& blocks, std::size_t complement_guess) {
  const CMatrix& v = blocks.vectors;
  const Eigen::Index dim = v.rows();
  const Eigen::Index n = v.cols();
  if (n < 1 || dim < 1 || blocks.guess.size() != static_cast<std::size_t>(n)) {
    fail(Errc::ShapeMismatch, "sampled blocks are inconsistent");
  }

  SqrtMeasurement out;
  out.b = v * v.adjoint();
  const HermitianEigen eig = eigh_descending(out.b);
  const double top = eig.values(0);
  out.cutoff = 1e-10 * top;
  Eigen::Index rank = 0;
  while (rank < dim && eig.values(rank) > out.cutoff) ++rank;
  out.dim_hb = static_cast<std::size_t>(rank);
  for (Eigen::Index k = 0; k < dim; ++k) {
    const double x = eig.values(k);
    if (x > out.cutoff / 10.0 && x < out.cutoff * 10.0) out.rank_ambiguous = true;
  }
  if (rank == dim) {
    out.gap_ratio = std::numeric_limits<double>::infinity();
  } else {
    const double dropped = std::max(std::abs(eig.values(rank)), std::numeric_limits<double>::min());
    out.gap_ratio = eig.values(rank - 1) / dropped;
  }
  if (out.rank_ambiguous) {
    out.warnings.push_back("eigenvalue within a factor 10 of the pseudo-inverse cutoff; dim_HB may be ambiguous");
  }

  const CMatrix basis = eig.vectors.leftCols(rank);
  const RVector inv_sqrt = eig.values.head(rank).cwiseSqrt().cwiseInverse();
  const CMatrix c = basis * (inv_sqrt.cast<Complex>().asDiagonal() * (basis.adjoint() * v));
  const CMatrix complement = eig.vectors.rightCols(dim - rank);

  out.alpha_sq.resize(static_cast<std::size_t>(n));
  out.perp_norms.resize(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < n; ++j) {
    const double alpha = v.col(j).dot(c.col(j)).real();
    out.alpha_sq[static_cast<std::size_t>(j)] = alpha * alpha;
    out.perp_norms[static_cast<std::size_t>(j)] = c.col(j).squaredNorm() - alpha * alpha;
  }

  CMatrix total = c * c.adjoint();
  if (complement.cols() > 0) total.noalias() += complement * complement.adjoint();
  out.completeness_residual = (total - CMatrix::Identity(dim, dim)).norm();

  out.povm.local_dim = blocks.local_dim;
  out.povm.length = blocks.length;
  out.povm.outcomes.reserve(static_cast<std::size_t>(n) + 1);
  out.povm.outcomes.push_back(
      {complement, std::vector<std::size_t>(static_cast<std::size_t>(blocks.length), complement_guess), std::nullopt});
  for (Eigen::Index j = 0; j < n; ++j) {
    out.povm.outcomes.push_back({c.col(j), blocks.guess[static_cast<std::size_t>(j)], std::nullopt});
  }
  return out;
}

SqrtReference sqrt_reference(const RankOnePovm& rank1, const Ensemble& ensemble, const FidelityKernel& kernel) {
  check_rank_one(rank1);
  if (rank1.dim() != ensemble.dim()) fail(Errc::ShapeMismatch, "rank-one POVM and ensemble differ in dimension");
  const ScoreTable table = kernel.table(ensemble);
  const ScoreOperators ops = score_operators(ensemble, table);
  for (std::size_t g : rank1.guess) {
    if (g >= ops.size()) fail(Errc::ShapeMismatch, "rank-one POVM refers to a missing guess");
  }
  SqrtReference ref;
  ref.fidelity = operator_fidelity(rank1, ops);
  ref.bound_constant = certify(rank1, ops).bound_constant;
  ref.rho_max = density_matrix(ensemble).max_eigenvalue();
  ref.f_min = table.f_min;
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; m < ops.size(); ++m) {
    const double t = ops.ops[m].trace().real();
    if (t > best + 1e-12) {
      best = t;
      ref.blind_guess = m;
    }
  }
  return ref;
}

SqrtMeasurementReport score_sqrt_measurement(const SqrtMeasurement& m, const DensityMatrix& rho,
                                             const ScoreOperators& ops, const SqrtReference& ref) {
  const BlockPovm& block = m.povm;
  require_consistent(block, ops.size());
  const int length = block.length;
  const auto d = static_cast<Eigen::Index>(block.local_dim);
  const std::size_t dim = block.dim();
  const std::size_t n = block.size() - 1;

  SqrtMeasurementReport r;
  r.length = length;
  r.outcomes = n;
  r.dim_hb = m.dim_hb;
  r.completeness_residual = m.completeness_residual;
  r.alpha_sq = m.alpha_sq;
  r.perp_norms = m.perp_norms;
  r.rank_ambiguous = m.rank_ambiguous;
  r.warnings = m.warnings;
  for (double p : m.perp_norms) r.perp_sum += p;
  r.mean_perp = r.perp_sum / static_cast<double>(n);

  // C_0 is handled through completeness of the reduced operators.
  std::vector<CMatrix> complement(static_cast<std::size_t>(length), CMatrix::Identity(d, d));
  std::vector<double> probs(n + 1, 0.0);
  double scored = 0.0;
  double probability_sum = 0.0;
  for (std::size_t j = 1; j <= n; ++j) {
    const BlockOutcome& o = block.outcomes[j];
    for (int k = 0; k < length; ++k) {
      const CMatrix reduced = reduced_operator(block, j, k, rho);
      scored += (ops.ops[o.guess[static_cast<std::size_t>(k)]] * reduced).trace().real();
      complement[static_cast<std::size_t>(k)] -= reduced;
      if (k == 0) probs[j] = std::max(0.0, (rho.matrix * reduced).trace().real());
    }
    probability_sum += probs[j];
  }
  scored /= static_cast<double>(length);
  r.c0_weight = std::max(0.0, 1.0 - probability_sum);
  probs[0] = r.c0_weight;

  double complement_score = 0.0;
  for (const CMatrix& c0 : complement) complement_score += (ops.ops[ref.blind_guess] * c0).trace().real();
  complement_score /= static_cast<double>(length);

  r.fidelity = scored + complement_score;
  r.fidelity_pessimistic = scored + ref.f_min * r.c0_weight;
  r.entropy_per_slot = shannon_bits(probs) / static_cast<double>(length);
  r.fidelity_floor = ref.fidelity - ref.bound_constant * std::pow(ref.rho_max, length - 1) *
                                        (r.perp_sum + static_cast<double>(dim - m.dim_hb));
  return r;
}

std::vector<SqrtMeasurementReport> evaluate_sqrt_measurement(const RankOnePovm& rank1, const Ensemble& ensemble,
                                                             const FidelityKernel& kernel, int length,
                                                             std::size_t count, const std::vector<std::uint64_t>& seeds,
                                                             const SqrtLimits& limits) {
  const SqrtReference ref = sqrt_reference(rank1, ensemble, kernel);
  const DensityMatrix rho = density_matrix(ensemble);
  const ScoreOperators ops = score_operators(ensemble, kernel);
  std::vector<SqrtMeasurementReport> reports;
  reports.reserve(seeds.size());
  for (std::uint64_t seed : seeds) {
    const SampledBlocks blocks = sample_blocks(rank1, length, count, seed, limits);
    const SqrtMeasurement m = build_sqrt_measurement(blocks, ref.blind_guess);
    SqrtMeasurementReport r = score_sqrt_measurement(m, rho, ops, ref);
    r.seed = seed;
    reports.push_back(std::move(r));
  }
  return reports;
}

std::size_t threshold_outcomes(std::size_t d, double rho_max, int length, double eta, std::size_t cap) {
  if (d < 1 || length < 1 || !(rho_max > 0.0) || !(eta >= 0.0)) {
    fail(Errc::ConfigError, "threshold needs d >= 1, L >= 1, rho_max > 0, eta >= 0");
  }
  const double exponent =
      static_cast<double>(length) * (2.0 * std::log2(static_cast<double>(d)) + std::log2(rho_max) + eta);
  if (exponent > std::log2(static_cast<double>(cap)) + 1e-12) {
    fail(Errc::CapExceeded, "threshold N = 2^" + std::to_string(exponent) + " exceeds the outcome cap " +
                                std::to_string(cap));
  }
  const double n = std::ceil(std::exp2(exponent) - 1e-9);
  return std::max<std::size_t>(1, static_cast<std::size_t>(n));
}

double expected_perp_bound(std::size_t dim, std::size_t count) {
  const auto dd = static_cast<double>(dim);
  const auto n = static_cast<double>(count);
  return (dd / n) * ((dd - 1.0) / n);
}

double expected_dim_bound(std::size_t dim, std::size_t count) {
  const auto dd = static_cast<double>(dim);
  return dd * (1.0 - (dd - 1.0) / static_cast<double>(count));
}

}  // namespace qlab
