#include "qlab/fidelity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qlab/error.hpp"
#include "qlab/rng.hpp"

namespace qlab {
namespace {

constexpr double kZeroWeight = 1e-10;
constexpr double kShiftFloor = 0.1;
constexpr double kTieTol = 1e-9;
constexpr double kParallelTol = 1e-9;

struct Run {
  std::vector<CVector> vectors;
  std::vector<std::size_t> guess;
  std::vector<double> trace;
  int iterations = 0;
  bool converged = false;
  bool failed = false;
};

double rank_one_fidelity(const std::vector<CVector>& vectors, const std::vector<std::size_t>& guess,
                         const ScoreOperators& ops) {
  double f = 0.0;
  for (std::size_t j = 0; j < vectors.size(); ++j) f += vectors[j].dot(ops.ops[guess[j]] * vectors[j]).real();
  return f;
}

CMatrix lagrange_operator(const std::vector<CVector>& vectors, const std::vector<std::size_t>& guess,
                          const ScoreOperators& ops) {
  const auto d = static_cast<Eigen::Index>(ops.dim());
  CMatrix lambda = CMatrix::Zero(d, d);
  for (std::size_t j = 0; j < vectors.size(); ++j) lambda.noalias() += ops.ops[guess[j]] * (vectors[j] * vectors[j].adjoint());
  return lambda;
}

double stationarity(const std::vector<CVector>& vectors, const std::vector<std::size_t>& guess,
                    const ScoreOperators& ops, const CMatrix& lambda) {
  double worst = 0.0;
  for (std::size_t j = 0; j < vectors.size(); ++j) {
    const double w = vectors[j].squaredNorm();
    if (w < kZeroWeight) continue;
    worst = std::max(worst, ((ops.ops[guess[j]] - lambda) * vectors[j]).norm() / std::sqrt(w));
  }
  return worst;
}

double dual_gap(const ScoreOperators& ops, const CMatrix& lambda) {
  const CMatrix lambda_h = hermitian_part(lambda);
  double lowest = std::numeric_limits<double>::infinity();
  for (const CMatrix& f : ops.ops) lowest = std::min(lowest, min_eigenvalue(lambda_h - f));
  return lowest;
}

/// S^{-1/2} applied to every vector so that sum |v><v| = I again.
bool recomplete(std::vector<CVector>& vectors, Eigen::Index d) {
  CMatrix s = CMatrix::Zero(d, d);
  for (const CVector& v : vectors) s.noalias() += v * v.adjoint();
  const HermitianEigen eig = eigh_descending(s);
  if (!(eig.values(d - 1) > 1e-14 * eig.values(0))) return false;
  const CMatrix inv_sqrt = eig.vectors * eig.values.cwiseSqrt().cwiseInverse().asDiagonal() * eig.vectors.adjoint();
  for (CVector& v : vectors) v = inv_sqrt * v;
  return true;
}

Run run_fixed_point(const ScoreOperators& ops, const std::vector<CMatrix>& shifted, std::vector<CVector> vectors,
                    std::vector<std::size_t> guess, const OptimizerConfig& config) {
  Run run;
  const auto d = static_cast<Eigen::Index>(ops.dim());
  run.vectors = std::move(vectors);
  run.guess = std::move(guess);
  run.trace.push_back(rank_one_fidelity(run.vectors, run.guess, ops));
  std::vector<CVector> images(run.vectors.size());
  for (int it = 0; it < config.max_iter; ++it) {
    // Stationarity alone is met by every orthonormal basis when M = d, so
    // convergence also requires dual feasibility herm(lambda) >= F_m.
    const CMatrix lambda = lagrange_operator(run.vectors, run.guess, ops);
    if (stationarity(run.vectors, run.guess, ops, lambda) <= config.tol && dual_gap(ops, lambda) >= -config.tol) {
      run.converged = true;
      break;
    }
    CMatrix lam = CMatrix::Zero(d, d);
    for (std::size_t j = 0; j < run.vectors.size(); ++j) {
      images[j] = shifted[run.guess[j]] * run.vectors[j];
      lam.noalias() += images[j] * images[j].adjoint();
    }
    const HermitianEigen eig = eigh_descending(lam);
    if (!(eig.values(d - 1) > 1e-14 * eig.values(0))) {
      run.failed = true;
      break;
    }
    const CMatrix inv_sqrt = eig.vectors * eig.values.cwiseSqrt().cwiseInverse().asDiagonal() * eig.vectors.adjoint();
    for (std::size_t j = 0; j < run.vectors.size(); ++j) run.vectors[j] = inv_sqrt * images[j];
    run.trace.push_back(rank_one_fidelity(run.vectors, run.guess, ops));
    run.iterations = it + 1;
  }
  return run;
}

std::vector<CMatrix> shifted_operators(const ScoreOperators& ops) {
  double lowest = std::numeric_limits<double>::infinity();
  for (const CMatrix& f : ops.ops) lowest = std::min(lowest, min_eigenvalue(f));
  const double shift = std::max(0.0, kShiftFloor - lowest);
  std::vector<CMatrix> g;
  g.reserve(ops.size());
  const auto d = static_cast<Eigen::Index>(ops.dim());
  for (const CMatrix& f : ops.ops) g.push_back(hermitian_part(f) + shift * CMatrix::Identity(d, d));
  return g;
}

void check_operators(const ScoreOperators& ops) {
  if (ops.ops.empty()) fail(Errc::ShapeMismatch, "no score operators");
  for (const CMatrix& f : ops.ops) {
    if (f.rows() != f.cols() || static_cast<std::size_t>(f.rows()) != ops.dim()) {
      fail(Errc::ShapeMismatch, "score operators must share one square shape");
    }
    if (!f.allFinite()) fail(Errc::ShapeMismatch, "score operators must be finite");
  }
}

OptimizeResult finish(const ScoreOperators& ops, Run run, int restart) {
  OptimizeResult out;
  out.iterations = run.iterations;
  out.best_restart = restart;
  out.converged = run.converged;
  out.fidelity_trace = std::move(run.trace);
  RankOnePovm rank_one;
  std::size_t pruned = 0;
  for (std::size_t j = 0; j < run.vectors.size(); ++j) {
    if (run.vectors[j].squaredNorm() < kZeroWeight) {
      ++pruned;
      continue;
    }
    // Parallel pieces with the same guess are one outcome: |b|^2 adds up.
    bool merged = false;
    for (std::size_t k = 0; k < rank_one.size() && !merged; ++k) {
      if (rank_one.guess[k] != run.guess[j]) continue;
      const CVector& a = rank_one.vectors[k];
      const CVector& b = run.vectors[j];
      const Complex overlap = a.dot(b);
      if (1.0 - std::norm(overlap) / (a.squaredNorm() * b.squaredNorm()) > kParallelTol) continue;
      rank_one.vectors[k] *= std::sqrt((a.squaredNorm() + b.squaredNorm()) / a.squaredNorm());
      merged = true;
    }
    if (merged) continue;
    rank_one.vectors.push_back(run.vectors[j]);
    rank_one.guess.push_back(run.guess[j]);
    rank_one.parent.push_back(rank_one.parent.size());
    rank_one.labels.push_back(std::to_string(run.guess[j]));
  }
  if (pruned > 0) {
    out.warnings.push_back("pruned " + std::to_string(pruned) + " zero-weight outcome piece(s)");
    recomplete(rank_one.vectors, static_cast<Eigen::Index>(ops.dim()));
  }
  out.certificate = certify(rank_one, ops);
  out.povm = rank_one.to_povm();
  out.rank_one = std::move(rank_one);
  if (!out.converged) {
    out.warnings.push_back("optimizer stopped at max_iter with stationarity residual " +
                           std::to_string(out.certificate.stationarity_residual));
  }
  return out;
}

}  // namespace

std::string to_string(KernelRule rule) {
  switch (rule) {
    case KernelRule::GuessScore: return "guess_score";
    case KernelRule::Overlap: return "overlap";
    case KernelRule::Overlap4: return "overlap4";
    case KernelRule::Matrix: return "matrix";
  }
  return "unknown";
}

FidelityKernel FidelityKernel::guess_score() {
  FidelityKernel k;
  k.rule_ = KernelRule::GuessScore;
  return k;
}

FidelityKernel FidelityKernel::overlap(std::vector<PureState> guesses) {
  if (guesses.empty()) fail(Errc::ShapeMismatch, "overlap kernel needs at least one guess");
  FidelityKernel k;
  k.rule_ = KernelRule::Overlap;
  k.guesses_ = std::move(guesses);
  return k;
}

FidelityKernel FidelityKernel::overlap4(std::vector<PureState> guesses) {
  FidelityKernel k = overlap(std::move(guesses));
  k.rule_ = KernelRule::Overlap4;
  return k;
}

FidelityKernel FidelityKernel::matrix(RMatrix scores) {
  if (scores.size() == 0) fail(Errc::ShapeMismatch, "score matrix is empty");
  if (!scores.allFinite()) fail(Errc::ShapeMismatch, "score matrix must be finite");
  FidelityKernel k;
  k.rule_ = KernelRule::Matrix;
  k.scores_ = std::move(scores);
  return k;
}

std::size_t FidelityKernel::guess_count(const Ensemble& ensemble) const {
  switch (rule_) {
    case KernelRule::GuessScore: return ensemble.size();
    case KernelRule::Overlap:
    case KernelRule::Overlap4: return guesses_.size();
    case KernelRule::Matrix: return static_cast<std::size_t>(scores_.cols());
  }
  return 0;
}

ScoreTable FidelityKernel::table(const Ensemble& ensemble) const {
  ScoreTable t;
  const auto n_in = static_cast<Eigen::Index>(ensemble.size());
  const auto n_guess = static_cast<Eigen::Index>(guess_count(ensemble));
  switch (rule_) {
    case KernelRule::GuessScore:
      t.f = RMatrix::Constant(n_in, n_guess, -1.0);
      t.f.diagonal().setOnes();
      break;
    case KernelRule::Overlap:
    case KernelRule::Overlap4: {
      t.f.resize(n_in, n_guess);
      for (Eigen::Index j = 0; j < n_guess; ++j) {
        const PureState& g = guesses_[static_cast<std::size_t>(j)];
        if (g.dim() != ensemble.dim()) fail(Errc::ShapeMismatch, "guess dimension differs from ensemble");
        for (Eigen::Index i = 0; i < n_in; ++i) {
          const double o = std::norm(g.amplitudes().dot(ensemble.state(static_cast<std::size_t>(i)).amplitudes()));
          t.f(i, j) = rule_ == KernelRule::Overlap ? o : o * o;
        }
      }
      break;
    }
    case KernelRule::Matrix:
      if (scores_.rows() != n_in) fail(Errc::ShapeMismatch, "score matrix rows must equal ensemble size");
      t.f = scores_;
      break;
  }
  t.f_min = t.f.minCoeff();
  t.f_max = t.f.maxCoeff();
  return t;
}

ScoreOperators score_operators(const Ensemble& ensemble, const ScoreTable& table) {
  if (table.inputs() != ensemble.size()) fail(Errc::ShapeMismatch, "score table rows must equal ensemble size");
  const auto d = static_cast<Eigen::Index>(ensemble.dim());
  ScoreOperators out;
  out.ops.assign(table.guesses(), CMatrix::Zero(d, d));
  for (std::size_t i = 0; i < ensemble.size(); ++i) {
    const CMatrix proj = ensemble.prob(i) * ensemble.state(i).projector();
    for (std::size_t j = 0; j < table.guesses(); ++j) {
      const double f = table.f(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      if (f != 0.0) out.ops[j] += f * proj;
    }
  }
  for (CMatrix& op : out.ops) op = hermitian_part(op);
  return out;
}

ScoreOperators score_operators(const Ensemble& ensemble, const FidelityKernel& kernel) {
  return score_operators(ensemble, kernel.table(ensemble));
}

double mean_fidelity(const Povm& povm, const Ensemble& ensemble, const ScoreTable& table) {
  if (povm.dim() != ensemble.dim()) fail(Errc::ShapeMismatch, "POVM and ensemble dimensions differ");
  if (povm.guess.size() != povm.size()) fail(Errc::ShapeMismatch, "POVM guess map is incomplete");
  for (std::size_t g : povm.guess) {
    if (g >= table.guesses()) fail(Errc::ShapeMismatch, "POVM outcome refers to a guess the kernel lacks");
  }
  const OutcomeDistribution dist = outcome_distribution(povm, ensemble);
  double f = 0.0;
  for (std::size_t i = 0; i < ensemble.size(); ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < povm.size(); ++j) {
      row += dist.conditional(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) *
             table.f(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(povm.guess[j]));
    }
    f += ensemble.prob(i) * row;
  }
  return f;
}

double mean_fidelity(const Povm& povm, const Ensemble& ensemble, const FidelityKernel& kernel) {
  return mean_fidelity(povm, ensemble, kernel.table(ensemble));
}

double operator_fidelity(const Povm& povm, const ScoreOperators& ops) {
  double f = 0.0;
  for (std::size_t j = 0; j < povm.size(); ++j) {
    if (povm.guess.at(j) >= ops.size()) fail(Errc::ShapeMismatch, "POVM outcome refers to a missing guess");
    f += (ops.ops[povm.guess[j]] * povm.elements[j]).trace().real();
  }
  return f;
}

double operator_fidelity(const RankOnePovm& povm, const ScoreOperators& ops) {
  for (std::size_t g : povm.guess) {
    if (g >= ops.size()) fail(Errc::ShapeMismatch, "POVM outcome refers to a missing guess");
  }
  return rank_one_fidelity(povm.vectors, povm.guess, ops);
}

OptimalityCertificate certify(const RankOnePovm& povm, const ScoreOperators& ops) {
  check_operators(ops);
  if (povm.dim() != ops.dim()) fail(Errc::ShapeMismatch, "POVM and score operator dimensions differ");
  for (std::size_t g : povm.guess) {
    if (g >= ops.size()) fail(Errc::ShapeMismatch, "POVM outcome refers to a missing guess");
  }
  OptimalityCertificate cert;
  cert.lambda = lagrange_operator(povm.vectors, povm.guess, ops);
  cert.stationarity_residual = stationarity(povm.vectors, povm.guess, ops, cert.lambda);
  const CMatrix lambda_h = hermitian_part(cert.lambda);
  cert.anti_hermitian_residual = 0.5 * hermiticity_residual(cert.lambda);
  cert.fidelity = cert.lambda.trace().real();
  cert.dual_min_eig = std::numeric_limits<double>::infinity();
  for (const CMatrix& f : ops.ops) {
    cert.dual_min_eig = std::min(cert.dual_min_eig, min_eigenvalue(lambda_h - f));
    cert.bound_constant = std::max(cert.bound_constant, hermitian_op_norm(f - lambda_h));
  }
  return cert;
}

OptimalityCertificate certify(const RankOnePovm& povm, const Ensemble& ensemble, const FidelityKernel& kernel) {
  return certify(povm, score_operators(ensemble, kernel));
}

OptimizeResult optimize_povm(const ScoreOperators& ops, const OptimizerConfig& config) {
  check_operators(ops);
  if (config.restarts < 1) fail(Errc::ConfigError, "restarts must be at least 1");
  const std::size_t d = ops.dim();
  const std::size_t m = ops.size();
  // d rank-one pieces per guess, so any single guess can take over the
  // whole space (a_m = I is optimal when one score operator dominates).
  const std::size_t copies = d;
  const std::vector<CMatrix> shifted = shifted_operators(ops);
  std::vector<Run> runs;
  runs.reserve(static_cast<std::size_t>(config.restarts));
  for (int r = 0; r < config.restarts; ++r) {
    Rng rng(derive_seed(config.seed, "optimizer-restart", static_cast<std::uint64_t>(r)));
    RankOnePovm start = random_rank_one_povm(d, m * copies, rng);
    std::vector<std::size_t> guess(start.size());
    for (std::size_t j = 0; j < guess.size(); ++j) guess[j] = j % m;
    runs.push_back(run_fixed_point(ops, shifted, std::move(start.vectors), std::move(guess), config));
  }
  // Converged runs first, then highest fidelity; ties go to the lowest restart index.
  double best = -std::numeric_limits<double>::infinity();
  bool any_converged = false;
  for (const Run& run : runs) any_converged = any_converged || (run.converged && !run.failed);
  for (const Run& run : runs) {
    if (run.failed || (any_converged && !run.converged)) continue;
    best = std::max(best, run.trace.back());
  }
  int chosen = -1;
  for (int r = 0; r < config.restarts; ++r) {
    const Run& run = runs[static_cast<std::size_t>(r)];
    if (run.failed || (any_converged && !run.converged)) continue;
    if (run.trace.back() >= best - kTieTol) {
      chosen = r;
      break;
    }
  }
  if (chosen < 0) fail(Errc::NonConvergence, "every optimizer restart lost completeness");
  return finish(ops, std::move(runs[static_cast<std::size_t>(chosen)]), chosen);
}

OptimizeResult optimize_povm(const Ensemble& ensemble, const FidelityKernel& kernel, const OptimizerConfig& config) {
  return optimize_povm(score_operators(ensemble, kernel), config);
}

OptimizeResult refine_povm(const ScoreOperators& ops, RankOnePovm start, const OptimizerConfig& config) {
  check_operators(ops);
  if (start.dim() != ops.dim()) fail(Errc::ShapeMismatch, "start POVM dimension differs from score operators");
  for (std::size_t g : start.guess) {
    if (g >= ops.size()) fail(Errc::ShapeMismatch, "start POVM refers to a missing guess");
  }
  Run run = run_fixed_point(ops, shifted_operators(ops), std::move(start.vectors), std::move(start.guess), config);
  if (run.failed) fail(Errc::NonConvergence, "fixed-point iteration lost completeness");
  return finish(ops, std::move(run), 0);
}

PerturbationGap perturbation_gap(const Povm& povm_prime, const RankOnePovm& optimal, const Ensemble& ensemble,
                                 const FidelityKernel& kernel) {
  if (povm_prime.size() != optimal.size()) {
    fail(Errc::AlignmentError, "perturbed POVM has " + std::to_string(povm_prime.size()) + " outcomes, reference has " +
                                   std::to_string(optimal.size()));
  }
  if (povm_prime.dim() != optimal.dim()) fail(Errc::AlignmentError, "POVM dimensions differ");
  const ScoreOperators ops = score_operators(ensemble, kernel);
  const OptimalityCertificate cert = certify(optimal, ops);
  const CMatrix lambda_h = hermitian_part(cert.lambda);
  const auto d = static_cast<Eigen::Index>(optimal.dim());

  PerturbationGap out;
  out.bound_constant = cert.bound_constant;
  double f_prime = 0.0;
  for (std::size_t j = 0; j < optimal.size(); ++j) {
    const CMatrix& a = povm_prime.elements[j];
    f_prime += (ops.ops[optimal.guess[j]] * a).trace().real();
    CMatrix perp = CMatrix::Identity(d, d);
    if (optimal.weight(j) >= kZeroWeight) {
      const CVector b = optimal.direction(j);
      perp -= b * b.adjoint();
    }
    const CMatrix z = perp * a * perp;
    out.z_trace_sum += z.trace().real();
    out.exact_shift += ((ops.ops[optimal.guess[j]] - lambda_h) * z).trace().real();
  }
  out.gap = operator_fidelity(optimal, ops) - f_prime;
  out.holds = out.gap <= out.bound_constant * out.z_trace_sum + 1e-9;
  return out;
}

}  // namespace qlab
