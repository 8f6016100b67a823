#include "qlab/povm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "qlab/error.hpp"

namespace qlab {
namespace {

constexpr double kCompletenessTol = 1e-8;
constexpr double kHermitianTol = 1e-10;
constexpr double kPsdTol = 1e-10;
constexpr double kRankCutoff = 1e-12;

std::vector<std::string> default_labels(std::size_t n) {
  std::vector<std::string> labels(n);
  for (std::size_t j = 0; j < n; ++j) labels[j] = std::to_string(j);
  return labels;
}

}  // namespace

Povm Povm::from_elements(std::vector<CMatrix> elements) {
  Povm p;
  p.guess.resize(elements.size());
  std::iota(p.guess.begin(), p.guess.end(), std::size_t{0});
  p.labels = default_labels(elements.size());
  p.elements = std::move(elements);
  return p;
}

std::vector<double> RankOnePovm::weights() const {
  std::vector<double> w(vectors.size());
  for (std::size_t j = 0; j < vectors.size(); ++j) w[j] = vectors[j].squaredNorm();
  return w;
}

Povm RankOnePovm::to_povm() const {
  Povm p;
  p.elements.reserve(vectors.size());
  for (const CVector& v : vectors) p.elements.push_back(v * v.adjoint());
  p.guess = guess;
  p.labels = labels.size() == vectors.size() ? labels : default_labels(vectors.size());
  return p;
}

PovmValidation validate(const Povm& povm) {
  PovmValidation report;
  if (povm.elements.empty()) {
    report.failures.push_back("POVM has no elements");
    return report;
  }
  const auto d = povm.elements.front().rows();
  CMatrix total = CMatrix::Zero(d, d);
  for (std::size_t j = 0; j < povm.size(); ++j) {
    const CMatrix& a = povm.elements[j];
    if (a.rows() != d || a.cols() != d) {
      report.failures.push_back("element " + std::to_string(j) + " has wrong shape");
      report.min_eigenvalues.push_back(std::nan(""));
      report.hermiticity_residuals.push_back(std::nan(""));
      continue;
    }
    const double herm = hermiticity_residual(a);
    const double mine = min_eigenvalue(a);
    report.hermiticity_residuals.push_back(herm);
    report.min_eigenvalues.push_back(mine);
    if (herm > kHermitianTol) report.failures.push_back("element " + std::to_string(j) + " is not Hermitian");
    if (mine < -kPsdTol) report.failures.push_back("element " + std::to_string(j) + " is not positive semidefinite");
    total += a;
  }
  report.completeness_residual = (total - CMatrix::Identity(d, d)).norm();
  if (report.completeness_residual > kCompletenessTol) {
    report.failures.push_back("elements do not sum to identity (residual " +
                              std::to_string(report.completeness_residual) + ")");
  }
  if (povm.guess.size() != povm.size()) report.failures.push_back("guess map length differs from outcome count");
  if (!povm.labels.empty() && povm.labels.size() != povm.size()) {
    report.failures.push_back("label count differs from outcome count");
  }
  return report;
}

void require_valid(const Povm& povm) {
  const PovmValidation v = validate(povm);
  if (v.ok()) return;
  std::string msg;
  for (const auto& f : v.failures) msg += (msg.empty() ? "" : "; ") + f;
  fail(Errc::InvalidState, msg);
}

RankOnePovm refine_to_rank_one(const Povm& povm) {
  require_valid(povm);
  RankOnePovm out;
  const auto d = static_cast<Eigen::Index>(povm.dim());
  CMatrix rebuilt = CMatrix::Zero(d, d);
  for (std::size_t j = 0; j < povm.size(); ++j) {
    const CMatrix w = psd_factor(povm.elements[j], kRankCutoff);
    for (Eigen::Index c = 0; c < w.cols(); ++c) {
      CVector v = w.col(c);
      // Fix the global phase so the largest component is real positive.
      Eigen::Index arg = 0;
      v.cwiseAbs().maxCoeff(&arg);
      if (std::abs(v(arg)) > 0.0) v *= std::conj(v(arg)) / std::abs(v(arg));
      rebuilt.noalias() += v * v.adjoint();
      out.vectors.push_back(std::move(v));
      out.parent.push_back(j);
      out.guess.push_back(povm.guess[j]);
      const std::string base = povm.labels.size() == povm.size() ? povm.labels[j] : std::to_string(j);
      out.labels.push_back(w.cols() == 1 ? base : base + "." + std::to_string(c));
    }
  }
  const double residual = (rebuilt - CMatrix::Identity(d, d)).norm();
  if (residual > kCompletenessTol) {
    fail(Errc::DecompositionFailure, "rank-one reassembly residual " + std::to_string(residual));
  }
  return out;
}

Povm drop_zero_elements(const Povm& povm, std::vector<std::string>& warnings, double trace_cutoff) {
  Povm out;
  for (std::size_t j = 0; j < povm.size(); ++j) {
    const std::string label = j < povm.labels.size() ? povm.labels[j] : std::to_string(j);
    if (povm.elements[j].trace().real() < trace_cutoff) {
      warnings.push_back("dropped zero POVM element '" + label + "'");
      continue;
    }
    out.elements.push_back(povm.elements[j]);
    out.guess.push_back(j < povm.guess.size() ? povm.guess[j] : j);
    out.labels.push_back(label);
  }
  return out;
}

OutcomeDistribution outcome_distribution(const Povm& povm, const Ensemble& ensemble) {
  if (povm.dim() != ensemble.dim()) fail(Errc::DimensionMismatch, "POVM and ensemble dimensions differ");
  OutcomeDistribution dist;
  const auto n_in = static_cast<Eigen::Index>(ensemble.size());
  const auto n_out = static_cast<Eigen::Index>(povm.size());
  dist.conditional.resize(n_in, n_out);
  dist.probs.assign(povm.size(), 0.0);
  for (Eigen::Index i = 0; i < n_in; ++i) {
    const CVector& psi = ensemble.state(static_cast<std::size_t>(i)).amplitudes();
    for (Eigen::Index j = 0; j < n_out; ++j) {
      const double pji = psi.dot(povm.elements[static_cast<std::size_t>(j)] * psi).real();
      dist.conditional(i, j) = pji;
      dist.probs[static_cast<std::size_t>(j)] += ensemble.prob(static_cast<std::size_t>(i)) * pji;
    }
  }
  return dist;
}

double shannon_entropy(const OutcomeDistribution& dist) { return shannon_bits(dist.probs); }

double mutual_information(const Povm& povm, const Ensemble& ensemble) {
  const OutcomeDistribution dist = outcome_distribution(povm, ensemble);
  double info = shannon_bits(ensemble.probs());
  for (std::size_t j = 0; j < povm.size(); ++j) {
    const double pj = dist.probs[j];
    if (pj <= 0.0) continue;
    for (std::size_t i = 0; i < ensemble.size(); ++i) {
      const double joint = ensemble.prob(i) * dist.conditional(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      if (joint <= 0.0) continue;
      const double pij = joint / pj;  // p(i | j)
      info += joint * std::log2(pij);
    }
  }
  return std::max(info, 0.0);
}

RankOnePovm random_rank_one_povm(std::size_t dim, std::size_t outcomes, Rng& rng) {
  if (outcomes < dim) fail(Errc::ShapeMismatch, "a complete rank-one POVM needs at least d outcomes");
  const auto d = static_cast<Eigen::Index>(dim);
  std::vector<CVector> raw;
  raw.reserve(outcomes);
  CMatrix s = CMatrix::Zero(d, d);
  for (std::size_t j = 0; j < outcomes; ++j) {
    raw.push_back(haar_vector(dim, rng));
    s.noalias() += raw.back() * raw.back().adjoint();
  }
  const HermitianEigen eig = eigh_descending(s);
  if (eig.values(d - 1) < 1e-12 * eig.values(0)) {
    fail(Errc::DecompositionFailure, "random directions do not span the space");
  }
  const CMatrix s_inv_sqrt = eig.vectors * eig.values.cwiseSqrt().cwiseInverse().asDiagonal() * eig.vectors.adjoint();
  RankOnePovm out;
  for (std::size_t j = 0; j < outcomes; ++j) {
    out.vectors.push_back(s_inv_sqrt * raw[j]);
    out.parent.push_back(j);
    out.guess.push_back(j);
    out.labels.push_back(std::to_string(j));
  }
  return out;
}

Povm computational_basis_povm(std::size_t dim) {
  const auto d = static_cast<Eigen::Index>(dim);
  std::vector<CMatrix> elements;
  for (Eigen::Index k = 0; k < d; ++k) {
    CMatrix e = CMatrix::Zero(d, d);
    e(k, k) = 1.0;
    elements.push_back(std::move(e));
  }
  return Povm::from_elements(std::move(elements));
}

Povm sigma_x_povm() {
  const double r = 1.0 / std::sqrt(2.0);
  CVector plus(2), minus(2);
  plus << r, r;
  minus << r, -r;
  return Povm::from_elements({plus * plus.adjoint(), minus * minus.adjoint()});
}

}  // namespace qlab
