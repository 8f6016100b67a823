#include "qlab/typical.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

#include "qlab/error.hpp"

namespace qlab {
namespace {

double binomial(int n, int k) {
  long double c = 1.0L;
  for (int i = 1; i <= k; ++i) c = c * static_cast<long double>(n - k + i) / static_cast<long double>(i);
  return static_cast<double>(std::round(c));
}

void enumerate(std::vector<int>& counts, std::size_t pos, int remaining, std::vector<std::vector<int>>& out) {
  if (pos + 1 == counts.size()) {
    counts[pos] = remaining;
    out.push_back(counts);
    return;
  }
  for (int n = remaining; n >= 0; --n) {
    counts[pos] = n;
    enumerate(counts, pos + 1, remaining - n, out);
  }
}

void require_materialized(const TypicalProjector& pi) {
  if (!pi.materialized) fail(Errc::CapExceeded, "typical projector is in index-set mode (d^L' above the cap)");
}

}  // namespace

std::size_t TypicalProjector::full_dim() const {
  require_materialized(*this);
  return static_cast<std::size_t>(basis.rows());
}

CMatrix TypicalProjector::projector() const {
  require_materialized(*this);
  return basis * basis.adjoint();
}

double TypicalProjector::bound_lo() const { return (1.0 - epsilon) * std::exp2(length * (entropy - eta)); }
double TypicalProjector::bound_hi() const { return std::exp2(length * (entropy + eta)); }

TypicalProjector typical_projector(const DensityMatrix& rho, int length, double eta, std::size_t dim_cap) {
  if (length < 1 || length > 64) fail(Errc::ConfigError, "L' must lie in [1, 64]");
  if (!(eta >= 0.0)) fail(Errc::ConfigError, "eta' must be non-negative");
  const std::size_t d = rho.dim();

  TypicalProjector pi;
  pi.length = length;
  pi.eta = eta;
  pi.spectrum = rho.eigenvalues;
  pi.eigenvectors = rho.eigenvectors;
  pi.entropy = von_neumann_entropy(rho);
  pi.log2_lo = -length * (pi.entropy + eta);
  pi.log2_hi = -length * (pi.entropy - eta);
  const double slack_lo = 1e-12 * std::max(1.0, std::abs(pi.log2_lo));
  const double slack_hi = 1e-12 * std::max(1.0, std::abs(pi.log2_hi));

  std::vector<double> log_eig(d);
  for (std::size_t i = 0; i < d; ++i) {
    const double x = rho.eigenvalues(static_cast<Eigen::Index>(i));
    log_eig[i] = x > 0.0 ? std::log2(x) : -std::numeric_limits<double>::infinity();
  }

  std::vector<std::vector<int>> patterns;
  std::vector<int> scratch(d, 0);
  enumerate(scratch, 0, length, patterns);
  for (std::vector<int>& counts : patterns) {
    TypeClass tc;
    double mult = 1.0;
    int remaining = length;
    double log_value = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      mult *= binomial(remaining, counts[i]);
      remaining -= counts[i];
      if (counts[i] > 0) log_value += counts[i] * log_eig[i];
    }
    tc.counts = std::move(counts);
    tc.multiplicity = mult;
    tc.log2_eigenvalue = log_value;
    tc.weight = std::isfinite(log_value) ? mult * std::exp2(log_value) : 0.0;
    tc.kept = std::isfinite(log_value) && log_value >= pi.log2_lo - slack_lo && log_value <= pi.log2_hi + slack_hi;
    if (tc.kept) {
      pi.kept_dim += tc.multiplicity;
      pi.kept_weight += tc.weight;
    } else {
      pi.epsilon += tc.weight;
    }
    pi.classes.push_back(std::move(tc));
  }
  pi.kept_weight = std::clamp(pi.kept_weight, 0.0, 1.0);
  pi.epsilon = std::clamp(pi.epsilon, 0.0, 1.0);
  if (pi.kept_dim == 0.0) {
    pi.kept_weight = 0.0;
    pi.epsilon = 1.0;
    pi.warnings.push_back("typical window contains no eigenvalue; every block is rejected");
  }

  std::size_t full = 0;
  try {
    full = checked_power(d, length, dim_cap);
  } catch (const Error&) {
    return pi;
  }

  std::map<std::vector<int>, bool> kept_by_pattern;
  for (const TypeClass& tc : pi.classes) kept_by_pattern[tc.counts] = tc.kept;
  std::vector<std::size_t> rejected;
  std::vector<int> counts(d);
  for (std::size_t idx = 0; idx < full; ++idx) {
    std::fill(counts.begin(), counts.end(), 0);
    std::size_t rest = idx;
    for (int l = 0; l < length; ++l) {
      ++counts[rest % d];
      rest /= d;
    }
    (kept_by_pattern.at(counts) ? pi.kept_indices : rejected).push_back(idx);
  }

  auto product_vector = [&](std::size_t idx) {
    std::vector<std::size_t> digits(static_cast<std::size_t>(length));
    for (int l = length - 1; l >= 0; --l) {
      digits[static_cast<std::size_t>(l)] = idx % d;
      idx /= d;
    }
    CVector v = rho.eigenvectors.col(static_cast<Eigen::Index>(digits[0]));
    for (int l = 1; l < length; ++l) v = kron(v, CVector(rho.eigenvectors.col(static_cast<Eigen::Index>(digits[static_cast<std::size_t>(l)]))));
    return v;
  };
  const auto rows = static_cast<Eigen::Index>(full);
  pi.basis.resize(rows, static_cast<Eigen::Index>(pi.kept_indices.size()));
  for (std::size_t c = 0; c < pi.kept_indices.size(); ++c) pi.basis.col(static_cast<Eigen::Index>(c)) = product_vector(pi.kept_indices[c]);
  pi.rejected_basis.resize(rows, static_cast<Eigen::Index>(rejected.size()));
  for (std::size_t c = 0; c < rejected.size(); ++c) pi.rejected_basis.col(static_cast<Eigen::Index>(c)) = product_vector(rejected[c]);
  pi.materialized = true;
  return pi;
}

BlockPovm restrict_povm(const BlockPovm& block, const TypicalProjector& pi, double f_min) {
  require_materialized(pi);
  if (block.local_dim != pi.local_dim() || block.length != pi.length) {
    fail(Errc::ShapeMismatch, "block POVM shape differs from the typical projector (d, L')");
  }
  BlockPovm out;
  out.local_dim = block.local_dim;
  out.length = block.length;
  out.outcomes.reserve(block.size() + 1);
  for (const BlockOutcome& o : block.outcomes) {
    if (static_cast<std::size_t>(o.factor.rows()) != pi.full_dim()) fail(Errc::ShapeMismatch, "outcome has wrong dimension");
    out.outcomes.push_back({pi.basis * (pi.basis.adjoint() * o.factor), o.guess, o.fixed_score});
  }
  out.outcomes.push_back({pi.rejected_basis, {}, f_min});
  return out;
}

BlockPovm restrict_povm(const BlockPovm& block, const TypicalProjector& pi, const Ensemble& ensemble,
                        const FidelityKernel& kernel) {
  return restrict_povm(block, pi, kernel.table(ensemble).f_min);
}

double commutation_residual(const TypicalProjector& pi, const DensityMatrix& rho) {
  const CMatrix p = pi.projector();
  const CMatrix r = tensor_power(rho.matrix, pi.length, static_cast<std::size_t>(p.rows()));
  return (p * r - r * p).norm();
}

}  // namespace qlab
