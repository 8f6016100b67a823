#include "qlab/block.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "qlab/error.hpp"
#include "qlab/kernels.hpp"

namespace qlab {
namespace {

std::span<const Complex> view(const CVector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }
std::span<Complex> view(CVector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

}  // namespace

std::size_t BlockPovm::dim() const {
  return checked_power(local_dim, length, std::numeric_limits<std::size_t>::max());
}

double completeness_residual(const BlockPovm& block) {
  const auto dim = static_cast<Eigen::Index>(block.dim());
  CMatrix total = CMatrix::Zero(dim, dim);
  for (const BlockOutcome& o : block.outcomes) {
    if (o.factor.cols() > 0) total.noalias() += o.factor * o.factor.adjoint();
  }
  return (total - CMatrix::Identity(dim, dim)).norm();
}

void require_consistent(const BlockPovm& block, std::size_t guess_count) {
  if (block.length < 1 || block.local_dim < 1) fail(Errc::ShapeMismatch, "block POVM needs d >= 1 and L >= 1");
  const auto dim = static_cast<Eigen::Index>(block.dim());
  for (std::size_t j = 0; j < block.size(); ++j) {
    const BlockOutcome& o = block.outcomes[j];
    if (o.factor.rows() != dim) fail(Errc::ShapeMismatch, "outcome " + std::to_string(j) + " has wrong dimension");
    if (o.fixed_score) continue;
    if (o.guess.size() != static_cast<std::size_t>(block.length)) {
      fail(Errc::ShapeMismatch, "outcome " + std::to_string(j) + " guess sequence length differs from L");
    }
    for (std::size_t g : o.guess) {
      if (g >= guess_count) fail(Errc::ShapeMismatch, "outcome " + std::to_string(j) + " refers to a missing guess");
    }
  }
}

BlockPovm product_povm(const Povm& povm, int length, std::size_t dim_cap) {
  require_valid(povm);
  if (length < 1) fail(Errc::ShapeMismatch, "block length must be positive");
  checked_power(povm.dim(), length, dim_cap);
  const std::size_t m = povm.size();
  std::vector<CMatrix> factors;
  factors.reserve(m);
  for (const CMatrix& a : povm.elements) factors.push_back(psd_factor(a));

  BlockPovm out;
  out.local_dim = povm.dim();
  out.length = length;
  std::size_t count = 1;
  for (int l = 0; l < length; ++l) count *= m;
  out.outcomes.reserve(count);
  std::vector<std::size_t> digits(static_cast<std::size_t>(length), 0);
  for (std::size_t idx = 0; idx < count; ++idx) {
    std::size_t rest = idx;
    for (int l = length - 1; l >= 0; --l) {
      digits[static_cast<std::size_t>(l)] = rest % m;
      rest /= m;
    }
    BlockOutcome o;
    o.factor = factors[digits[0]];
    o.guess.push_back(povm.guess[digits[0]]);
    for (int l = 1; l < length; ++l) {
      o.factor = kron(o.factor, factors[digits[static_cast<std::size_t>(l)]]);
      o.guess.push_back(povm.guess[digits[static_cast<std::size_t>(l)]]);
    }
    out.outcomes.push_back(std::move(o));
  }
  return out;
}

CVector apply_product_operator(const CMatrix& op, const CVector& v, std::size_t d, int length, int skip) {
  CVector cur = v;
  CVector next(v.size());
  for (int l = 0; l < length; ++l) {
    if (l == skip) continue;
    kernels::apply_slot(op, view(cur), view(next), d, length, l);
    cur.swap(next);
  }
  return cur;
}

CMatrix reduced_operator(const BlockPovm& block, std::size_t outcome, int slot, const DensityMatrix& rho) {
  if (outcome >= block.size()) fail(Errc::IndexOutOfRange, "outcome index out of range");
  if (slot < 0 || slot >= block.length) fail(Errc::IndexOutOfRange, "slot index out of range");
  if (rho.dim() != block.local_dim) fail(Errc::ShapeMismatch, "density matrix dimension differs from d");
  const CMatrix& w = block.outcomes[outcome].factor;
  if (static_cast<std::size_t>(w.rows()) != block.dim()) fail(Errc::ShapeMismatch, "outcome has wrong dimension");
  const auto d = static_cast<Eigen::Index>(block.local_dim);
  CMatrix out = CMatrix::Zero(d, d);
  for (Eigen::Index c = 0; c < w.cols(); ++c) {
    const CVector col = w.col(c);
    const CVector weighted = apply_product_operator(rho.matrix, col, block.local_dim, block.length, slot);
    out += kernels::slot_reduced(view(weighted), view(col), block.local_dim, block.length, slot);
  }
  return out;
}

std::vector<double> block_outcome_probabilities(const BlockPovm& block, const DensityMatrix& rho) {
  if (rho.dim() != block.local_dim) fail(Errc::ShapeMismatch, "density matrix dimension differs from d");
  std::vector<double> probs(block.size(), 0.0);
  for (std::size_t j = 0; j < block.size(); ++j) {
    const CMatrix& w = block.outcomes[j].factor;
    for (Eigen::Index c = 0; c < w.cols(); ++c) {
      const CVector col = w.col(c);
      const CVector weighted = apply_product_operator(rho.matrix, col, block.local_dim, block.length);
      probs[j] += kernels::dotc(view(col), view(weighted)).real();
    }
  }
  return probs;
}

double block_fidelity_reduced(const BlockPovm& block, const DensityMatrix& rho, const ScoreOperators& ops) {
  require_consistent(block, ops.size());
  if (ops.dim() != block.local_dim || rho.dim() != block.local_dim) {
    fail(Errc::ShapeMismatch, "score operators / density matrix dimension differs from d");
  }
  const int length = block.length;
  double total = 0.0;
  for (std::size_t j = 0; j < block.size(); ++j) {
    const BlockOutcome& o = block.outcomes[j];
    if (o.fixed_score) {
      // Every slot sees Tr(rho^{(x)L} A_j).
      total += *o.fixed_score * static_cast<double>(length) * (rho.matrix * reduced_operator(block, j, 0, rho)).trace().real();
      continue;
    }
    for (int k = 0; k < length; ++k) {
      const CMatrix reduced = reduced_operator(block, j, k, rho);
      total += (ops.ops[o.guess[static_cast<std::size_t>(k)]] * reduced).trace().real();
    }
  }
  return total / static_cast<double>(length);
}

double block_fidelity_direct(const BlockPovm& block, const Ensemble& ensemble, const ScoreTable& table) {
  require_consistent(block, table.guesses());
  if (ensemble.dim() != block.local_dim) fail(Errc::ShapeMismatch, "ensemble dimension differs from d");
  const std::size_t n = ensemble.size();
  const int length = block.length;
  double sequences = 1.0;
  for (int l = 0; l < length; ++l) sequences *= static_cast<double>(n);
  if (sequences * static_cast<double>(block.size()) > kDirectTermLimit) {
    fail(Errc::CapExceeded, "direct block fidelity would need more than 1e7 terms");
  }
  const auto count = static_cast<std::size_t>(sequences);
  std::vector<std::size_t> digits(static_cast<std::size_t>(length));
  double total = 0.0;
  for (std::size_t idx = 0; idx < count; ++idx) {
    std::size_t rest = idx;
    for (int l = length - 1; l >= 0; --l) {
      digits[static_cast<std::size_t>(l)] = rest % n;
      rest /= n;
    }
    double p = 1.0;
    CVector psi = ensemble.state(digits[0]).amplitudes();
    p *= ensemble.prob(digits[0]);
    for (int l = 1; l < length; ++l) {
      psi = kron(psi, ensemble.state(digits[static_cast<std::size_t>(l)]).amplitudes());
      p *= ensemble.prob(digits[static_cast<std::size_t>(l)]);
    }
    if (p == 0.0) continue;
    for (const BlockOutcome& o : block.outcomes) {
      if (o.factor.cols() == 0) continue;
      const double prob = (o.factor.adjoint() * psi).squaredNorm();
      double score = 0.0;
      if (o.fixed_score) {
        score = *o.fixed_score;
      } else {
        for (int k = 0; k < length; ++k) {
          score += table.f(static_cast<Eigen::Index>(digits[static_cast<std::size_t>(k)]),
                           static_cast<Eigen::Index>(o.guess[static_cast<std::size_t>(k)]));
        }
        score /= static_cast<double>(length);
      }
      total += p * prob * score;
    }
  }
  return total;
}

double block_fidelity(const BlockPovm& block, const Ensemble& ensemble, const FidelityKernel& kernel,
                      BlockFidelityPath path) {
  const ScoreTable table = kernel.table(ensemble);
  if (path == BlockFidelityPath::Direct) return block_fidelity_direct(block, ensemble, table);
  return block_fidelity_reduced(block, density_matrix(ensemble), score_operators(ensemble, table));
}

}  // namespace qlab
