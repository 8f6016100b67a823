#include <cmath>
#include <set>

#include "doctest.h"
#include "oracles.hpp"
#include "qlab/block.hpp"
#include "qlab/sqrtm.hpp"
#include "qlab/stats.hpp"
#include "support.hpp"

using namespace qlab;

namespace {

RankOnePovm z_rank_one() {
  RankOnePovm r;
  r.vectors = {CVector::Unit(2, 0), CVector::Unit(2, 1)};
  r.parent = {0, 1};
  r.guess = {0, 1};
  return r;
}

RankOnePovm x_rank_one() {
  RankOnePovm r;
  const double h = std::sqrt(0.5);
  CVector plus(2), minus(2);
  plus << h, h;
  minus << h, -h;
  r.vectors = {plus, minus};
  r.parent = {0, 1};
  r.guess = {0, 1};
  return r;
}

RankOnePovm trine_rank_one() {
  RankOnePovm r;
  const Ensemble t = ensembles::trine();
  for (std::size_t j = 0; j < 3; ++j) {
    r.vectors.push_back(std::sqrt(2.0 / 3.0) * t.state(j).amplitudes());
    r.parent.push_back(j);
    r.guess.push_back(j);
  }
  return r;
}

double sum(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

}  // namespace

TEST_CASE("sampled factor frequencies follow the weights") {
  const SampledBlocks z = sample_blocks(z_rank_one(), 1, 10000, 1);
  std::size_t zeros = 0;
  for (const auto& seq : z.factor_indices) zeros += seq[0] == 0 ? 1 : 0;
  CHECK(std::abs(static_cast<double>(zeros) / 10000.0 - 0.5) < 0.02);
  for (Eigen::Index c = 0; c < z.vectors.cols(); ++c) CHECK(std::abs(z.vectors.col(c).norm() - 1.0) < 1e-10);

  // Chi-square against p = 1/3 on 2 * 6000 draws; 3 categories, 2 dof, 99.9% quantile 13.8.
  const SampledBlocks t = sample_blocks(trine_rank_one(), 2, 6000, 5);
  std::vector<double> counts(3, 0.0);
  for (const auto& seq : t.factor_indices)
    for (std::size_t i : seq) counts[i] += 1.0;
  double chi2 = 0.0;
  for (double c : counts) chi2 += (c - 4000.0) * (c - 4000.0) / 4000.0;
  CHECK(chi2 < 13.8);
}

TEST_CASE("all nine trine pairs occur among 100 samples") {
  const SampledBlocks t = sample_blocks(trine_rank_one(), 2, 100, 2);
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (const auto& seq : t.factor_indices) seen.insert({seq[0], seq[1]});
  CHECK(seen.size() == 9);
  for (std::size_t j = 0; j < t.size(); ++j) {
    const CVector expected = oracle::kron(CMatrix(trine_rank_one().direction(t.factor_indices[j][0])),
                                          CMatrix(trine_rank_one().direction(t.factor_indices[j][1])));
    CHECK((t.vectors.col(static_cast<Eigen::Index>(j)) - expected).norm() < 1e-12);
    CHECK(t.guess[j] == t.factor_indices[j]);
  }
}

TEST_CASE("a single sampled direction") {
  const SampledBlocks one = sample_blocks(trine_rank_one(), 2, 1, 9);
  const SqrtMeasurement m = build_sqrt_measurement(one);
  CHECK(m.dim_hb == 1);
  REQUIRE(m.povm.size() == 2);
  const CVector b = one.vectors.col(0);
  CHECK((m.povm.outcomes[1].element() - b * b.adjoint()).norm() < 1e-10);
  CHECK((m.povm.outcomes[0].element() - (CMatrix::Identity(4, 4) - b * b.adjoint())).norm() < 1e-10);
  CHECK(m.completeness_residual < 1e-10);
  CHECK(m.alpha_sq[0] == doctest::Approx(1.0));
  CHECK(std::abs(m.perp_norms[0]) < 1e-10);
}

TEST_CASE("orthonormal samples reproduce themselves") {
  const SampledBlocks blocks = blocks_from_indices(z_rank_one(), 2, {{0, 0}, {0, 1}, {1, 0}, {1, 1}});
  const SqrtMeasurement m = build_sqrt_measurement(blocks);
  CHECK(m.dim_hb == 4);
  CHECK((m.b - CMatrix::Identity(4, 4)).norm() < 1e-12);
  CHECK(m.povm.outcomes[0].element().norm() < 1e-12);
  for (std::size_t j = 0; j < 4; ++j) {
    const CVector b = blocks.vectors.col(static_cast<Eigen::Index>(j));
    CHECK((m.povm.outcomes[j + 1].element() - b * b.adjoint()).norm() < 1e-12);
    CHECK(std::abs(m.perp_norms[j]) < 1e-12);
  }
  CHECK_FALSE(m.rank_ambiguous);
}

TEST_CASE("completeness, span statistics and the perpendicular bound over 100 seeds") {
  const RankOnePovm trine = trine_rank_one();
  const std::size_t dim = 16;
  const std::size_t n = threshold_outcomes(2, 0.5, 4, 0.5);
  REQUIRE(n == 64);
  RunningStats dim_stats, perp_stats;
  CMatrix mean_b = CMatrix::Zero(16, 16);
  std::vector<CMatrix> bs;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const SqrtMeasurement m = build_sqrt_measurement(sample_blocks(trine, 4, n, seed));
    CHECK(m.completeness_residual < 1e-8);
    CHECK(m.dim_hb <= std::min<std::size_t>(n, dim));
    for (double p : m.perp_norms) CHECK(p >= -1e-10);
    dim_stats.add(static_cast<double>(m.dim_hb));
    perp_stats.add(sum(m.perp_norms) / static_cast<double>(n));
    mean_b += m.b / 100.0;
    bs.push_back(m.b);
  }
  CHECK(expected_dim_bound(dim, n) == doctest::Approx(12.25));
  CHECK(dim_stats.mean() >= expected_dim_bound(dim, n) - 3.0 * dim_stats.stderr_mean());
  CHECK(dim_stats.mean() <= 16.0);
  CHECK(perp_stats.mean() <= expected_perp_bound(dim, n) + 3.0 * perp_stats.stderr_mean());

  // (d^L / N) mean(B) -> I, compared with the Monte Carlo spread of the same statistic.
  RunningStats dist;
  for (const CMatrix& b : bs) dist.add(((static_cast<double>(dim) / n) * b - CMatrix::Identity(16, 16)).norm());
  const double mean_dist = ((static_cast<double>(dim) / n) * mean_b - CMatrix::Identity(16, 16)).norm();
  CHECK(mean_dist <= 3.0 * dist.mean() / std::sqrt(100.0));
}

TEST_CASE("large N nearly recovers the single-copy optimum") {
  const Ensemble t = ensembles::trine();
  const FidelityKernel k = FidelityKernel::guess_score();
  std::vector<std::uint64_t> seeds;
  for (std::uint64_t s = 0; s < 100; ++s) seeds.push_back(s);
  const auto reports = evaluate_sqrt_measurement(trine_rank_one(), t, k, 2, 1024, seeds);
  RunningStats f, perp;
  for (const auto& r : reports) {
    f.add(r.fidelity);
    perp.add(r.mean_perp);
  }
  CHECK(perp.mean() <= (4.0 / 1024) * (3.0 / 1024) + 3.0 * perp.stderr_mean());
  CHECK(std::abs(f.mean() - 1.0 / 3.0) < 0.01);
}

TEST_CASE("two-state optimum from its two directions") {
  const Ensemble e = ensembles::two_state(0.9);
  const FidelityKernel k = FidelityKernel::guess_score();
  const SampledBlocks blocks = blocks_from_indices(x_rank_one(), 1, {{0}, {1}});
  const SqrtMeasurement m = build_sqrt_measurement(blocks);
  const SqrtMeasurementReport r =
      score_sqrt_measurement(m, density_matrix(e), score_operators(e, k), sqrt_reference(x_rank_one(), e, k));
  CHECK(r.fidelity == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(r.dim_hb == 2);
  CHECK(r.c0_weight < 1e-12);
}

TEST_CASE("per-seed fidelity floor, entropy counting bound and direct cross-check") {
  const Ensemble t = ensembles::trine();
  const FidelityKernel k = FidelityKernel::guess_score();
  const RankOnePovm trine = trine_rank_one();
  const OptimalityCertificate cert = certify(trine, t, k);
  const SqrtReference ref = sqrt_reference(trine, t, k);
  CHECK(ref.fidelity == doctest::Approx(cert.fidelity));
  CHECK(ref.bound_constant == doctest::Approx(cert.bound_constant));
  CHECK(ref.rho_max == doctest::Approx(0.5));
  for (int length : {1, 2, 3}) {
    for (std::size_t n : {std::size_t{3}, std::size_t{8}, std::size_t{40}}) {
      std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
      const auto reports = evaluate_sqrt_measurement(trine, t, k, length, n, seeds);
      for (std::size_t s = 0; s < reports.size(); ++s) {
        const auto& r = reports[s];
        const double dim = std::pow(2.0, length);
        const double floor = cert.fidelity - cert.bound_constant * std::pow(0.5, length - 1) *
                                                 (r.perp_sum + dim - static_cast<double>(r.dim_hb));
        CHECK(r.fidelity_floor == doctest::Approx(floor).epsilon(1e-10));
        CHECK(r.fidelity >= floor - 1e-10);
        CHECK(r.fidelity_pessimistic <= r.fidelity + 1e-12);
        CHECK(r.entropy_per_slot <= std::log2(static_cast<double>(n) + 1.0) / length + 1e-12);
        CHECK(r.completeness_residual < 1e-8);

        const SqrtMeasurement m = build_sqrt_measurement(sample_blocks(trine, length, n, seeds[s]), ref.blind_guess);
        const double direct = block_fidelity(m.povm, t, k, BlockFidelityPath::Direct);
        CHECK(direct == doctest::Approx(r.fidelity).epsilon(1e-9));
        const std::vector<double> probs = block_outcome_probabilities(m.povm, density_matrix(t));
        CHECK(probs[0] == doctest::Approx(r.c0_weight).epsilon(1e-9));
        CHECK(sum(probs) == doctest::Approx(1.0).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("threshold outcome count") {
  for (int length : {2, 4, 6, 8}) {
    CHECK(threshold_outcomes(2, 0.5, length, 0.5) ==
          static_cast<std::size_t>(std::ceil(std::pow(2.0, 1.5 * length) - 1e-9)));
  }
  CHECK(threshold_outcomes(2, 0.9, 3, 0.2) ==
        static_cast<std::size_t>(std::ceil(std::pow(2.0, 3 * (2.0 + std::log2(0.9) + 0.2)))));
  CHECK(code_of([] { (void)threshold_outcomes(2, 0.5, 12, 0.5); }) == Errc::CapExceeded);
}

TEST_CASE("bad inputs") {
  RankOnePovm bad = z_rank_one();
  bad.vectors[1] *= 0.5;
  CHECK(code_of([&] { (void)sample_blocks(bad, 1, 4, 0); }) == Errc::BadWeights);
  CHECK(code_of([] { (void)sample_blocks(trine_rank_one(), 13, 4, 0); }) == Errc::CapExceeded);
  SqrtLimits small;
  small.outcome_cap = 10;
  CHECK(code_of([&] { (void)sample_blocks(trine_rank_one(), 2, 11, 0, small); }) == Errc::CapExceeded);
  CHECK(code_of([] { (void)blocks_from_indices(z_rank_one(), 1, {{2}}); }) == Errc::IndexOutOfRange);
}

TEST_CASE("sampling is reproducible per seed") {
  const SampledBlocks a = sample_blocks(trine_rank_one(), 3, 20, 42);
  const SampledBlocks b = sample_blocks(trine_rank_one(), 3, 20, 42);
  const SampledBlocks c = sample_blocks(trine_rank_one(), 3, 20, 43);
  CHECK(a.factor_indices == b.factor_indices);
  CHECK(a.factor_indices != c.factor_indices);
}
