// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "qlab/block.hpp"
#include "qlab/cli.hpp"
#include "qlab/fidelity.hpp"
#include "qlab/pipeline.hpp"
#include "qlab/sqrtm.hpp"
#include "qlab/stats.hpp"
#include "qlab/typical.hpp"

using namespace qlab;

namespace {

struct Verdict {
  bool pass = true;
  std::vector<std::string> notes;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      notes.push_back("failed: " + what);
    }
  }
  void note(const std::string& what) { notes.push_back(what); }
};

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

std::vector<CVector> amplitudes(const Ensemble& e) {
  std::vector<CVector> out;
  for (const PureState& s : e.states()) out.push_back(s.amplitudes());
  return out;
}

Povm trine_povm() {
  const Ensemble t = ensembles::trine();
  std::vector<CMatrix> elements;
  for (const PureState& s : t.states()) elements.push_back((2.0 / 3.0) * s.projector());
  return Povm::from_elements(elements);
}

RankOnePovm trine_rank_one() {
  return refine_to_rank_one(trine_povm());
}

FidelityKernel z_overlap() {
  return FidelityKernel::overlap({PureState(CVector::Unit(2, 0)), PureState(CVector::Unit(2, 1))});
}

std::vector<std::uint64_t> seed_range(std::uint64_t n) {
  std::vector<std::uint64_t> s;
  for (std::uint64_t i = 0; i < n; ++i) s.push_back(i);
  return s;
}

Verdict criterion1(double& limit) {
  limit = 1.0;
  Verdict v;
  for (double a2 : {0.5, 0.75, 0.9}) {
    const Ensemble e = ensembles::two_state(a2);
    const FidelityKernel k = FidelityKernel::guess_score();
    const OptimizeResult r = optimize_povm(e, k);
    const double target = 2.0 * std::sqrt(a2 * (1.0 - a2));
    const std::string tag = "alpha2=" + fmt("%g", a2);
    v.require(std::abs(r.certificate.fidelity - target) < 1e-6, tag + " F within 1e-6 of 2ab");
    v.require(r.certificate.stationarity_residual < 1e-6, tag + " stationarity");
    v.require(r.certificate.dual_min_eig >= -1e-8, tag + " dual condition");
    for (std::size_t j = 0; j < r.rank_one.size(); ++j) {
      const CVector b = r.rank_one.direction(j);
      const double px = std::norm((b(0) + b(1)) / std::sqrt(2.0));
      v.require(std::min(px, 1.0 - px) < 1e-6, tag + " outcome along a sigma_x eigenvector");
    }
    const double h = shannon_entropy(outcome_distribution(r.povm, e));
    v.require(std::abs(h - 1.0) < 1e-9, tag + " output entropy 1 bit");
    v.note(tag + " F=" + fmt("%.12f", r.certificate.fidelity) + " H=" + fmt("%.12f", h));
  }
  return v;
}

Verdict criterion2(double& limit) {
  limit = 10.0;
  Verdict v;
  const Ensemble t = ensembles::trine();
  const FidelityKernel k = FidelityKernel::guess_score();
  const OptimizeResult r = optimize_povm(t, k);
  v.require(std::abs(r.certificate.fidelity - 1.0 / 3.0) < 1e-6, "optimizer F within 1e-6 of 1/3");
  const Povm p = trine_povm();
  const double brute = oracle::mean_fidelity(amplitudes(t), t.probs(), p.elements, p.guess, k.table(t).f);
  v.require(std::abs(brute - 1.0 / 3.0) < 1e-12, "exhaustive 3x3 sum gives 1/3");
  const double grid = oracle::qubit_projective_grid_max(amplitudes(t), t.probs(), k.table(t).f);
  v.require(grid <= r.certificate.fidelity + 1e-4, "no projective measurement beats the optimum by 1e-4");
  const double h = shannon_entropy(outcome_distribution(r.povm, t));
  v.require(std::abs(h - std::log2(3.0)) < 1e-6, "output entropy log2 3");
  const double h_vn = von_neumann_entropy(density_matrix(t));
  v.require(h > h_vn, "output entropy exceeds the von Neumann entropy");
  v.note("F=" + fmt("%.12f", r.certificate.fidelity) + " grid=" + fmt("%.9f", grid) + " H=" + fmt("%.9f", h) +
         " S=" + fmt("%.9f", h_vn));
  return v;
}

Verdict criterion3(double& limit) {
  limit = 10.0;
  Verdict v;
  const Ensemble e = ensembles::bloch_sample(100000, 7);
  const double f = mean_fidelity(computational_basis_povm(2), e, z_overlap());
  v.require(std::abs(f - 2.0 / 3.0) < 0.01, "F within 0.01 of 2/3");
  v.note("F=" + fmt("%.6f", f));
  return v;
}

Verdict criterion4(double& limit) {
  limit = 10.0;
  Verdict v;
  const Ensemble e = ensembles::z_pair();
  const Povm z = computational_basis_povm(2);
  const double f = mean_fidelity(z, e, z_overlap());
  const OutcomeDistribution d = outcome_distribution(z, e);
  v.require(f == 1.0, "F = 1 exactly");
  v.require(d.probs[0] == 0.5 && d.probs[1] == 0.5, "outcome distribution (1/2, 1/2)");
  v.require(shannon_entropy(d) == 1.0, "entropy 1 bit");
  v.note("F=" + fmt("%.17g", f));
  return v;
}

Verdict criterion5(double& limit) {
  limit = 60.0;
  Verdict v;
  const RankOnePovm trine = trine_rank_one();
  const std::size_t n = 64, dim = 16;
  RunningStats dims, perps;
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const SqrtMeasurement m = build_sqrt_measurement(sample_blocks(trine, 4, n, seed));
    worst = std::max(worst, m.completeness_residual);
    dims.add(static_cast<double>(m.dim_hb));
    double perp = 0.0;
    for (double p : m.perp_norms) perp += p;
    perps.add(perp / static_cast<double>(n));
  }
  v.require(worst < 1e-8, "completeness residual < 1e-8 on every seed");
  v.require(dims.mean() >= 12.25 - 3.0 * dims.stderr_mean(), "mean dim_HB >= 12.25 - 3 sigma");
  const double perp_bound = (16.0 / 64.0) * (15.0 / 64.0);
  v.require(perps.mean() <= perp_bound + 3.0 * perps.stderr_mean(), "mean perp norm <= (16/64)(15/64) + 3 sigma");
  v.require(std::abs(expected_dim_bound(dim, n) - 12.25) < 1e-12, "dimension bound helper");
  v.note("dim_HB=" + fmt("%.4f", dims.mean()) + "+-" + fmt("%.4f", dims.stderr_mean()) + " perp=" +
         fmt("%.5f", perps.mean()) + "+-" + fmt("%.5f", perps.stderr_mean()) + " bound=" + fmt("%.5f", perp_bound) +
         " max residual=" + fmt("%.2e", worst));
  return v;
}

Verdict criterion6(double& limit) {
  limit = 600.0;
  Verdict v;
  const Ensemble t = ensembles::trine();
  const FidelityKernel k = FidelityKernel::guess_score();
  const OptimizeResult single = optimize_povm(t, k);
  const double f_max = single.certificate.fidelity;
  double prev_deficit = 0.0, prev_err = 0.0;
  bool first = true;
  for (int length : {2, 4, 6, 8}) {
    const auto start = std::chrono::steady_clock::now();
    const std::size_t n = threshold_outcomes(2, 0.5, length, 0.5);
    v.require(n == static_cast<std::size_t>(std::ceil(std::pow(2.0, 1.5 * length) - 1e-9)), "N = ceil(2^{1.5L})");
    const auto reports = evaluate_sqrt_measurement(single.rank_one, t, k, length, n, seed_range(50));
    RunningStats f;
    double max_entropy = 0.0;
    for (const auto& r : reports) {
      f.add(r.fidelity);
      max_entropy = std::max(max_entropy, r.entropy_per_slot);
    }
    const double deficit = f_max - f.mean();
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!first) {
      v.require(deficit <= prev_deficit + 2.0 * std::hypot(f.stderr_mean(), prev_err),
                "deficit nonincreasing at L=" + std::to_string(length));
    }
    v.require(max_entropy <= 1.5 + std::log2(1.0 + 1.0 / static_cast<double>(n)) + 1e-12,
              "per-slot entropy bound at L=" + std::to_string(length));
    v.require(elapsed < limit, "runtime at L=" + std::to_string(length));
    v.note("L=" + std::to_string(length) + " N=" + std::to_string(n) + " deficit=" + fmt("%.5f", deficit) + "+-" +
           fmt("%.5f", f.stderr_mean()) + " max H/slot=" + fmt("%.5f", max_entropy) + " t=" + fmt("%.1fs", elapsed));
    prev_deficit = deficit;
    prev_err = f.stderr_mean();
    first = false;
  }
  limit = 4 * 600.0;
  return v;
}

Verdict criterion7(double& limit) {
  limit = 30.0;
  Verdict v;
  CMatrix m = CMatrix::Zero(2, 2);
  m(0, 0) = 0.9;
  m(1, 1) = 0.1;
  const DensityMatrix rho = make_density_matrix(m);
  const double h = von_neumann_entropy(rho);
  double prev_eps = 2.0;
  for (int length : {4, 8, 16, 24}) {
    const TypicalProjector pi = typical_projector(rho, length, 0.15);
    const oracle::QubitTypical o = oracle::qubit_typical(0.9, length, 0.15);
    const std::string tag = "L'=" + std::to_string(length);
    v.require(std::abs(pi.epsilon - static_cast<double>(o.outside_weight)) < 1e-12, tag + " eps' matches binomial oracle");
    v.require(pi.kept_weight >= 1.0 - pi.epsilon - 1e-12, tag + " kept_weight >= 1 - eps'");
    v.require(pi.epsilon < prev_eps, tag + " eps' decreasing in L' (" + fmt("%.6f", prev_eps) + " -> " +
                                         fmt("%.6f", pi.epsilon) + ")");
    v.require((1.0 - pi.epsilon) * std::exp2(length * (h - 0.15)) <= pi.kept_dim * (1 + 1e-12) &&
                  pi.kept_dim <= std::exp2(length * (h + 0.15)) * (1 + 1e-12),
              tag + " dimension sandwich");
    if (pi.materialized && length <= 10) {
      v.require(commutation_residual(pi, rho) < 1e-9, tag + " commutation residual");
    }
    v.note(tag + " kept_dim=" + fmt("%.0f", pi.kept_dim) + " kept_weight=" + fmt("%.6f", pi.kept_weight) +
           " eps'=" + fmt("%.6f", pi.epsilon));
    prev_eps = pi.epsilon;
  }
  return v;
}

Verdict criterion8(double& limit) {
  limit = 300.0;
  Verdict v;
  const Ensemble e = ensembles::two_state(0.9);
  const FidelityKernel k = FidelityKernel::guess_score();
  const DensityMatrix rho = density_matrix(e);
  const OptimizeResult single = optimize_povm(e, k);
  const ScoreTable table = k.table(e);
  double worst_margin = 1e300;
  for (int length : {4, 6, 8}) {
    for (double eta : {0.1, 0.15, 0.2, 0.3}) {
      const TypicalProjector pi = typical_projector(rho, length, eta);
      const BlockPovm full = product_povm(single.povm, length);
      const double drop = block_fidelity(full, e, k) - block_fidelity(restrict_povm(full, pi, e, k), e, k);
      const double margin = pi.epsilon * (table.f_max - table.f_min) + 1e-9 - drop;
      worst_margin = std::min(worst_margin, margin);
      v.require(margin >= 0.0, "restriction penalty at L'=" + std::to_string(length) + " eta'=" + fmt("%g", eta));
    }
  }
  v.note("restriction: smallest slack " + fmt("%.3e", worst_margin));

  ProtocolConfig c(e, k);
  c.block_length = 8;
  c.blocks = 2;
  c.eta_prime = 0.15;
  c.eta = 0.5;
  c.seeds = {1, 2, 3};
  const ProtocolReport r = run_protocol(c);
  const EntropyAccounting acc = entropy_accounting(r);
  v.require(r.auto_outcomes, "auto N");
  v.require(acc.per_state_bits <= acc.bound_per_state + 1e-9, "per-state bits within the bound");
  for (const ProtocolSeedReport& s : r.seeds) {
    v.require(s.fidelity_total >= protocol_fidelity_floor(r, s) - 1e-12,
              "F_total above the filtering plus square-root floor, seed " + std::to_string(s.seed));
  }
  v.note("example1: N=" + std::to_string(r.outcomes) + " eps'=" + fmt("%.6f", r.epsilon) + " bits/state=" +
         fmt("%.7f", acc.per_state_bits) + " bound=" + fmt("%.7f", acc.bound_per_state) + " F_total=" +
         fmt("%.6f", r.fidelity_mean) + " floor=" + fmt("%.6f", protocol_fidelity_floor(r, r.seeds.front())));

  const Ensemble t = ensembles::trine();
  ProtocolConfig ct(t, k);
  ct.block_length = 2;
  ct.blocks = 2;
  ct.eta_prime = 0.05;
  ct.outcomes = 40;
  ct.seeds = {7, 8, 9};
  const ProtocolReport rt = run_protocol(ct);
  v.require(rt.identity_filter, "trine filter is the identity");
  const OptimizeResult trine_single = optimize_povm(t, k, ct.optimizer);
  const auto bare = evaluate_sqrt_measurement(trine_single.rank_one, t, k, 4, 40, ct.seeds);
  bool same = bare.size() == rt.seeds.size();
  for (std::size_t s = 0; same && s < bare.size(); ++s) {
    const SqrtMeasurementReport& a = rt.seeds[s].sqrtm;
    const SqrtMeasurementReport& b = bare[s];
    same = a.seed == b.seed && a.dim_hb == b.dim_hb && a.fidelity == b.fidelity &&
           a.fidelity_pessimistic == b.fidelity_pessimistic && a.fidelity_floor == b.fidelity_floor &&
           a.entropy_per_slot == b.entropy_per_slot && a.c0_weight == b.c0_weight && a.perp_norms == b.perp_norms &&
           a.alpha_sq == b.alpha_sq && a.completeness_residual == b.completeness_residual;
  }
  v.require(same, "trine pipeline matches a bare square-root run exactly");
  return v;
}

Verdict criterion9(double& limit) {
  limit = 120.0;
  Verdict v;
  double worst = 0.0, worst_iid = 0.0;
  std::size_t instances = 0;
  auto compare = [&](const BlockPovm& b, const Ensemble& e, const FidelityKernel& k) {
    const double gap = std::abs(block_fidelity(b, e, k, BlockFidelityPath::Reduced) -
                                block_fidelity(b, e, k, BlockFidelityPath::Direct));
    worst = std::max(worst, gap);
    ++instances;
  };
  const FidelityKernel gs = FidelityKernel::guess_score();
  std::vector<std::pair<Ensemble, FidelityKernel>> problems;
  problems.emplace_back(ensembles::trine(), gs);
  problems.emplace_back(ensembles::two_state(0.9), gs);
  problems.emplace_back(ensembles::bloch_sample(3, 5), FidelityKernel::matrix(RMatrix::Random(3, 3)));
  problems.emplace_back(ensembles::bloch_sample(4, 6), z_overlap());
  for (const auto& [e, k] : problems) {
    const OptimizeResult opt = optimize_povm(e, k);
    const double single = mean_fidelity(opt.povm, e, k);
    for (int length = 1; length <= 8; ++length) {
      const BlockPovm b = product_povm(opt.povm, length);
      if (std::pow(static_cast<double>(e.size()), length) * static_cast<double>(b.size()) <= kDirectTermLimit) compare(b, e, k);
      if (length <= 4) worst_iid = std::max(worst_iid, std::abs(block_fidelity(b, e, k) - single));
    }
    for (int length = 1; length <= 4; ++length) {
      for (std::size_t n : {std::size_t{3}, std::size_t{17}}) {
        const SqrtReference ref = sqrt_reference(opt.rank_one, e, k);
        const SqrtMeasurement m = build_sqrt_measurement(sample_blocks(opt.rank_one, length, n, 1), ref.blind_guess);
        compare(m.povm, e, k);
      }
    }
  }
  const Ensemble ex1 = ensembles::two_state(0.9);
  const TypicalProjector pi = typical_projector(density_matrix(ex1), 8, 0.15);
  compare(restrict_povm(product_povm(optimize_povm(ex1, gs).povm, 8), pi, ex1, gs), ex1, gs);
  v.require(worst < 1e-9, "direct and reduced paths agree within 1e-9");
  v.require(worst_iid < 1e-9, "product F_L equals single-copy F for L <= 4");
  v.note(std::to_string(instances) + " instances, max path gap " + fmt("%.2e", worst) + ", max L-dependence " +
         fmt("%.2e", worst_iid));
  return v;
}

Verdict criterion10(double& limit) {
  limit = 120.0;
  Verdict v;
  ::setenv("SOURCE_DATE_EPOCH", "1700000000", 1);
  const std::vector<std::vector<std::string>> commands = {
      {"optimize", "--ensemble", "bloch:7:3", "--seed", "5"},
      {"block", "--ensemble", "trine", "--L", "1,2,3"},
      {"sqrtm", "--ensemble", "trine", "--L", "2,4", "--auto-n", "--eta", "0.5", "--seeds", "5", "--seed", "3"},
      {"typical", "--ensemble", "two-state:0.9", "--Lprime", "4,8,16,24", "--etaprime", "0.15"},
      {"pipeline", "--ensemble", "two-state:0.9", "--Lprime", "8", "--etaprime", "0.15", "--L", "1,2", "--N", "16",
       "--seeds", "3", "--seed", "2"},
      {"demo", "example2"},
      {"demo", "bloch", "--samples", "2000", "--seed", "4"},
      {"sweep", "--ensemble", "trine", "--L", "2,4", "--auto-n", "--eta", "0.5", "--seeds", "5"},
      {"sweep", "--ensemble", "trine", "--L", "2", "--N", "8", "--seeds", "3", "--format", "json"},
  };
  for (const auto& cmd : commands) {
    std::ostringstream a, b, ea, eb;
    const int ca = cli::run(cmd, a, ea);
    const int cb = cli::run(cmd, b, eb);
    v.require(ca == 0 && cb == 0, cmd.front() + " exit status");
    v.require(!a.str().empty() && a.str() == b.str(), cmd.front() + " output byte-identical");
  }
  v.note(std::to_string(commands.size()) + " commands over every subcommand");
  return v;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict(double&)>>> criteria = {
      {"two-state optimum along sigma_x", criterion1},
      {"trine optimum and output entropy", criterion2},
      {"Bloch sphere sigma_z fidelity", criterion3},
      {"perfect discrimination of +-z", criterion4},
      {"square-root measurement statistics", criterion5},
      {"square-root measurement trend in L", criterion6},
      {"typical subspace properties", criterion7},
      {"restriction penalty and pipeline accounting", criterion8},
      {"direct vs reduced block fidelity", criterion9},
      {"CLI determinism", criterion10},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    double limit = 0.0;
    try {
      v = criteria[i].second(limit);
    } catch (const std::exception& e) {
      v.pass = false;
      v.notes.push_back(std::string("exception: ") + e.what());
    }
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (limit > 0.0 && elapsed >= limit) {
      v.pass = false;
      v.notes.push_back("runtime " + fmt("%.1fs", elapsed) + " over the " + fmt("%.0fs", limit) + " limit");
    }
    std::printf("%s criterion %zu: %s (%.2fs)\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), elapsed);
    for (const std::string& n : v.notes) std::printf("    %s\n", n.c_str());
    std::fflush(stdout);
    if (!v.pass) ++failures;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
