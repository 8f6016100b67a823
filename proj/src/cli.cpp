#include "qlab/cli.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <variant>

#include "CLI11.hpp"
#include "qlab/block.hpp"
#include "qlab/io.hpp"
#include "qlab/kernels.hpp"
#include "qlab/pipeline.hpp"
#include "qlab/rng.hpp"
#include "qlab/sqrtm.hpp"
#include "qlab/stats.hpp"
#include "qlab/typical.hpp"

namespace qlab::cli {
namespace {

using io::Json;
using Cell = std::variant<double, std::int64_t, std::uint64_t, std::string>;

struct Options {
  std::string ensemble = "trine";
  std::string kernel = "guess_score";
  std::string povm;
  std::string config;
  std::string length = "1";
  std::string block_length = "8";
  std::string outcomes;
  bool auto_n = false;
  std::string eta = "0.5";
  std::string eta_prime = "0.15";
  std::string seeds = "10";
  std::uint64_t seed = 0;
  std::string out;
  std::string format;
  std::size_t cap_dim = kDefaultDimCap;
  std::string dump_block;
  std::string simd = "auto";
  std::string mode = "sqrtm";
  std::string demo;
  double alpha2 = 0.9;
  std::size_t samples = 100000;
  int restarts = 8;
  int max_iter = 20000;
};

struct Output {
  std::string default_format = "csv";
  Json summary = Json::object();
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  std::vector<std::string> warnings;
  bool nonconverged = false;
};

// ---------------------------------------------------------------- parsing

[[noreturn]] void config_error(const std::string& what) { fail(Errc::ConfigError, what); }

template <class T>
T parse_scalar(const std::string& text, const std::string& flag) {
  std::istringstream in(text);
  T value{};
  in >> value;
  if (!in || !in.eof()) config_error(flag + ": cannot parse \"" + text + "\"");
  return value;
}

template <class T>
std::vector<T> parse_list(const std::string& text, const std::string& flag) {
  std::vector<T> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty()) continue;
    out.push_back(parse_scalar<T>(item, flag));
  }
  if (out.empty()) config_error(flag + ": expected at least one value");
  return out;
}

std::vector<int> parse_lengths(const std::string& text, const std::string& flag) {
  std::vector<int> out = parse_list<int>(text, flag);
  for (int l : out) {
    if (l < 1) config_error(flag + ": lengths must be positive");
  }
  return out;
}

/// "K" means K trial seeds derived from the master seed; "a,b,c" is an explicit list.
std::vector<std::uint64_t> parse_seeds(const std::string& text, std::uint64_t master) {
  if (text.find(',') != std::string::npos) {
    std::vector<std::uint64_t> explicit_seeds;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
      if (!item.empty()) explicit_seeds.push_back(parse_scalar<std::uint64_t>(item, "--seeds"));
    }
    if (explicit_seeds.empty()) config_error("--seeds: seed list is empty");
    return explicit_seeds;
  }
  const auto n = text.empty() ? 0 : parse_scalar<long long>(text, "--seeds");
  if (n <= 0) config_error("--seeds: seed list is empty");
  std::vector<std::uint64_t> seeds;
  for (long long i = 0; i < n; ++i) seeds.push_back(derive_seed(master, "trial", static_cast<std::uint64_t>(i)));
  return seeds;
}

Ensemble builtin_ensemble(const std::string& name) {
  const auto colon = name.find(':');
  const std::string head = name.substr(0, colon);
  const std::string tail = colon == std::string::npos ? "" : name.substr(colon + 1);
  if (head == "trine" && tail.empty()) return ensembles::trine();
  if (head == "zpair" && tail.empty()) return ensembles::z_pair();
  if (head == "two-state") return ensembles::two_state(tail.empty() ? 0.9 : parse_scalar<double>(tail, "--ensemble"));
  if (head == "bloch") {
    std::size_t samples = 1000;
    std::uint64_t seed = 0;
    if (!tail.empty()) {
      const auto sep = tail.find(':');
      samples = parse_scalar<std::size_t>(tail.substr(0, sep), "--ensemble");
      if (sep != std::string::npos) seed = parse_scalar<std::uint64_t>(tail.substr(sep + 1), "--ensemble");
    }
    return ensembles::bloch_sample(samples, seed);
  }
  config_error("--ensemble: \"" + name + "\" is neither a file nor one of trine, zpair, two-state[:a2], bloch[:n[:seed]]");
}

Ensemble load_ensemble(const Json& value, std::vector<std::string>& warnings) {
  if (value.is_object()) return io::ensemble_from_json(value, warnings);
  if (!value.is_string()) config_error("ensemble: expected a name, a path or an object");
  const std::string text = value.get<std::string>();
  if (std::filesystem::is_regular_file(text)) return io::ensemble_from_json(io::read_json_file(text), warnings);
  return builtin_ensemble(text);
}

FidelityKernel load_kernel(const Json& value) {
  if (value.is_object()) return io::kernel_from_json(value);
  if (!value.is_string()) config_error("kernel: expected a name, a path or an object");
  const std::string text = value.get<std::string>();
  if (std::filesystem::is_regular_file(text)) return io::kernel_from_json(io::read_json_file(text));
  const std::vector<PureState> z = {PureState(CVector::Unit(2, 0)), PureState(CVector::Unit(2, 1))};
  if (text == "guess_score") return FidelityKernel::guess_score();
  if (text == "overlap-z") return FidelityKernel::overlap(z);
  if (text == "overlap4-z") return FidelityKernel::overlap4(z);
  config_error("--kernel: \"" + text + "\" is neither a file nor one of guess_score, overlap-z, overlap4-z");
}

/// Applies a JSON config file on top of the command-line options.
void apply_config(Options& opt, Json& ensemble_value, Json& kernel_value) {
  if (opt.config.empty()) return;
  const Json cfg = io::read_json_file(opt.config);
  if (!cfg.is_object()) config_error(opt.config + ": expected a JSON object");
  auto list_text = [&](const Json& v, const std::string& key) {
    auto scalar = [&](const Json& x) -> std::string {
      if (!x.is_number()) config_error(opt.config + ": config." + key + ": expected a number or a list of numbers");
      return x.dump();
    };
    if (!v.is_array()) return scalar(v);
    if (v.empty()) config_error(opt.config + ": config." + key + ": list is empty");
    std::string joined;
    for (const Json& x : v) joined += (joined.empty() ? "" : ",") + scalar(x);
    return joined;
  };
  for (const auto& [key, value] : cfg.items()) {
    if (key == "ensemble") {
      ensemble_value = value;
    } else if (key == "kernel") {
      kernel_value = value;
    } else if (key == "L") {
      opt.length = list_text(value, key);
    } else if (key == "Lprime") {
      opt.block_length = list_text(value, key);
    } else if (key == "N") {
      if (value.is_string() && value.get<std::string>() == "auto") {
        opt.auto_n = true;
        opt.outcomes.clear();
      } else {
        opt.outcomes = list_text(value, key);
      }
    } else if (key == "eta") {
      opt.eta = list_text(value, key);
    } else if (key == "etaprime") {
      opt.eta_prime = list_text(value, key);
    } else if (key == "seeds") {
      if (value.is_array()) {
        if (value.empty()) config_error(opt.config + ": config.seeds: seed list is empty");
        opt.seeds = list_text(value, key) + ",";
      } else if (value.is_number_integer()) {
        opt.seeds = value.dump();
      } else {
        config_error(opt.config + ": config.seeds: expected a count or a list of seeds");
      }
    } else if (key == "seed") {
      if (!value.is_number_unsigned() && !value.is_number_integer()) config_error(opt.config + ": config.seed: expected an integer");
      opt.seed = value.get<std::uint64_t>();
    } else if (key == "mode") {
      if (!value.is_string()) config_error(opt.config + ": config.mode: expected \"sqrtm\" or \"pipeline\"");
      opt.mode = value.get<std::string>();
    } else if (key == "cap_dim") {
      if (!value.is_number_unsigned()) config_error(opt.config + ": config.cap_dim: expected a positive integer");
      opt.cap_dim = value.get<std::size_t>();
    } else {
      config_error(opt.config + ": config." + key + ": unknown field");
    }
  }
}

// ---------------------------------------------------------------- output

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string csv_cell(const Cell& c) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, double>) {
          return format_double(v);
        } else if constexpr (std::is_same_v<T, std::string>) {
          return v;
        } else {
          return std::to_string(v);
        }
      },
      c);
}

Json json_cell(const Cell& c) {
  return std::visit(
      [](const auto& v) -> Json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, double>) {
          if (!std::isfinite(v)) return Json(format_double(v));
        }
        return Json(v);
      },
      c);
}

std::string timestamp() {
  std::time_t t = std::time(nullptr);
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH")) {
    char* end = nullptr;
    const long long v = std::strtoll(epoch, &end, 10);
    if (end != epoch && *end == '\0') t = static_cast<std::time_t>(v);
  }
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Json manifest(const std::string& subcommand, const Options& opt, const std::vector<std::string>& args) {
  Json paths = Json::array();
  for (const std::string* p : {&opt.ensemble, &opt.kernel, &opt.povm, &opt.config}) {
    if (!p->empty() && std::filesystem::is_regular_file(*p)) paths.push_back(*p);
  }
  return {{"subcommand", subcommand},
          {"arguments", args},
          {"config_paths", std::move(paths)},
          {"master_seed", opt.seed},
          {"tool_version", kVersion},
          {"log_base", 2},
          {"entropy_unit", "bits"},
          {"typical_window", "closed"},
          {"simd", std::string(kernels::isa_name(kernels::active_isa()))},
          {"timestamp", timestamp()}};
}

void emit(const Output& result, const Json& man, const std::string& format, std::ostream& out) {
  if (format == "json") {
    Json rows = Json::array();
    for (const auto& row : result.rows) {
      Json r = Json::array();
      for (const Cell& c : row) r.push_back(json_cell(c));
      rows.push_back(std::move(r));
    }
    Json doc = {{"manifest", man}, {"columns", result.columns}, {"rows", std::move(rows)},
                {"summary", result.summary}, {"warnings", result.warnings}};
    out << doc.dump(2) << '\n';
    return;
  }
  for (const auto& [key, value] : man.items()) out << "# " << key << ": " << value.dump() << '\n';
  for (const std::string& w : result.warnings) out << "# warning: " << w << '\n';
  for (std::size_t c = 0; c < result.columns.size(); ++c) out << (c ? "," : "") << result.columns[c];
  out << '\n';
  for (const auto& row : result.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << csv_cell(row[c]);
    out << '\n';
  }
}

// ---------------------------------------------------------------- shared setup

struct Problem {
  Ensemble ensemble;
  FidelityKernel kernel;
};

OptimizerConfig optimizer_config(const Options& opt) {
  OptimizerConfig cfg;
  cfg.seed = derive_seed(opt.seed, "optimizer", 0);
  cfg.restarts = opt.restarts;
  cfg.max_iter = opt.max_iter;
  return cfg;
}

/// The reference single-copy measurement: from --povm when given, otherwise optimized.
struct Reference {
  Povm povm;
  RankOnePovm rank_one;
  bool converged = true;
  std::vector<std::string> warnings;
};

Reference reference_measurement(const Problem& p, const Options& opt) {
  Reference ref;
  if (!opt.povm.empty()) {
    ref.povm = io::povm_from_json(io::read_json_file(opt.povm));
    if (ref.povm.dim() != p.ensemble.dim()) fail(Errc::ShapeMismatch, "--povm dimension differs from the ensemble");
    ref.povm = drop_zero_elements(ref.povm, ref.warnings);
    ref.rank_one = refine_to_rank_one(ref.povm);
    return ref;
  }
  OptimizeResult r = optimize_povm(p.ensemble, p.kernel, optimizer_config(opt));
  ref.povm = r.povm;
  ref.rank_one = r.rank_one;
  ref.converged = r.converged;
  ref.warnings = r.warnings;
  return ref;
}

std::size_t outcome_guess_count(const Problem& p) { return p.kernel.guess_count(p.ensemble); }

// ---------------------------------------------------------------- subcommands

Output cmd_optimize(const Problem& p, const Options& opt) {
  Output o;
  o.default_format = "json";
  const OptimizeResult r = optimize_povm(p.ensemble, p.kernel, optimizer_config(opt));
  const OutcomeDistribution dist = outcome_distribution(r.povm, p.ensemble);
  o.columns = {"outcome", "label", "guess", "weight", "probability"};
  for (std::size_t j = 0; j < r.rank_one.size(); ++j) {
    o.rows.push_back({static_cast<std::uint64_t>(j), r.rank_one.labels[j], static_cast<std::uint64_t>(r.rank_one.guess[j]),
                      r.rank_one.weight(j), dist.probs[j]});
  }
  o.summary = {{"fidelity", r.certificate.fidelity},
               {"converged", r.converged},
               {"iterations", r.iterations},
               {"best_restart", r.best_restart},
               {"certificate", io::certificate_to_json(r.certificate)},
               {"povm", io::rank_one_to_json(r.rank_one)},
               {"outcome_entropy_bits", shannon_entropy(dist)},
               {"mutual_information_bits", mutual_information(r.povm, p.ensemble)},
               {"von_neumann_entropy_bits", von_neumann_entropy(density_matrix(p.ensemble))},
               {"ensemble", io::ensemble_to_json(p.ensemble)},
               {"kernel", io::kernel_to_json(p.kernel)}};
  o.warnings = r.warnings;
  o.nonconverged = !r.converged;
  return o;
}

Output cmd_block(const Problem& p, const Options& opt, std::ostream& err) {
  Output o;
  const Reference ref = reference_measurement(p, opt);
  o.warnings = ref.warnings;
  o.nonconverged = !ref.converged;
  const std::vector<int> lengths = parse_lengths(opt.length, "--L");
  if (!opt.dump_block.empty() && lengths.size() != 1) config_error("--dump-block needs a single --L value");
  const ScoreTable table = p.kernel.table(p.ensemble);
  const ScoreOperators ops = score_operators(p.ensemble, table);
  const DensityMatrix rho = density_matrix(p.ensemble);
  const double single = operator_fidelity(ref.povm, ops);
  o.columns = {"L", "outcomes", "dimension", "fidelity_reduced", "fidelity_direct", "single_copy_fidelity",
               "completeness_residual"};
  for (int length : lengths) {
    const BlockPovm block = product_povm(ref.povm, length, opt.cap_dim);
    require_consistent(block, outcome_guess_count(p));
    const double reduced = block_fidelity_reduced(block, rho, ops);
    double direct = std::numeric_limits<double>::quiet_NaN();
    if (std::pow(static_cast<double>(p.ensemble.size()), length) * static_cast<double>(block.size()) <= kDirectTermLimit) {
      direct = block_fidelity_direct(block, p.ensemble, table);
    }
    o.rows.push_back({static_cast<std::int64_t>(length), static_cast<std::uint64_t>(block.size()),
                      static_cast<std::uint64_t>(block.dim()), reduced, direct, single, completeness_residual(block)});
    if (!opt.dump_block.empty()) {
      std::ofstream dump(opt.dump_block);
      if (!dump) config_error("--dump-block: cannot write " + opt.dump_block);
      dump << io::block_to_json(block).dump(2) << '\n';
      err << "wrote block POVM (L=" << length << ") to " << opt.dump_block << '\n';
    }
  }
  o.summary = {{"single_copy_fidelity", single}, {"povm", io::povm_to_json(ref.povm)}};
  return o;
}

std::size_t resolve_outcomes(const Options& opt, std::size_t d, double rho_max, int length, double eta,
                             std::size_t cap) {
  if (!opt.outcomes.empty() && opt.auto_n) config_error("--N and --auto-n are mutually exclusive");
  if (!opt.outcomes.empty()) {
    const auto n = parse_scalar<long long>(opt.outcomes, "--N");
    if (n < 1) config_error("--N must be at least 1");
    return static_cast<std::size_t>(n);
  }
  return threshold_outcomes(d, rho_max, length, eta, cap);
}

Output cmd_sqrtm(const Problem& p, const Options& opt) {
  Output o;
  const Reference ref = reference_measurement(p, opt);
  o.warnings = ref.warnings;
  o.nonconverged = !ref.converged;
  const std::vector<int> lengths = parse_lengths(opt.length, "--L");
  const double eta = parse_scalar<double>(opt.eta, "--eta");
  const std::vector<std::uint64_t> seeds = parse_seeds(opt.seeds, opt.seed);
  SqrtLimits limits;
  limits.dim_cap = opt.cap_dim;
  const SqrtReference sref = sqrt_reference(ref.rank_one, p.ensemble, p.kernel);
  o.columns = {"seed", "L", "N", "dim_HB", "mean_perp", "F_L", "entropy_per_slot", "C0_weight",
               "F_L_pessimistic", "F_L_floor", "completeness_residual", "rank_ambiguous"};
  Json per_length = Json::array();
  for (int length : lengths) {
    const std::size_t n = resolve_outcomes(opt, p.ensemble.dim(), sref.rho_max, length, eta, limits.outcome_cap);
    const auto reports = evaluate_sqrt_measurement(ref.rank_one, p.ensemble, p.kernel, length, n, seeds, limits);
    RunningStats f, dim, perp, entropy, c0;
    for (const SqrtMeasurementReport& r : reports) {
      o.rows.push_back({r.seed, static_cast<std::int64_t>(length), static_cast<std::uint64_t>(n),
                        static_cast<std::uint64_t>(r.dim_hb), r.mean_perp, r.fidelity, r.entropy_per_slot, r.c0_weight,
                        r.fidelity_pessimistic, r.fidelity_floor, r.completeness_residual,
                        static_cast<std::int64_t>(r.rank_ambiguous)});
      f.add(r.fidelity);
      dim.add(static_cast<double>(r.dim_hb));
      perp.add(r.mean_perp);
      entropy.add(r.entropy_per_slot);
      c0.add(r.c0_weight);
      for (const std::string& w : r.warnings) o.warnings.push_back("seed " + std::to_string(r.seed) + ": " + w);
    }
    const std::size_t dim_full = checked_power(p.ensemble.dim(), length, limits.dim_cap);
    auto stat = [](const RunningStats& s) { return Json{{"mean", s.mean()}, {"stderr", s.stderr_mean()}}; };
    per_length.push_back({{"L", length},
                          {"N", n},
                          {"seeds", reports.size()},
                          {"F_L", stat(f)},
                          {"dim_HB", stat(dim)},
                          {"mean_perp", stat(perp)},
                          {"entropy_per_slot", stat(entropy)},
                          {"C0_weight", stat(c0)},
                          {"expected_dim_bound", expected_dim_bound(dim_full, n)},
                          {"expected_perp_bound", expected_perp_bound(dim_full, n)}});
  }
  o.summary = {{"F_max", sref.fidelity}, {"bound_constant", sref.bound_constant}, {"eta", eta},
               {"lengths", std::move(per_length)}};
  return o;
}

Output cmd_typical(const Problem& p, const Options& opt) {
  Output o;
  const DensityMatrix rho = density_matrix(p.ensemble);
  const double eta = parse_scalar<double>(opt.eta_prime, "--etaprime");
  o.columns = {"Lprime", "etaprime", "kept_dim", "bound_lo", "bound_hi", "kept_weight", "epsilon",
               "commutation_residual"};
  for (int length : parse_lengths(opt.block_length, "--Lprime")) {
    const TypicalProjector pi = typical_projector(rho, length, eta, opt.cap_dim);
    const double comm = pi.materialized ? commutation_residual(pi, rho) : std::numeric_limits<double>::quiet_NaN();
    o.rows.push_back({static_cast<std::int64_t>(length), eta, pi.kept_dim, pi.bound_lo(), pi.bound_hi(), pi.kept_weight,
                      pi.epsilon, comm});
    for (const std::string& w : pi.warnings) o.warnings.push_back("Lprime " + std::to_string(length) + ": " + w);
  }
  o.summary = {{"von_neumann_entropy_bits", von_neumann_entropy(rho)}, {"window", "closed"}};
  return o;
}

ProtocolConfig protocol_config(const Problem& p, const Options& opt, int block_length, int length, double eta,
                               double eta_prime, const std::vector<std::uint64_t>& seeds) {
  ProtocolConfig cfg{p.ensemble, p.kernel};
  cfg.block_length = block_length;
  cfg.blocks = length;
  cfg.eta = eta;
  cfg.eta_prime = eta_prime;
  cfg.seeds = seeds;
  cfg.master_seed = opt.seed;
  cfg.dim_cap = opt.cap_dim;
  cfg.limits.dim_cap = opt.cap_dim;
  cfg.optimizer = optimizer_config(opt);
  if (!opt.outcomes.empty() && opt.auto_n) config_error("--N and --auto-n are mutually exclusive");
  if (!opt.outcomes.empty()) {
    const auto n = parse_scalar<long long>(opt.outcomes, "--N");
    if (n < 1) config_error("--N must be at least 1");
    cfg.outcomes = static_cast<std::size_t>(n);
  }
  return cfg;
}

Output cmd_pipeline(const Problem& p, const Options& opt) {
  Output o;
  const double eta = parse_scalar<double>(opt.eta, "--eta");
  const double eta_prime = parse_scalar<double>(opt.eta_prime, "--etaprime");
  const std::vector<std::uint64_t> seeds = parse_seeds(opt.seeds, opt.seed);
  o.columns = {"Lprime", "L", "seed", "N", "F_total", "F_max", "per_state_bits", "bound_per_state", "epsilon",
               "kept_dim", "dim_HB", "C0_weight", "identity_filter"};
  Json runs = Json::array();
  for (int block_length : parse_lengths(opt.block_length, "--Lprime")) {
    for (int length : parse_lengths(opt.length, "--L")) {
      const ProtocolReport r = run_protocol(protocol_config(p, opt, block_length, length, eta, eta_prime, seeds));
      const EntropyAccounting acc = entropy_accounting(r);
      for (const ProtocolSeedReport& s : r.seeds) {
        o.rows.push_back({static_cast<std::int64_t>(block_length), static_cast<std::int64_t>(length), s.seed,
                          static_cast<std::uint64_t>(r.outcomes), s.fidelity_total, r.fidelity_max, s.per_state_bits,
                          acc.bound_per_state, r.epsilon, r.kept_dim, static_cast<std::uint64_t>(s.sqrtm.dim_hb),
                          s.sqrtm.c0_weight, static_cast<std::int64_t>(r.identity_filter)});
      }
      for (const std::string& w : r.warnings) o.warnings.push_back(w);
      o.nonconverged = o.nonconverged || !r.reference_converged;
      runs.push_back({{"Lprime", block_length},
                      {"L", length},
                      {"N", r.outcomes},
                      {"auto_N", r.auto_outcomes},
                      {"identity_filter", r.identity_filter},
                      {"F_max", r.fidelity_max},
                      {"F_total", {{"mean", r.fidelity_mean}, {"stderr", r.fidelity_stderr}}},
                      {"epsilon", r.epsilon},
                      {"kept_dim", r.kept_dim},
                      {"kept_weight", r.kept_weight},
                      {"pass_fail_bits", r.pass_fail_bits},
                      {"reference_fidelity", r.reference_fidelity},
                      {"bound_constant", r.bound_constant},
                      {"entropy_bound_bits", r.entropy_bound},
                      {"entropy_counting_bound_bits", r.entropy_counting_bound},
                      {"per_state_bits", {{"mean", r.per_state_bits_mean}, {"max", acc.per_state_bits}}},
                      {"bound_per_state", acc.bound_per_state},
                      {"accounting_holds", acc.holds}});
    }
  }
  o.summary = {{"eta", eta}, {"etaprime", eta_prime}, {"runs", std::move(runs)}};
  return o;
}

Output cmd_demo(const Options& opt) {
  Output o;
  o.default_format = "json";
  o.columns = {"metric", "value"};
  auto describe = [&](const Ensemble& e, const FidelityKernel& k) {
    const OptimizeResult r = optimize_povm(e, k, optimizer_config(opt));
    const OutcomeDistribution dist = outcome_distribution(r.povm, e);
    const double entropy = shannon_entropy(dist);
    o.rows.push_back({std::string("F_max"), r.certificate.fidelity});
    o.rows.push_back({std::string("outcome_entropy_bits"), entropy});
    o.rows.push_back({std::string("von_neumann_entropy_bits"), von_neumann_entropy(density_matrix(e))});
    o.rows.push_back({std::string("stationarity_residual"), r.certificate.stationarity_residual});
    o.rows.push_back({std::string("dual_min_eig"), r.certificate.dual_min_eig});
    o.summary["F_max"] = r.certificate.fidelity;
    o.summary["outcome_entropy_bits"] = entropy;
    o.summary["povm"] = io::rank_one_to_json(r.rank_one);
    o.summary["certificate"] = io::certificate_to_json(r.certificate);
    o.summary["converged"] = r.converged;
    o.warnings = r.warnings;
    o.nonconverged = !r.converged;
  };
  o.summary["demo"] = opt.demo;
  if (opt.demo == "example1") {
    o.summary["alpha2"] = opt.alpha2;
    o.summary["closed_form_F_max"] = 2.0 * std::sqrt(opt.alpha2 * (1.0 - opt.alpha2));
    describe(ensembles::two_state(opt.alpha2), FidelityKernel::guess_score());
  } else if (opt.demo == "example2") {
    describe(ensembles::trine(), FidelityKernel::guess_score());
  } else if (opt.demo == "bloch") {
    const Ensemble e = ensembles::bloch_sample(opt.samples, opt.seed);
    const FidelityKernel k = load_kernel(Json("overlap-z"));
    const double f = mean_fidelity(computational_basis_povm(2), e, k);
    o.rows.push_back({std::string("sigma_z_fidelity"), f});
    o.summary["sigma_z_fidelity"] = f;
    o.summary["samples"] = opt.samples;
    describe(e, k);
  } else {
    fail(Errc::UnknownDemo, "unknown demo \"" + opt.demo + "\" (expected example1, example2 or bloch)");
  }
  return o;
}

Output cmd_sweep(const Problem& p, const Options& opt) {
  Output o;
  if (opt.mode != "sqrtm" && opt.mode != "pipeline") config_error("--mode: expected sqrtm or pipeline");
  const std::vector<int> lengths = parse_lengths(opt.length, "--L");
  const std::vector<double> etas = parse_list<double>(opt.eta, "--eta");
  const std::vector<std::uint64_t> seeds = parse_seeds(opt.seeds, opt.seed);
  std::vector<long long> outcome_grid;
  if (!opt.outcomes.empty()) {
    if (opt.auto_n) config_error("--N and --auto-n are mutually exclusive");
    outcome_grid = parse_list<long long>(opt.outcomes, "--N");
    for (long long n : outcome_grid) {
      if (n < 1) config_error("--N must be at least 1");
    }
  } else {
    outcome_grid = {0};  // 0 selects the automatic threshold
  }
  o.columns = {"mode", "L", "Lprime", "eta", "etaprime", "N", "seed", "fidelity", "entropy_per_state",
               "dim_HB", "mean_perp", "C0_weight"};

  if (opt.mode == "sqrtm") {
    const Reference ref = reference_measurement(p, opt);
    o.warnings = ref.warnings;
    o.nonconverged = !ref.converged;
    const SqrtReference sref = sqrt_reference(ref.rank_one, p.ensemble, p.kernel);
    SqrtLimits limits;
    limits.dim_cap = opt.cap_dim;
    for (int length : lengths) {
      for (double eta : etas) {
        for (long long grid_n : outcome_grid) {
          const std::size_t n = grid_n > 0 ? static_cast<std::size_t>(grid_n)
                                           : threshold_outcomes(p.ensemble.dim(), sref.rho_max, length, eta, limits.outcome_cap);
          for (const SqrtMeasurementReport& r :
               evaluate_sqrt_measurement(ref.rank_one, p.ensemble, p.kernel, length, n, seeds, limits)) {
            o.rows.push_back({std::string("sqrtm"), static_cast<std::int64_t>(length), std::int64_t{1}, eta, 0.0,
                              static_cast<std::uint64_t>(n), r.seed, r.fidelity, r.entropy_per_slot,
                              static_cast<std::uint64_t>(r.dim_hb), r.mean_perp, r.c0_weight});
          }
        }
      }
    }
    o.summary = {{"F_max", sref.fidelity}};
    return o;
  }

  const std::vector<int> block_lengths = parse_lengths(opt.block_length, "--Lprime");
  const std::vector<double> eta_primes = parse_list<double>(opt.eta_prime, "--etaprime");
  for (int block_length : block_lengths) {
    for (double eta_prime : eta_primes) {
      for (int length : lengths) {
        for (double eta : etas) {
          for (long long grid_n : outcome_grid) {
            Options single = opt;
            single.outcomes = grid_n > 0 ? std::to_string(grid_n) : "";
            single.auto_n = false;
            const ProtocolReport r =
                run_protocol(protocol_config(p, single, block_length, length, eta, eta_prime, seeds));
            o.nonconverged = o.nonconverged || !r.reference_converged;
            for (const ProtocolSeedReport& s : r.seeds) {
              o.rows.push_back({std::string("pipeline"), static_cast<std::int64_t>(length),
                                static_cast<std::int64_t>(block_length), eta, eta_prime,
                                static_cast<std::uint64_t>(r.outcomes), s.seed, s.fidelity_total, s.per_state_bits,
                                static_cast<std::uint64_t>(s.sqrtm.dim_hb), s.sqrtm.mean_perp, s.sqrtm.c0_weight});
            }
          }
        }
      }
    }
  }
  return o;
}

}  // namespace

int exit_code(Errc code) noexcept {
  switch (code) {
    case Errc::NonConvergence:
    case Errc::DecompositionFailure:
      return kExitNonConvergence;
    default:
      return kExitConfig;
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options opt;
  CLI::App app{"Quantum measurement laboratory: optimal POVMs, square-root block measurements, typical subspaces"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  auto common = [&](CLI::App* sub) {
    sub->add_option("--ensemble", opt.ensemble, "Ensemble JSON path or trine | zpair | two-state[:a2] | bloch[:n[:seed]]");
    sub->add_option("--kernel", opt.kernel, "Kernel JSON path or guess_score | overlap-z | overlap4-z");
    sub->add_option("--seed", opt.seed, "Master seed");
    sub->add_option("--out", opt.out, "Output file (default stdout)");
    sub->add_option("--format", opt.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--cap-dim", opt.cap_dim, "Largest materialized dimension");
    sub->add_option("--simd", opt.simd, "Kernel ISA")->check(CLI::IsMember({"auto", "scalar", "avx2", "neon"}));
    sub->add_option("--restarts", opt.restarts, "Optimizer restarts");
    sub->add_option("--max-iter", opt.max_iter, "Optimizer iteration limit per restart");
  };
  auto sizes = [&](CLI::App* sub) {
    sub->add_option("--L", opt.length, "Block length(s), comma separated");
    sub->add_option("--N", opt.outcomes, "Sampled directions (N)");
    sub->add_flag("--auto-n", opt.auto_n, "Choose N from the threshold formula");
    sub->add_option("--eta", opt.eta, "Threshold slack eta");
    sub->add_option("--seeds", opt.seeds, "Trial count, or an explicit comma-separated seed list");
    sub->add_option("--povm", opt.povm, "Reference POVM JSON (default: optimized)");
  };

  CLI::App* optimize = app.add_subcommand("optimize", "Optimal single-copy POVM with certificate");
  common(optimize);
  CLI::App* block = app.add_subcommand("block", "Product POVM on L copies and its block fidelity");
  common(block);
  block->add_option("--L", opt.length, "Block length(s), comma separated");
  block->add_option("--povm", opt.povm, "POVM JSON (default: optimized)");
  block->add_option("--dump-block", opt.dump_block, "Write the block POVM as JSON");
  CLI::App* sqrtm = app.add_subcommand("sqrtm", "Randomized square-root measurement statistics");
  common(sqrtm);
  sizes(sqrtm);
  CLI::App* typical = app.add_subcommand("typical", "Typical subspace of rho^(x)L'");
  common(typical);
  typical->add_option("--Lprime", opt.block_length, "Block length(s) L', comma separated");
  typical->add_option("--etaprime", opt.eta_prime, "Window half-width eta'");
  CLI::App* pipeline = app.add_subcommand("pipeline", "Typical filtering followed by a square-root measurement");
  common(pipeline);
  sizes(pipeline);
  pipeline->add_option("--Lprime", opt.block_length, "Filtered block length(s) L'");
  pipeline->add_option("--etaprime", opt.eta_prime, "Window half-width eta'");
  pipeline->add_option("--config", opt.config, "JSON config file");
  CLI::App* demo = app.add_subcommand("demo", "Worked examples: example1, example2, bloch");
  common(demo);
  demo->add_option("name", opt.demo, "example1 | example2 | bloch")->required();
  demo->add_option("--alpha2", opt.alpha2, "alpha^2 for example1");
  demo->add_option("--samples", opt.samples, "Bloch sphere samples");
  CLI::App* sweep = app.add_subcommand("sweep", "Grid sweep, one CSV row per grid point and seed");
  common(sweep);
  sizes(sweep);
  sweep->add_option("--Lprime", opt.block_length, "Filtered block length(s) L' (pipeline mode)");
  sweep->add_option("--etaprime", opt.eta_prime, "Window half-width(s) eta' (pipeline mode)");
  sweep->add_option("--mode", opt.mode, "sqrtm or pipeline");
  sweep->add_option("--config", opt.config, "JSON config file");

  std::vector<std::string> storage;
  storage.reserve(args.size() + 1);
  storage.emplace_back("qlab");
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (std::string& s : storage) argv.push_back(s.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  CLI::App* chosen = app.get_subcommands().front();
  const std::string name = chosen->get_name();
  try {
    std::optional<kernels::ScopedIsa> isa_override;
    if (opt.simd != "auto") {
      const kernels::Isa isa = opt.simd == "scalar" ? kernels::Isa::Scalar
                               : opt.simd == "avx2" ? kernels::Isa::Avx2
                                                    : kernels::Isa::Neon;
      isa_override.emplace(isa);
    }
    Json ensemble_value = opt.ensemble;
    Json kernel_value = opt.kernel;
    apply_config(opt, ensemble_value, kernel_value);

    Output result;
    if (name == "demo") {
      result = cmd_demo(opt);
    } else {
      std::vector<std::string> warnings;
      Problem problem{load_ensemble(ensemble_value, warnings), load_kernel(kernel_value)};
      if (name == "optimize") result = cmd_optimize(problem, opt);
      if (name == "block") result = cmd_block(problem, opt, err);
      if (name == "sqrtm") result = cmd_sqrtm(problem, opt);
      if (name == "typical") result = cmd_typical(problem, opt);
      if (name == "pipeline") result = cmd_pipeline(problem, opt);
      if (name == "sweep") result = cmd_sweep(problem, opt);
      result.warnings.insert(result.warnings.begin(), warnings.begin(), warnings.end());
    }

    const std::string format = opt.format.empty() ? result.default_format : opt.format;
    const Json man = manifest(name, opt, args);
    if (opt.out.empty()) {
      emit(result, man, format, out);
    } else {
      std::ofstream file(opt.out, std::ios::binary);
      if (!file) config_error("--out: cannot write " + opt.out);
      emit(result, man, format, file);
    }
    for (const std::string& w : result.warnings) err << "warning: " << w << '\n';
    if (result.nonconverged) {
      err << "error: optimizer did not converge; partial output written\n";
      return kExitNonConvergence;
    }
    return kExitOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code(e.code());
  } catch (const Json::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }
}

}  // namespace qlab::cli
