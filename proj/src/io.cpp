#include "qlab/io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "qlab/error.hpp"

namespace qlab::io {
namespace {

[[noreturn]] void bad(const std::string& where, const std::string& what) {
  fail(Errc::ConfigError, where + ": " + what);
}

const Json& field(const Json& j, const char* key, const std::string& where) {
  if (!j.is_object()) bad(where, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) bad(where + "." + key, "missing field");
  return *it;
}

double number(const Json& j, const std::string& where) {
  if (!j.is_number()) bad(where, "expected a number");
  const double x = j.get<double>();
  if (!std::isfinite(x)) bad(where, "expected a finite number");
  return x;
}

std::size_t count(const Json& j, const std::string& where) {
  if (!j.is_number_integer() && !j.is_number_unsigned()) bad(where, "expected a non-negative integer");
  const auto x = j.get<long long>();
  if (x < 0) bad(where, "expected a non-negative integer");
  return static_cast<std::size_t>(x);
}

Complex complex_from_json(const Json& j, const std::string& where) {
  if (j.is_number()) return {number(j, where), 0.0};
  if (!j.is_array() || j.size() != 2) bad(where, "expected [re, im]");
  return {number(j[0], where + "[0]"), number(j[1], where + "[1]")};
}

Json complex_to_json(Complex z) { return Json::array({z.real(), z.imag()}); }

std::vector<std::size_t> guesses_from_json(const Json& j, std::size_t n, const std::string& where) {
  if (!j.is_array() || j.size() != n) bad(where, "expected " + std::to_string(n) + " guess indices");
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(count(j[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

std::vector<std::string> labels_from_json(const Json& j, std::size_t n, const std::string& where) {
  if (!j.is_array() || j.size() != n) bad(where, "expected " + std::to_string(n) + " labels");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) {
    if (!j[i].is_string()) bad(where + "[" + std::to_string(i) + "]", "expected a string");
    out.push_back(j[i].get<std::string>());
  }
  return out;
}

}  // namespace

Json complex_vector_to_json(const CVector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(complex_to_json(v(i)));
  return out;
}

Json complex_matrix_to_json(const CMatrix& m) {
  Json out = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(complex_to_json(m(r, c)));
    out.push_back(std::move(row));
  }
  return out;
}

CVector complex_vector_from_json(const Json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) bad(where, "expected a non-empty array of [re, im]");
  CVector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    v(static_cast<Eigen::Index>(i)) = complex_from_json(j[i], where + "[" + std::to_string(i) + "]");
  }
  return v;
}

CMatrix complex_matrix_from_json(const Json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) bad(where, "expected a non-empty array of rows");
  const std::size_t rows = j.size();
  if (!j[0].is_array()) bad(where + "[0]", "expected a row array");
  const std::size_t cols = j[0].size();
  CMatrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    const std::string row_where = where + "[" + std::to_string(r) + "]";
    if (!j[r].is_array() || j[r].size() != cols) bad(row_where, "expected " + std::to_string(cols) + " entries");
    for (std::size_t c = 0; c < cols; ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          complex_from_json(j[r][c], row_where + "[" + std::to_string(c) + "]");
    }
  }
  return m;
}

Ensemble ensemble_from_json(const Json& j, std::vector<std::string>& warnings) {
  const std::size_t d = count(field(j, "dimension", "ensemble"), "ensemble.dimension");
  if (d < 1) bad("ensemble.dimension", "must be at least 1");
  const Json& states = field(j, "states", "ensemble");
  if (!states.is_array() || states.empty()) bad("ensemble.states", "expected a non-empty array");
  std::vector<PureState> pure;
  std::vector<double> probs;
  for (std::size_t i = 0; i < states.size(); ++i) {
    const std::string where = "ensemble.states[" + std::to_string(i) + "]";
    CVector amps = complex_vector_from_json(field(states[i], "amplitudes", where), where + ".amplitudes");
    if (static_cast<std::size_t>(amps.size()) != d) {
      fail(Errc::DimensionMismatch, where + ".amplitudes: length " + std::to_string(amps.size()) +
                                        " differs from dimension " + std::to_string(d));
    }
    double correction = 0.0;
    pure.push_back(PureState::normalized(std::move(amps), &correction));
    if (correction > 1e-6) {
      std::ostringstream msg;
      msg << where << ": amplitudes renormalized (norm off by " << correction << ")";
      warnings.push_back(msg.str());
    }
    probs.push_back(number(field(states[i], "probability", where), where + ".probability"));
  }
  return Ensemble(std::move(pure), std::move(probs));
}

Json ensemble_to_json(const Ensemble& ensemble) {
  Json states = Json::array();
  for (std::size_t i = 0; i < ensemble.size(); ++i) {
    states.push_back({{"amplitudes", complex_vector_to_json(ensemble.state(i).amplitudes())},
                      {"probability", ensemble.prob(i)}});
  }
  return {{"dimension", ensemble.dim()}, {"states", std::move(states)}};
}

Povm povm_from_json(const Json& j) {
  const std::size_t d = count(field(j, "dimension", "povm"), "povm.dimension");
  Povm povm;
  if (j.contains("elements")) {
    const Json& elements = j["elements"];
    if (!elements.is_array() || elements.empty()) bad("povm.elements", "expected a non-empty array");
    for (std::size_t i = 0; i < elements.size(); ++i) {
      povm.elements.push_back(complex_matrix_from_json(elements[i], "povm.elements[" + std::to_string(i) + "]"));
    }
  } else if (j.contains("vectors")) {
    const Json& vectors = j["vectors"];
    if (!vectors.is_array() || vectors.empty()) bad("povm.vectors", "expected a non-empty array");
    for (std::size_t i = 0; i < vectors.size(); ++i) {
      const CVector v = complex_vector_from_json(vectors[i], "povm.vectors[" + std::to_string(i) + "]");
      povm.elements.push_back(v * v.adjoint());
    }
  } else {
    bad("povm", "needs \"elements\" or \"vectors\"");
  }
  for (std::size_t i = 0; i < povm.size(); ++i) {
    const CMatrix& e = povm.elements[i];
    if (static_cast<std::size_t>(e.rows()) != d || e.rows() != e.cols()) {
      fail(Errc::ShapeMismatch, "povm element " + std::to_string(i) + " is not " + std::to_string(d) + "x" + std::to_string(d));
    }
  }
  const std::size_t n = povm.size();
  povm.guess = j.contains("guess") ? guesses_from_json(j["guess"], n, "povm.guess") : std::vector<std::size_t>{};
  if (povm.guess.empty()) {
    for (std::size_t i = 0; i < n; ++i) povm.guess.push_back(i);
  }
  povm.labels = j.contains("labels") ? labels_from_json(j["labels"], n, "povm.labels") : std::vector<std::string>{};
  if (povm.labels.empty()) {
    for (std::size_t i = 0; i < n; ++i) povm.labels.push_back(std::to_string(i));
  }
  require_valid(povm);
  return povm;
}

Json povm_to_json(const Povm& povm) {
  Json elements = Json::array();
  for (const CMatrix& e : povm.elements) elements.push_back(complex_matrix_to_json(e));
  return {{"dimension", povm.dim()}, {"elements", std::move(elements)}, {"guess", povm.guess}, {"labels", povm.labels}};
}

Json rank_one_to_json(const RankOnePovm& povm) {
  Json vectors = Json::array();
  for (const CVector& v : povm.vectors) vectors.push_back(complex_vector_to_json(v));
  return {{"dimension", povm.dim()}, {"vectors", std::move(vectors)}, {"guess", povm.guess}, {"labels", povm.labels}};
}

FidelityKernel kernel_from_json(const Json& j) {
  const Json& type = field(j, "type", "kernel");
  if (!type.is_string()) bad("kernel.type", "expected a string");
  const std::string name = type.get<std::string>();
  if (name == "guess_score") return FidelityKernel::guess_score();
  if (name == "overlap" || name == "overlap4") {
    const Json& guesses = field(j, "guesses", "kernel");
    if (!guesses.is_array() || guesses.empty()) bad("kernel.guesses", "expected a non-empty array");
    std::vector<PureState> states;
    for (std::size_t i = 0; i < guesses.size(); ++i) {
      const std::string where = "kernel.guesses[" + std::to_string(i) + "]";
      const Json& g = guesses[i].is_object() ? field(guesses[i], "amplitudes", where) : guesses[i];
      states.push_back(PureState::normalized(complex_vector_from_json(g, where)));
    }
    return name == "overlap" ? FidelityKernel::overlap(std::move(states)) : FidelityKernel::overlap4(std::move(states));
  }
  if (name == "matrix") {
    const Json& rows = field(j, "matrix", "kernel");
    if (!rows.is_array() || rows.empty() || !rows[0].is_array() || rows[0].empty()) {
      bad("kernel.matrix", "expected a non-empty array of rows");
    }
    RMatrix f(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const std::string where = "kernel.matrix[" + std::to_string(r) + "]";
      if (!rows[r].is_array() || rows[r].size() != rows[0].size()) bad(where, "ragged row");
      for (std::size_t c = 0; c < rows[r].size(); ++c) {
        f(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
            number(rows[r][c], where + "[" + std::to_string(c) + "]");
      }
    }
    return FidelityKernel::matrix(std::move(f));
  }
  bad("kernel.type", "unknown kernel \"" + name + "\"");
}

Json kernel_to_json(const FidelityKernel& kernel) {
  Json out = {{"type", to_string(kernel.rule())}};
  if (!kernel.guesses().empty()) {
    Json guesses = Json::array();
    for (const PureState& g : kernel.guesses()) guesses.push_back(complex_vector_to_json(g.amplitudes()));
    out["guesses"] = std::move(guesses);
  }
  if (kernel.rule() == KernelRule::Matrix) {
    const RMatrix& f = kernel.matrix_scores();
    Json rows = Json::array();
    for (Eigen::Index r = 0; r < f.rows(); ++r) {
      Json row = Json::array();
      for (Eigen::Index c = 0; c < f.cols(); ++c) row.push_back(f(r, c));
      rows.push_back(std::move(row));
    }
    out["matrix"] = std::move(rows);
  }
  return out;
}

Json certificate_to_json(const OptimalityCertificate& cert) {
  return {{"fidelity", cert.fidelity},
          {"stationarity_residual", cert.stationarity_residual},
          {"dual_min_eig", cert.dual_min_eig},
          {"anti_hermitian_residual", cert.anti_hermitian_residual},
          {"bound_constant", cert.bound_constant},
          {"lagrange_operator", complex_matrix_to_json(hermitian_part(cert.lambda))}};
}

Json block_to_json(const BlockPovm& block) {
  Json elements = Json::array();
  Json guesses = Json::array();
  Json fixed = Json::array();
  for (const BlockOutcome& o : block.outcomes) {
    elements.push_back(complex_matrix_to_json(o.element()));
    guesses.push_back(o.guess);
    fixed.push_back(o.fixed_score ? Json(*o.fixed_score) : Json(nullptr));
  }
  return {{"dimension", block.dim()},
          {"local_dimension", block.local_dim},
          {"L", block.length},
          {"elements", std::move(elements)},
          {"guess", std::move(guesses)},
          {"fixed_score", std::move(fixed)}};
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::ConfigError, path + ": cannot open");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    fail(Errc::ConfigError, path + ": " + e.what());
  }
}

}  // namespace qlab::io
