#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "qlab/block.hpp"
#include "qlab/ensemble.hpp"
#include "qlab/fidelity.hpp"
#include "qlab/povm.hpp"

namespace qlab::io {

using Json = nlohmann::json;

// Complex numbers are [re, im] pairs; vectors are arrays of pairs and
// matrices are arrays of rows. Parse failures raise ConfigError naming the
// offending field.

Json complex_vector_to_json(const CVector& v);
Json complex_matrix_to_json(const CMatrix& m);
CVector complex_vector_from_json(const Json& j, const std::string& where);
CMatrix complex_matrix_from_json(const Json& j, const std::string& where);

/// {"dimension": d, "states": [{"amplitudes": [[re, im], ...], "probability": p}, ...]}
/// Amplitudes are renormalized on load; corrections above 1e-6 add a warning.
Ensemble ensemble_from_json(const Json& j, std::vector<std::string>& warnings);
Json ensemble_to_json(const Ensemble& ensemble);

/// {"dimension": d, "elements": [...]} or {"dimension": d, "vectors": [...]},
/// with optional "guess" and "labels" arrays.
Povm povm_from_json(const Json& j);
Json povm_to_json(const Povm& povm);
Json rank_one_to_json(const RankOnePovm& povm);

/// {"type": "guess_score"|"overlap"|"overlap4"|"matrix", "guesses": [...], "matrix": [[...]]}
FidelityKernel kernel_from_json(const Json& j);
Json kernel_to_json(const FidelityKernel& kernel);

Json certificate_to_json(const OptimalityCertificate& cert);

/// POVM schema over d^L with "L", "local_dimension" and per-outcome guess sequences.
Json block_to_json(const BlockPovm& block);

Json read_json_file(const std::string& path);

}  // namespace qlab::io
