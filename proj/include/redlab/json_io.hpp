#pragma once

#include <string>

#include <nlohmann/json_fwd.hpp>

#include "redlab/model.hpp"

namespace redlab::json_io {

using ordered_json = nlohmann::ordered_json;

// Scenario schema (strict; unknown keys rejected):
// {
//   "label": string,
//   "system": {"phi": [...], "amp_re": [...], "amp_im": [...]},
//   "instrument": {"readings": [...], "ground_re": [...], "ground_im": [...]},
//   "coupling": {"blocks": [{"g": int, "gp": int, "re": [[...]], "im": [[...]]}]},
//   "background_level": number
// }
// amp arrays carry either N_phi entries (background amplitude zero) or
// N_phi + 1 entries (explicit a_0). background_level adds that multiple of
// the identity to V^{00} on decode.
MeasurementProblem decode_problem(const ordered_json& j);
ordered_json encode_problem(const MeasurementProblem& problem);

MeasurementProblem read_problem_file(const std::string& path);
void write_problem_file(const MeasurementProblem& problem, const std::string& path);

// All floats in emitted JSON carry 17 significant digits; key order is
// fixed, so byte-identical inputs give byte-identical files.
std::string dump(const ordered_json& j);
void write_file(const ordered_json& j, const std::string& path);

double json_number(const ordered_json& j, const char* context);

}  // namespace redlab::json_io
