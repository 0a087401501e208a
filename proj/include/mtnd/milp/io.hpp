#pragma once

#include <string>

#include "mtnd/milp/model.hpp"

namespace mtnd::milp {

enum class ExportFormat { LpText, MpsText };

// Deterministic text rendering (variables and constraints in declaration
// order).  Throws ModelError on duplicate or malformed variable tags.
std::string export_model(const Model& model, ExportFormat format);

// Parses text produced by export_model (and the common subset of the two
// industry formats) back into a model.
Model parse_model(const std::string& text, ExportFormat format);

// Plain-text solution file: "status <name>", "objective <v>", "bound <v>",
// then one "var <tag> <value>" line per variable.
std::string serialize_solution(const Model& model, const Solution& sol);
Solution parse_solution(const Model& model, const std::string& text);

// Writes the model to a temp file, runs `command <model-file> <solution-file>`
// and parses the produced solution file.  The command is expected to exit 0
// whenever it produced a solution file (including infeasible/unbounded
// verdicts).
Solution solve_external(const Model& model, const std::string& command,
                        ExportFormat format = ExportFormat::LpText);

}  // namespace mtnd::milp
