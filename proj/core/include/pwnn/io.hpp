#pragma once

#include "pwnn/piecewise.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>

namespace pwnn {

/// Run report as a JSON tree: configuration echo, per (round, segment) final
/// losses and initial-value targets, jumps and timings. Loss traces and
/// parameters are left out; they have their own files.
nlohmann::json report_to_json(const RunReport& report);

/// Writes `solution.json` (partition, layer structure, initial values) and
/// one parameter snapshot `segment{k}.params` per segment into `dir`.
void save_solution(const std::filesystem::path& dir, const PiecewiseSolution& solution);
PiecewiseSolution load_solution(const std::filesystem::path& dir);

}  // namespace pwnn
