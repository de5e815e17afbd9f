#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "aml/detect.hpp"
#include "aml/inference.hpp"
#include "aml/simlab.hpp"

namespace aml {

/// A simulation job as described by a config file: one experiment kind plus
/// any grids it needs.
struct SimulationJob {
    enum class Kind { Table, Compare, Sweep, Detection, Contamination };
    Kind kind = Kind::Table;
    ExperimentConfig config;
    std::vector<std::uint64_t> n_grid; // Compare / Detection
    std::vector<double> co_grid;       // Contamination (default {0,0.25,0.5,0.75,1})
    bool record_replications = true;
};

const char* job_kind_name(SimulationJob::Kind kind);

/// Parses a config file. When `full_scale` is set, the config's "full" patch
/// (if any) is merged over the base first; without a patch, R escalates
/// to 1000.
SimulationJob parse_simulation_job(const nlohmann::json& spec, bool full_scale = false);

/// Fully-resolved echo of a job, defaults expanded.
nlohmann::json job_to_json(const SimulationJob& job);

struct SimulationOutput {
    nlohmann::json report;
    std::string csv; // one row per table cell, plot-ready
};

SimulationOutput run_simulation_job(const SimulationJob& job);

// Shared serialization used by the CLI and tests.
nlohmann::json estimate_to_json(const AmlEstimate& est);
AmlEstimate estimate_from_json(const nlohmann::json& j);
nlohmann::json range_to_json(const NormalRange& range);
NormalRange range_from_json(const nlohmann::json& j);
nlohmann::json suspected_to_json(const SuspectedSet& set);
std::string suspected_to_csv(const SuspectedSet& set);
nlohmann::json description_to_json(const Description& d);

} // namespace aml
