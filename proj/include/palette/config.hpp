#pragma once

// Run configuration: model definitions, data source, iteration counts, seed,
// method selection and output locations, stored as JSON.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "palette/csv_io.hpp"
#include "palette/families.hpp"

namespace palette {

enum class MethodSelection { One, Two, Both };

// "1", "2" or "both".
MethodSelection parse_method(const std::string& name);

struct DataSource {
  // Either a CSV path or the name of an embedded example dataset.
  std::optional<std::string> path;
  std::optional<std::string> embedded;
  DatasetSchema schema;
  // Covariates replaced by their z-scores after loading.
  std::vector<std::string> standardize;
};

struct Stage2Settings {
  MethodSelection method = MethodSelection::Both;
  std::int64_t iterations = 100000;
  std::optional<std::int64_t> burnin;
  // Initial model (1-based) of each Method-1 chain.
  std::vector<int> initial_models{1, 2};
  std::int64_t draws_per_model = 100000;
  bool tune_priors = false;
  int tune_rounds = 5;
  std::int64_t tune_iterations = 20000;
  // Visit proportions targeted by tuning; empty means uniform.
  std::vector<double> tune_target;
  // Prior under which to restate the results; empty means none.
  std::vector<double> report_prior;
};

struct OutputSettings {
  std::string dir = "palette_out";
};

struct RunConfig {
  std::vector<ModelDefinition> models;
  DataSource data;
  Stage1Settings stage1;
  Stage2Settings stage2;
  std::uint64_t seed = 20240607;
  OutputSettings output;
};

void to_json(nlohmann::json& j, const RunConfig& config);
void from_json(const nlohmann::json& j, RunConfig& config);

RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& path);
std::string serialize_run_config(const RunConfig& config);

// Enforces every configuration invariant before compute starts: referenced
// files exist, bijections are square and invertible, dimensions agree, counts
// are consistent. Prior weights that do not sum to one are renormalized in
// place; the returned strings are warnings.
std::vector<std::string> validate_run_config(RunConfig& config);

}  // namespace palette
