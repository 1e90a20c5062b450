#pragma once

// End-to-end orchestration: dataset loading, Stage 1 for every model,
// Stage 2 (optionally with prior tuning) and the embedded examples.

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "palette/config.hpp"
#include "palette/postprocess.hpp"

namespace palette {

// Loads (or builds the embedded) dataset and applies standardization.
Dataset load_run_dataset(const DataSource& source);

// Embedded datasets by name; currently "binomial" (y = 8, 16; N = 20, 30).
Dataset embedded_dataset(const std::string& name);

// Per-model Stage-1 seed derived from the run seed.
std::uint64_t stage1_seed(std::uint64_t run_seed, std::size_t model_index);

std::vector<SampleStore> run_stage1(const RunConfig& config, const ModelSet& models, const Dataset& data);

PosteriorReport run_stage2(const RunConfig& config, const std::vector<SampleStore>& stores, const ModelSet& models,
                           const Dataset& data);

// Configuration for one of the built-in examples: binomial, pine, trout.
// Pine and trout need a data path (set later via overrides or `data_path`).
RunConfig example_config(const std::string& name);

// Column schema an example's data file must follow, for error messages and docs.
std::string example_schema(const std::string& name);

// Stage 1 + Stage 2 for a named example. `overrides` is a JSON merge patch
// applied to the example configuration (e.g. {"data": {"path": "pine.csv"}}).
PosteriorReport run_example(const std::string& name, const nlohmann::json& overrides = nlohmann::json::object());

}  // namespace palette
