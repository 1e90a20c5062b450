#pragma once

// CSV ingestion and emission: datasets, external theta chains, sample stores
// and cumulative traces. Dialect: comma separated, header row required, '.'
// decimal separator.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "palette/model.hpp"
#include "palette/postprocess.hpp"
#include "palette/samplers.hpp"

namespace palette {

enum class ResponseKind { Real, Binary, Binomial };

struct DatasetSchema {
  std::string response = "y";
  std::vector<std::string> covariates;
  ResponseKind kind = ResponseKind::Real;
  // Binomial only: the covariate holding the number of trials.
  std::string trials;
};

struct CsvTable {
  std::vector<std::string> header;
  // One row per record, same width as the header.
  std::vector<std::vector<double>> rows;
};

// Parses a numeric CSV table. Errors carry the source name plus row/column.
CsvTable parse_csv(std::istream& in, const std::string& source);
CsvTable read_csv_file(const std::filesystem::path& path);

Dataset dataset_from_table(const CsvTable& table, const DatasetSchema& schema, const std::string& source);
Dataset load_dataset_csv(const std::filesystem::path& path, const DatasetSchema& schema);

// Theta chain with exactly `expected_dim` parameter columns plus an optional
// column named V holding the shared hyperparameter.
ParameterChain chain_from_table(const CsvTable& table, Eigen::Index expected_dim, const std::string& source);
ParameterChain load_chain_csv(const std::filesystem::path& path, Eigen::Index expected_dim);

void write_chain_csv(const ParameterChain& chain, const std::vector<std::string>& names,
                     const std::filesystem::path& path);

// Columns psi_1..psi_d and, when present, V.
void write_store_csv(const SampleStore& store, const std::filesystem::path& path);
SampleStore load_store_csv(const std::filesystem::path& path, int model_id, const std::string& model_name,
                           Eigen::Index palette_dim);

// Header "iteration,model_1,...,model_K"; iteration counts from 1.
void write_trace_csv(const CumulativeTrace& trace, std::ostream& out);
void write_trace_csv(const CumulativeTrace& trace, const std::filesystem::path& path);

}  // namespace palette
