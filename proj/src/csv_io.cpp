#include "palette/csv_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "palette/error.hpp"

namespace palette {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    fields.push_back(trim(std::string_view(line).substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return fields;
}

double parse_number(const std::string& cell, const std::string& source, std::size_t row, const std::string& column) {
  double value = 0.0;
  std::string_view text = cell;
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    throw ContractViolation(
        fmt::format("{}: row {}, column '{}': non-numeric value '{}'", source, row, column, cell));
  }
  return value;
}

std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError(fmt::format("cannot write '{}'", path.string()));
  return out;
}

}  // namespace

CsvTable parse_csv(std::istream& in, const std::string& source) {
  CsvTable table;
  std::string line;
  bool have_header = false;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    if (!have_header) {
      if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
      table.header = split_fields(line);
      for (std::size_t c = 0; c < table.header.size(); ++c) {
        if (table.header[c].empty()) throw ContractViolation(fmt::format("{}: header column {} is empty", source, c + 1));
      }
      have_header = true;
      continue;
    }
    const std::vector<std::string> fields = split_fields(line);
    if (fields.size() != table.header.size()) {
      throw ContractViolation(fmt::format("{}: row {} (line {}) has {} fields, header has {}", source,
                                          table.rows.size() + 1, line_no, fields.size(), table.header.size()));
    }
    std::vector<double> row(fields.size());
    for (std::size_t c = 0; c < fields.size(); ++c) {
      if (fields[c].empty()) {
        throw ContractViolation(
            fmt::format("{}: row {}, column '{}': missing value", source, table.rows.size() + 1, table.header[c]));
      }
      row[c] = parse_number(fields[c], source, table.rows.size() + 1, table.header[c]);
    }
    table.rows.push_back(std::move(row));
  }
  if (!have_header) throw ContractViolation(fmt::format("{}: empty file (no header row)", source));
  return table;
}

CsvTable read_csv_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open '{}'", path.string()));
  return parse_csv(in, path.string());
}

Dataset dataset_from_table(const CsvTable& table, const DatasetSchema& schema, const std::string& source) {
  if (table.rows.empty()) throw ContractViolation(fmt::format("{}: no records", source));
  auto column_of = [&](const std::string& name) {
    for (std::size_t c = 0; c < table.header.size(); ++c) {
      if (table.header[c] == name) return c;
    }
    throw ContractViolation(fmt::format("{}: missing column '{}'", source, name));
  };

  const auto n = static_cast<Eigen::Index>(table.rows.size());
  Dataset data;
  data.response_name = schema.response;
  data.covariate_names = schema.covariates;
  data.response.resize(n);
  data.covariates.resize(n, static_cast<Eigen::Index>(schema.covariates.size()));

  const std::size_t response_col = column_of(schema.response);
  std::vector<std::size_t> covariate_cols;
  for (const std::string& name : schema.covariates) covariate_cols.push_back(column_of(name));

  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = table.rows[static_cast<std::size_t>(i)];
    data.response[i] = row[response_col];
    for (std::size_t c = 0; c < covariate_cols.size(); ++c) {
      data.covariates(i, static_cast<Eigen::Index>(c)) = row[covariate_cols[c]];
    }
    for (double v : row) {
      if (!std::isfinite(v)) throw ContractViolation(fmt::format("{}: row {}: non-finite value", source, i + 1));
    }
  }

  for (Eigen::Index i = 0; i < n; ++i) {
    const double y = data.response[i];
    if (schema.kind == ResponseKind::Binary && y != 0.0 && y != 1.0) {
      throw ContractViolation(fmt::format("{}: row {}, column '{}': binary response must be 0 or 1, got {}", source,
                                          i + 1, schema.response, y));
    }
    if (schema.kind == ResponseKind::Binomial) {
      const double trials = data.covariates(i, data.covariate_index(schema.trials));
      if (!(y >= 0.0 && y <= trials) || y != std::floor(y) || trials != std::floor(trials)) {
        throw ContractViolation(fmt::format("{}: row {}: need integer counts with 0 <= {} <= {}, got {} and {}", source,
                                            i + 1, schema.response, schema.trials, y, trials));
      }
    }
  }
  return data;
}

Dataset load_dataset_csv(const std::filesystem::path& path, const DatasetSchema& schema) {
  return dataset_from_table(read_csv_file(path), schema, path.string());
}

ParameterChain chain_from_table(const CsvTable& table, Eigen::Index expected_dim, const std::string& source) {
  std::vector<std::size_t> theta_cols;
  std::optional<std::size_t> v_col;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (table.header[c] == "V" && !v_col) {
      v_col = c;
    } else {
      theta_cols.push_back(c);
    }
  }
  if (static_cast<Eigen::Index>(theta_cols.size()) != expected_dim) {
    std::string detail;
    if (static_cast<Eigen::Index>(theta_cols.size()) > expected_dim) {
      detail = fmt::format("; unexpected column '{}'", table.header[theta_cols[static_cast<std::size_t>(expected_dim)]]);
    }
    throw ContractViolation(fmt::format("{}: chain has {} parameter columns, expected {}{}", source, theta_cols.size(),
                                        expected_dim, detail));
  }
  if (table.rows.empty()) throw ContractViolation(fmt::format("{}: chain has no draws", source));

  const auto n = static_cast<Eigen::Index>(table.rows.size());
  ParameterChain chain;
  chain.theta.resize(n, expected_dim);
  if (v_col) chain.hyper = Eigen::VectorXd(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = table.rows[static_cast<std::size_t>(i)];
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (!std::isfinite(row[c])) {
        throw ContractViolation(
            fmt::format("{}: row {}, column '{}': non-finite value", source, i + 1, table.header[c]));
      }
    }
    for (std::size_t j = 0; j < theta_cols.size(); ++j) chain.theta(i, static_cast<Eigen::Index>(j)) = row[theta_cols[j]];
    if (v_col) (*chain.hyper)[i] = row[*v_col];
  }
  return chain;
}

ParameterChain load_chain_csv(const std::filesystem::path& path, Eigen::Index expected_dim) {
  return chain_from_table(read_csv_file(path), expected_dim, path.string());
}

void write_chain_csv(const ParameterChain& chain, const std::vector<std::string>& names,
                     const std::filesystem::path& path) {
  require(static_cast<Eigen::Index>(names.size()) == chain.theta.cols(), "chain column names do not match the chain");
  std::ofstream out = open_for_write(path);
  for (std::size_t c = 0; c < names.size(); ++c) fmt::print(out, "{}{}", c ? "," : "", names[c]);
  if (chain.hyper) fmt::print(out, ",V");
  fmt::print(out, "\n");
  for (Eigen::Index r = 0; r < chain.theta.rows(); ++r) {
    for (Eigen::Index c = 0; c < chain.theta.cols(); ++c) fmt::print(out, "{}{}", c ? "," : "", chain.theta(r, c));
    if (chain.hyper) fmt::print(out, ",{}", (*chain.hyper)[r]);
    fmt::print(out, "\n");
  }
  if (!out) throw IoError(fmt::format("failed writing '{}'", path.string()));
}

void write_store_csv(const SampleStore& store, const std::filesystem::path& path) {
  ParameterChain as_chain{store.psi_draws, store.hyper_draws, std::nullopt};
  std::vector<std::string> names;
  for (Eigen::Index j = 0; j < store.dim(); ++j) names.push_back(fmt::format("psi_{}", j + 1));
  write_chain_csv(as_chain, names, path);
}

SampleStore load_store_csv(const std::filesystem::path& path, int model_id, const std::string& model_name,
                           Eigen::Index palette_dim) {
  const ParameterChain chain = load_chain_csv(path, palette_dim);
  SampleStore store;
  store.model_id = model_id;
  store.model_name = model_name;
  store.psi_draws = chain.theta;
  store.hyper_draws = chain.hyper;
  store.validate();
  return store;
}

void write_trace_csv(const CumulativeTrace& trace, std::ostream& out) {
  fmt::print(out, "iteration");
  for (Eigen::Index k = 0; k < trace.cumulative.cols(); ++k) fmt::print(out, ",model_{}", k + 1);
  fmt::print(out, "\n");
  for (Eigen::Index j = 0; j < trace.cumulative.rows(); ++j) {
    fmt::print(out, "{}", j + 1);
    for (Eigen::Index k = 0; k < trace.cumulative.cols(); ++k) fmt::print(out, ",{:.8f}", trace.cumulative(j, k));
    fmt::print(out, "\n");
  }
}

void write_trace_csv(const CumulativeTrace& trace, const std::filesystem::path& path) {
  std::ofstream out = open_for_write(path);
  write_trace_csv(trace, out);
  if (!out) throw IoError(fmt::format("failed writing '{}'", path.string()));
}

}  // namespace palette
