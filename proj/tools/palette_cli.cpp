// palette: posterior model probabilities from model-specific MCMC output.
//
//   palette fit     --config run.json [--out-dir DIR] [--seed N]
//   palette weigh   --config run.json --stores DIR [--method 1|2|both] [--iters N]
//                   [--burnin N] [--seed N] [--tune-priors] [--out-dir DIR]
//   palette example binomial|pine|trout [--data FILE] [--out-dir DIR] [--iters N] [--seed N]
//   palette report  --in report.json [--format text|csv] [--out-dir DIR]
//
// Exit codes: 0 success, 1 validation error, 2 numerical degeneracy, 3 I/O error.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "palette/config.hpp"
#include "palette/csv_io.hpp"
#include "palette/error.hpp"
#include "palette/pipeline.hpp"
#include "palette/report.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path store_path(const fs::path& dir, std::size_t k) { return dir / fmt::format("store_{}.csv", k + 1); }

void write_outputs(const palette::PosteriorReport& report, const fs::path& dir) {
  palette::emit_report(report, palette::ReportFormat::Text, dir);
  palette::emit_report(report, palette::ReportFormat::Csv, dir);
  std::ofstream out(dir / "report.json");
  if (!out) throw palette::IoError(fmt::format("cannot write '{}'", (dir / "report.json").string()));
  out << json(report).dump(2) << '\n';
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const std::string& w : warnings) fmt::print(std::cerr, "warning: {}\n", w);
}

struct Stage2Flags {
  std::optional<std::string> method;
  std::optional<std::int64_t> iters;
  std::optional<std::int64_t> burnin;
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> draws;
  bool tune_priors = false;
};

void apply_flags(palette::RunConfig& config, const Stage2Flags& flags) {
  if (flags.method) config.stage2.method = palette::parse_method(*flags.method);
  if (flags.iters) config.stage2.iterations = *flags.iters;
  if (flags.burnin) config.stage2.burnin = *flags.burnin;
  if (flags.seed) config.seed = *flags.seed;
  if (flags.draws) config.stage2.draws_per_model = *flags.draws;
  if (flags.tune_priors) config.stage2.tune_priors = true;
}

int cmd_fit(const std::string& config_path, const std::optional<std::string>& out_dir,
            std::optional<std::uint64_t> seed) {
  palette::RunConfig config = palette::load_run_config(config_path);
  if (seed) config.seed = *seed;
  print_warnings(palette::validate_run_config(config));
  const palette::Dataset data = palette::load_run_dataset(config.data);
  fmt::print("loaded {} records\n", data.rows());
  const palette::ModelSet models = palette::build_model_set(config.models, data);
  const fs::path dir = out_dir.value_or(config.output.dir);
  fs::create_directories(dir);
  const std::vector<palette::SampleStore> stores = palette::run_stage1(config, models, data);
  for (std::size_t k = 0; k < stores.size(); ++k) {
    palette::write_store_csv(stores[k], store_path(dir, k));
    fmt::print("model {} ({}): {} palette draws -> {}\n", k + 1, models[k].name, stores[k].draws(),
               store_path(dir, k).string());
  }
  return 0;
}

int cmd_weigh(const std::string& config_path, const std::string& stores_dir, const Stage2Flags& flags,
              const std::optional<std::string>& out_dir) {
  palette::RunConfig config = palette::load_run_config(config_path);
  apply_flags(config, flags);
  print_warnings(palette::validate_run_config(config));
  const palette::Dataset data = palette::load_run_dataset(config.data);
  const palette::ModelSet models = palette::build_model_set(config.models, data);
  std::vector<palette::SampleStore> stores;
  for (std::size_t k = 0; k < models.size(); ++k) {
    stores.push_back(palette::load_store_csv(store_path(stores_dir, k), models[k].id, models[k].name,
                                             models.palette_dim()));
  }
  const palette::PosteriorReport report = palette::run_stage2(config, stores, models, data);
  const fs::path dir = out_dir.value_or(config.output.dir);
  write_outputs(report, dir);
  fmt::print("{}", palette::render_text_report(report));
  return 0;
}

int cmd_example(const std::string& name, const std::optional<std::string>& data_path, const Stage2Flags& flags,
                const std::optional<std::string>& out_dir, bool print_config) {
  json overrides = json::object();
  if (data_path) overrides["data"]["path"] = *data_path;
  if (flags.iters) overrides["stage2"]["iterations"] = *flags.iters;
  if (flags.burnin) overrides["stage2"]["burnin"] = *flags.burnin;
  if (flags.seed) overrides["seed"] = *flags.seed;
  if (flags.method) overrides["stage2"]["method"] = *flags.method;
  if (flags.tune_priors) overrides["stage2"]["tune_priors"] = true;
  if (flags.draws) overrides["stage2"]["draws_per_model"] = *flags.draws;
  if (print_config) {
    // a starting point for `fit --config`
    json patched = json(palette::example_config(name));
    patched.merge_patch(overrides);
    fmt::print("{}\n", patched.dump(2));
    return 0;
  }
  const palette::PosteriorReport report = palette::run_example(name, overrides);
  const fs::path dir = out_dir.value_or(palette::example_config(name).output.dir);
  write_outputs(report, dir);
  fmt::print("{}", palette::render_text_report(report));
  return 0;
}

int cmd_report(const std::string& in_path, const std::string& format, const std::optional<std::string>& out_dir) {
  std::ifstream in(in_path);
  if (!in) throw palette::IoError(fmt::format("cannot open '{}'", in_path));
  palette::PosteriorReport report;
  try {
    report = json::parse(in).get<palette::PosteriorReport>();
  } catch (const json::exception& e) {
    throw palette::ContractViolation(fmt::format("{}: not a report file ({})", in_path, e.what()));
  }
  const palette::ReportFormat fmt_kind = format == "csv" ? palette::ReportFormat::Csv : palette::ReportFormat::Text;
  if (out_dir) {
    for (const fs::path& p : palette::emit_report(report, fmt_kind, *out_dir)) fmt::print("wrote {}\n", p.string());
  } else {
    fmt::print("{}", fmt_kind == palette::ReportFormat::Csv ? palette::render_csv_report(report)
                                                           : palette::render_text_report(report));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Posterior model probabilities and Bayes factors from model-specific MCMC output"};
  app.require_subcommand(1);

  std::string config_path;
  std::string stores_dir;
  std::optional<std::string> out_dir;
  std::optional<std::string> data_path;
  std::optional<std::uint64_t> seed;
  Stage2Flags flags;

  auto* fit = app.add_subcommand("fit", "Stage 1: sample each model and store palette draws");
  fit->add_option("--config", config_path, "run configuration (JSON)")->required();
  fit->add_option("--out-dir", out_dir, "directory for store_<k>.csv files");
  fit->add_option("--seed", seed, "master seed");

  auto add_stage2_flags = [&flags](CLI::App* cmd) {
    cmd->add_option("--method", flags.method, "1, 2 or both")->check(CLI::IsMember({"1", "2", "both"}));
    cmd->add_option("--iters", flags.iters, "Method-1 iterations per chain");
    cmd->add_option("--burnin", flags.burnin, "Method-1 burn-in (default half)");
    cmd->add_option("--seed", flags.seed, "master seed");
    cmd->add_option("--draws", flags.draws, "Method-2 draws per model");
    cmd->add_flag("--tune-priors", flags.tune_priors, "tune prior model weights for balanced visits first");
  };

  auto* weigh = app.add_subcommand("weigh", "Stage 2: posterior model probabilities from stored draws");
  weigh->add_option("--config", config_path, "run configuration (JSON)")->required();
  weigh->add_option("--stores", stores_dir, "directory holding store_<k>.csv")->required();
  weigh->add_option("--out-dir", out_dir, "output directory");
  add_stage2_flags(weigh);

  std::string example_name;
  auto* example = app.add_subcommand("example", "run a built-in example end to end");
  example->add_option("name", example_name, "binomial, pine or trout")
      ->required()
      ->check(CLI::IsMember({"binomial", "pine", "trout"}));
  example->add_option("--data", data_path, "data file (pine, trout)");
  example->add_option("--out-dir", out_dir, "output directory");
  bool print_config = false;
  example->add_flag("--print-config", print_config, "print the example's run configuration (JSON) and exit");
  add_stage2_flags(example);

  std::string report_in;
  std::string report_format = "text";
  auto* report = app.add_subcommand("report", "render a saved report.json");
  report->add_option("--in", report_in, "report.json from weigh/example")->required();
  report->add_option("--format", report_format, "text or csv")->check(CLI::IsMember({"text", "csv"}));
  report->add_option("--out-dir", out_dir, "write files instead of printing");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*fit) return cmd_fit(config_path, out_dir, seed);
    if (*weigh) return cmd_weigh(config_path, stores_dir, flags, out_dir);
    if (*example) return cmd_example(example_name, data_path, flags, out_dir, print_config);
    if (*report) return cmd_report(report_in, report_format, out_dir);
  } catch (const palette::ContractViolation& e) {
    fmt::print(std::cerr, "error: {}\n", e.what());
    return 1;
  } catch (const palette::DegenerateError& e) {
    fmt::print(std::cerr, "numerical error: {}\n", e.what());
    return 2;
  } catch (const palette::IoError& e) {
    fmt::print(std::cerr, "i/o error: {}\n", e.what());
    return 3;
  } catch (const std::filesystem::filesystem_error& e) {
    fmt::print(std::cerr, "i/o error: {}\n", e.what());
    return 3;
  }
  return 1;
}
