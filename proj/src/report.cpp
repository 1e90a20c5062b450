#include "palette/report.hpp"

#include <fstream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "palette/csv_io.hpp"
#include "palette/error.hpp"

namespace palette {

using nlohmann::json;

namespace {

void check_complete(const PosteriorReport& report) {
  if (report.rao_blackwell || report.indicator) {
    require(report.post_burnin_iterations() > 0, "no post-burn-in iterations");
  }
  require(report.rao_blackwell || report.stationary, "report has no probability estimates");
}

std::string cell(const std::optional<ProbabilityEstimate>& est, Eigen::Index k) {
  if (!est) return fmt::format("{:>18}", "-");
  return fmt::format("{:>18}", fmt::format("{:.4f} ({:.4f})", est->probs[k], est->mcse[k]));
}

std::string csv_pair(const std::optional<ProbabilityEstimate>& est, Eigen::Index k) {
  if (!est) return ",";
  return fmt::format("{:.6f},{:.6f}", est->probs[k], est->mcse[k]);
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError(fmt::format("cannot write '{}'", path.string()));
  out << text;
  if (!out) throw IoError(fmt::format("failed writing '{}'", path.string()));
}

}  // namespace

std::string render_text_report(const PosteriorReport& report) {
  check_complete(report);
  const auto k = static_cast<Eigen::Index>(report.model_names.size());
  std::string out;
  auto line = [&out](const std::string& s) {
    out += s;
    out += '\n';
  };

  line("posterior model probabilities");
  line(fmt::format("seed {}  chains {}  iterations {}  burn-in {}  draws/model {}", report.seed, report.chains,
                   report.iterations, report.burnin, report.draws_per_model));
  line("");
  line(fmt::format("{:<5} {:<14} {:>8}  {:>18}  {:>18}  {:>18}", "model", "name", "prior", "indicator (mcse)",
                   "rao-blackwell", "stationary"));
  for (Eigen::Index i = 0; i < k; ++i) {
    line(fmt::format("{:<5} {:<14} {:>8.4f}  {}  {}  {}", i + 1, report.model_names[static_cast<std::size_t>(i)],
                     report.prior_weights_used[i], cell(report.indicator, i), cell(report.rao_blackwell, i),
                     cell(report.stationary, i)));
  }
  const ProbabilityEstimate& best = report.preferred();
  std::string rounded;
  for (Eigen::Index i = 0; i < k; ++i) rounded += fmt::format(" {:.2f}", best.probs[i]);
  line(fmt::format("Pr(M_k|y) to 2 dp:{}", rounded));
  line("");

  if (report.bayes_factors.size() > 0) {
    line("Bayes factors BF_jk (row j against column k)");
    std::string header = fmt::format("{:<6}", "");
    for (Eigen::Index c = 0; c < k; ++c) header += fmt::format(" {:>12}", fmt::format("M_{}", c + 1));
    line(header);
    for (Eigen::Index r = 0; r < k; ++r) {
      std::string row = fmt::format("{:<6}", fmt::format("M_{}", r + 1));
      for (Eigen::Index c = 0; c < k; ++c) row += fmt::format(" {:>12.6g}", report.bayes_factors(r, c));
      line(row);
    }
    for (Eigen::Index r = 0; r < k; ++r) {
      for (Eigen::Index c = 0; c < k; ++c) {
        if (r != c) line(fmt::format("BF_{}{} = {:.6g}", r + 1, c + 1, report.bayes_factors(r, c)));
      }
    }
    line("");
  }

  if (report.transition) {
    line("transition matrix (row h: mean Pr(M_k | psi) over draws from model h)");
    for (Eigen::Index r = 0; r < k; ++r) {
      std::string row = fmt::format("{:<6}", fmt::format("M_{}", r + 1));
      for (Eigen::Index c = 0; c < k; ++c) row += fmt::format(" {:>8.4f}", report.transition->matrix(r, c));
      line(row);
    }
    line("");
  }

  if (report.reweighted && report.report_prior) {
    line("restated under prior model probabilities");
    for (Eigen::Index i = 0; i < k; ++i) {
      line(fmt::format("{:<5} {:<14} {:>8.4f}  {:>8.4f} ({:.4f})", i + 1,
                       report.model_names[static_cast<std::size_t>(i)], (*report.report_prior)[i],
                       report.reweighted->probs[i], report.reweighted->mcse[i]));
    }
    line("");
  }

  if (!report.diagnostics.empty()) {
    line("diagnostics");
    for (const std::string& d : report.diagnostics) line(fmt::format("  {}", d));
  }
  return out;
}

std::string render_csv_report(const PosteriorReport& report) {
  check_complete(report);
  std::string out =
      "model,name,prior,indicator,indicator_mcse,rao_blackwell,rao_blackwell_mcse,stationary,stationary_mcse\n";
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(report.model_names.size()); ++i) {
    out += fmt::format("{},{},{:.8g},{},{},{}\n", i + 1, report.model_names[static_cast<std::size_t>(i)],
                       report.prior_weights_used[i], csv_pair(report.indicator, i), csv_pair(report.rao_blackwell, i),
                       csv_pair(report.stationary, i));
  }
  return out;
}

std::vector<std::filesystem::path> emit_report(const PosteriorReport& report, ReportFormat format,
                                               const std::filesystem::path& dir) {
  check_complete(report);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError(fmt::format("cannot create output directory '{}': {}", dir.string(), ec.message()));

  std::vector<std::filesystem::path> written;
  if (format == ReportFormat::Text) {
    written.push_back(dir / "report.txt");
    write_file(written.back(), render_text_report(report));
    return written;
  }
  written.push_back(dir / "report.csv");
  write_file(written.back(), render_csv_report(report));
  for (std::size_t c = 0; c < report.traces.size(); ++c) {
    written.push_back(dir / fmt::format("trace_{}.csv", c + 1));
    write_trace_csv(report.traces[c], written.back());
  }
  return written;
}

namespace {

json estimate_to_json(const ProbabilityEstimate& e) {
  return {{"probs", std::vector<double>(e.probs.data(), e.probs.data() + e.probs.size())},
          {"mcse", std::vector<double>(e.mcse.data(), e.mcse.data() + e.mcse.size())}};
}

Eigen::VectorXd to_vector(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

ProbabilityEstimate estimate_from_json(const json& j) { return {to_vector(j.at("probs")), to_vector(j.at("mcse"))}; }

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    std::vector<double> row(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index c = 0; c < m.cols(); ++c) row[static_cast<std::size_t>(c)] = m(r, c);
    rows.push_back(row);
  }
  return rows;
}

Eigen::MatrixXd matrix_from(const json& j) {
  if (j.empty()) return {};
  Eigen::MatrixXd m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(j.front().size()));
  for (std::size_t r = 0; r < j.size(); ++r) {
    for (std::size_t c = 0; c < j[r].size(); ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = j[r][c];
  }
  return m;
}

}  // namespace

void to_json(json& j, const PosteriorReport& r) {
  j = json{{"model_names", r.model_names},
           {"prior_weights_used", std::vector<double>(r.prior_weights_used.data(),
                                                      r.prior_weights_used.data() + r.prior_weights_used.size())},
           {"bayes_factors", matrix_json(r.bayes_factors)},
           {"seed", r.seed},
           {"iterations", r.iterations},
           {"burnin", r.burnin},
           {"chains", r.chains},
           {"draws_per_model", r.draws_per_model},
           {"diagnostics", r.diagnostics}};
  if (r.indicator) j["indicator"] = estimate_to_json(*r.indicator);
  if (r.rao_blackwell) j["rao_blackwell"] = estimate_to_json(*r.rao_blackwell);
  if (r.stationary) j["stationary"] = estimate_to_json(*r.stationary);
  if (r.transition) {
    j["transition"] = {{"matrix", matrix_json(r.transition->matrix)}, {"counts", r.transition->counts}};
  }
  if (r.report_prior && r.reweighted) {
    j["report_prior"] = std::vector<double>(r.report_prior->data(), r.report_prior->data() + r.report_prior->size());
    j["reweighted"] = estimate_to_json(*r.reweighted);
  }
}

void from_json(const json& j, PosteriorReport& r) {
  r = PosteriorReport{};
  r.model_names = j.at("model_names").get<std::vector<std::string>>();
  r.prior_weights_used = to_vector(j.at("prior_weights_used"));
  r.bayes_factors = matrix_from(j.at("bayes_factors"));
  r.seed = j.at("seed").get<std::uint64_t>();
  r.iterations = j.at("iterations").get<std::int64_t>();
  r.burnin = j.at("burnin").get<std::int64_t>();
  r.chains = j.at("chains").get<std::int64_t>();
  r.draws_per_model = j.at("draws_per_model").get<std::int64_t>();
  r.diagnostics = j.at("diagnostics").get<std::vector<std::string>>();
  if (j.contains("indicator")) r.indicator = estimate_from_json(j.at("indicator"));
  if (j.contains("rao_blackwell")) r.rao_blackwell = estimate_from_json(j.at("rao_blackwell"));
  if (j.contains("stationary")) r.stationary = estimate_from_json(j.at("stationary"));
  if (j.contains("transition")) {
    TransitionEstimate t;
    t.matrix = matrix_from(j.at("transition").at("matrix"));
    t.counts = j.at("transition").at("counts").get<std::vector<std::int64_t>>();
    r.transition = t;
  }
  if (j.contains("report_prior")) {
    r.report_prior = to_vector(j.at("report_prior"));
    r.reweighted = estimate_from_json(j.at("reweighted"));
  }
}

}  // namespace palette
