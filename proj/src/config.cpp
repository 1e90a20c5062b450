#include "palette/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "palette/error.hpp"

namespace palette {

using nlohmann::json;

namespace {

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j, const std::string& what) {
  require(j.is_array(), fmt::format("{} must be an array of rows", what));
  if (j.empty()) return {};
  const std::size_t cols = j.front().size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < j.size(); ++r) {
    require(j[r].is_array() && j[r].size() == cols, fmt::format("{}: row {} has the wrong length", what, r + 1));
    for (std::size_t c = 0; c < cols; ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = j[r][c].get<double>();
    }
  }
  return m;
}

json vector_to_json(const Eigen::VectorXd& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

Eigen::VectorXd vector_from_json(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

json component_to_json(const PriorComponent& c) {
  if (const auto* b = std::get_if<BetaPrior>(&c)) return {{"dist", "beta"}, {"a", b->a}, {"b", b->b}};
  if (const auto* n = std::get_if<NormalPrior>(&c)) return {{"dist", "normal"}, {"mean", n->mean}, {"sd", n->sd}};
  const auto& s = std::get<ScaledPrecisionNormalPrior>(c);
  return {{"dist", "scaled_precision_normal"}, {"multiplier", s.multiplier}};
}

PriorComponent component_from_json(const json& j) {
  const auto dist = j.at("dist").get<std::string>();
  if (dist == "beta") return BetaPrior{j.at("a").get<double>(), j.at("b").get<double>()};
  if (dist == "normal") return NormalPrior{j.at("mean").get<double>(), j.at("sd").get<double>()};
  if (dist == "scaled_precision_normal") return ScaledPrecisionNormalPrior{j.at("multiplier").get<double>()};
  throw ContractViolation(fmt::format("unknown prior distribution '{}'", dist));
}

json predictor_to_json(const LinearPredictor& p) { return {{"terms", p.terms}, {"center", p.center}}; }

LinearPredictor predictor_from_json(const json& j) {
  LinearPredictor p;
  p.terms = j.value("terms", std::vector<std::vector<std::string>>{});
  p.center = j.value("center", false);
  return p;
}

json model_to_json(const ModelDefinition& m) {
  json j;
  j["name"] = m.name;
  j["family"] = family_name(m.family);
  if (const auto* b = std::get_if<BinomialFamily>(&m.family)) {
    j["trials"] = b->trials_column;
    j["groups"] = b->groups;
    json priors = json::array();
    for (const BetaPrior& p : b->priors) priors.push_back({{"a", p.a}, {"b", p.b}});
    j["priors"] = priors;
  } else if (const auto* g = std::get_if<GaussianLinearFamily>(&m.family)) {
    j["design"] = predictor_to_json(g->config.design);
    j["coef_prior_mean"] = vector_to_json(g->config.coef_prior_mean);
    j["coef_prior_covariance"] = matrix_to_json(g->config.coef_prior_covariance);
    j["variance_prior_shape"] = g->config.variance_prior_shape;
    j["variance_prior_scale"] = g->config.variance_prior_scale;
  } else {
    const auto& l = std::get<LogisticFamily>(m.family);
    j["design"] = predictor_to_json(l.config.design);
    j["precision_multiplier"] = l.config.precision_multiplier;
    j["v_prior_shape"] = l.config.v_prior_shape;
    j["v_prior_rate"] = l.config.v_prior_rate;
    j["proposal_scale"] = l.config.proposal_scale;
  }
  j["bijection"] = matrix_to_json(m.bijection);
  json supp = json::array();
  for (const PriorComponent& c : m.supplemental) supp.push_back(component_to_json(c));
  j["supplemental"] = supp;
  j["prior_weight"] = m.prior_weight;
  if (m.chain_path) j["chain"] = *m.chain_path;
  return j;
}

ModelDefinition model_from_json(const json& j) {
  ModelDefinition m;
  m.name = j.at("name").get<std::string>();
  const auto family = j.at("family").get<std::string>();
  if (family == "binomial") {
    BinomialFamily b;
    b.trials_column = j.value("trials", std::string("N"));
    b.groups = j.at("groups").get<std::vector<Eigen::Index>>();
    for (const json& p : j.at("priors")) b.priors.push_back({p.at("a").get<double>(), p.at("b").get<double>()});
    m.family = b;
  } else if (family == "gaussian_linear") {
    GaussianLinearFamily g;
    g.config.design = predictor_from_json(j.at("design"));
    g.config.coef_prior_mean = vector_from_json(j.at("coef_prior_mean"));
    g.config.coef_prior_covariance = matrix_from_json(j.at("coef_prior_covariance"), "coef_prior_covariance");
    g.config.variance_prior_shape = j.at("variance_prior_shape").get<double>();
    g.config.variance_prior_scale = j.at("variance_prior_scale").get<double>();
    m.family = g;
  } else if (family == "logistic_hierarchical") {
    LogisticFamily l;
    l.config.design = predictor_from_json(j.at("design"));
    l.config.precision_multiplier = j.at("precision_multiplier").get<double>();
    l.config.v_prior_shape = j.value("v_prior_shape", 3.29);
    l.config.v_prior_rate = j.value("v_prior_rate", 7.80);
    l.config.proposal_scale = j.value("proposal_scale", 0.2);
    m.family = l;
  } else {
    throw ContractViolation(fmt::format("model '{}': unknown family '{}'", m.name, family));
  }
  m.bijection = matrix_from_json(j.value("bijection", json::array()), fmt::format("model '{}' bijection", m.name));
  for (const json& c : j.value("supplemental", json::array())) m.supplemental.push_back(component_from_json(c));
  m.prior_weight = j.at("prior_weight").get<double>();
  if (j.contains("chain")) m.chain_path = j.at("chain").get<std::string>();
  return m;
}

std::string kind_name(ResponseKind kind) {
  switch (kind) {
    case ResponseKind::Real: return "real";
    case ResponseKind::Binary: return "binary";
    case ResponseKind::Binomial: return "binomial";
  }
  return "real";
}

ResponseKind kind_from_name(const std::string& name) {
  if (name == "real") return ResponseKind::Real;
  if (name == "binary") return ResponseKind::Binary;
  if (name == "binomial") return ResponseKind::Binomial;
  throw ContractViolation(fmt::format("unknown response kind '{}'", name));
}

std::string method_name(MethodSelection m) {
  switch (m) {
    case MethodSelection::One: return "1";
    case MethodSelection::Two: return "2";
    case MethodSelection::Both: return "both";
  }
  return "both";
}

}  // namespace

MethodSelection parse_method(const std::string& name) {
  if (name == "1") return MethodSelection::One;
  if (name == "2") return MethodSelection::Two;
  if (name == "both") return MethodSelection::Both;
  throw ContractViolation(fmt::format("unknown method '{}' (expected 1, 2 or both)", name));
}

void to_json(json& j, const RunConfig& c) {
  json models = json::array();
  for (const ModelDefinition& m : c.models) models.push_back(model_to_json(m));
  json data;
  if (c.data.path) data["path"] = *c.data.path;
  if (c.data.embedded) data["embedded"] = *c.data.embedded;
  data["response"] = c.data.schema.response;
  data["covariates"] = c.data.schema.covariates;
  data["kind"] = kind_name(c.data.schema.kind);
  if (!c.data.schema.trials.empty()) data["trials"] = c.data.schema.trials;
  data["standardize"] = c.data.standardize;

  json stage2 = {{"method", method_name(c.stage2.method)},
                 {"iterations", c.stage2.iterations},
                 {"initial_models", c.stage2.initial_models},
                 {"draws_per_model", c.stage2.draws_per_model},
                 {"tune_priors", c.stage2.tune_priors},
                 {"tune_rounds", c.stage2.tune_rounds},
                 {"tune_iterations", c.stage2.tune_iterations},
                 {"tune_target", c.stage2.tune_target},
                 {"report_prior", c.stage2.report_prior}};
  if (c.stage2.burnin) stage2["burnin"] = *c.stage2.burnin;

  j = json{{"models", models},
           {"data", data},
           {"stage1", {{"chains", c.stage1.chains}, {"iters", c.stage1.iters}, {"burnin", c.stage1.burnin}}},
           {"stage2", stage2},
           {"seed", c.seed},
           {"output", {{"dir", c.output.dir}}}};
}

void from_json(const json& j, RunConfig& c) {
  c = RunConfig{};
  for (const json& m : j.at("models")) c.models.push_back(model_from_json(m));

  const json& data = j.at("data");
  if (data.contains("path")) c.data.path = data.at("path").get<std::string>();
  if (data.contains("embedded")) c.data.embedded = data.at("embedded").get<std::string>();
  c.data.schema.response = data.value("response", std::string("y"));
  c.data.schema.covariates = data.value("covariates", std::vector<std::string>{});
  c.data.schema.kind = kind_from_name(data.value("kind", std::string("real")));
  c.data.schema.trials = data.value("trials", std::string());
  c.data.standardize = data.value("standardize", std::vector<std::string>{});

  if (j.contains("stage1")) {
    const json& s1 = j.at("stage1");
    c.stage1.chains = s1.value("chains", c.stage1.chains);
    c.stage1.iters = s1.value("iters", c.stage1.iters);
    c.stage1.burnin = s1.value("burnin", c.stage1.burnin);
  }
  if (j.contains("stage2")) {
    const json& s2 = j.at("stage2");
    c.stage2.method = parse_method(s2.value("method", std::string("both")));
    c.stage2.iterations = s2.value("iterations", c.stage2.iterations);
    if (s2.contains("burnin")) c.stage2.burnin = s2.at("burnin").get<std::int64_t>();
    c.stage2.initial_models = s2.value("initial_models", c.stage2.initial_models);
    c.stage2.draws_per_model = s2.value("draws_per_model", c.stage2.draws_per_model);
    c.stage2.tune_priors = s2.value("tune_priors", c.stage2.tune_priors);
    c.stage2.tune_rounds = s2.value("tune_rounds", c.stage2.tune_rounds);
    c.stage2.tune_iterations = s2.value("tune_iterations", c.stage2.tune_iterations);
    c.stage2.tune_target = s2.value("tune_target", c.stage2.tune_target);
    c.stage2.report_prior = s2.value("report_prior", c.stage2.report_prior);
  }
  c.seed = j.value("seed", c.seed);
  if (j.contains("output")) c.output.dir = j.at("output").value("dir", c.output.dir);
}

RunConfig parse_run_config(const std::string& text) {
  try {
    return json::parse(text).get<RunConfig>();
  } catch (const json::exception& e) {
    throw ContractViolation(fmt::format("invalid run configuration: {}", e.what()));
  }
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open configuration '{}'", path.string()));
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_run_config(buffer.str());
}

std::string serialize_run_config(const RunConfig& config) { return json(config).dump(2); }

namespace {

void check_simplex_like(const std::vector<double>& v, std::size_t k, const std::string& what) {
  if (v.empty()) return;
  require(v.size() == k, fmt::format("{} has {} entries for {} models", what, v.size(), k));
  for (double x : v) require(std::isfinite(x) && x > 0.0, fmt::format("{} entries must be positive", what));
}

}  // namespace

std::vector<std::string> validate_run_config(RunConfig& config) {
  std::vector<std::string> warnings;
  require(!config.models.empty(), "configuration defines no models");
  require(config.data.path.has_value() != config.data.embedded.has_value(),
          "data section needs exactly one of 'path' or 'embedded'");
  if (config.data.path) {
    if (!std::filesystem::exists(*config.data.path)) {
      throw IoError(fmt::format("data file '{}' does not exist", *config.data.path));
    }
  }
  if (config.data.schema.kind == ResponseKind::Binomial) {
    require(!config.data.schema.trials.empty(), "binomial data needs a 'trials' column");
  }

  const Eigen::Index d = palette_dim(config.models);
  double total = 0.0;
  for (const ModelDefinition& m : config.models) {
    const Eigen::Index n = family_param_count(m.family);
    require(n >= 1, fmt::format("model '{}' has no parameters", m.name));
    if (m.bijection.size() > 0) {
      require(m.bijection.rows() == d && m.bijection.cols() == d,
              fmt::format("model '{}': bijection must be {}x{}", m.name, d, d));
      LinearBijection check(m.bijection);
    }
    require(static_cast<Eigen::Index>(m.supplemental.size()) == d - n,
            fmt::format("model '{}' needs {} supplemental prior components, got {}", m.name, d - n,
                        m.supplemental.size()));
    require(std::isfinite(m.prior_weight) && m.prior_weight > 0.0,
            fmt::format("model '{}': prior weight must be positive", m.name));
    if (m.chain_path && !std::filesystem::exists(*m.chain_path)) {
      throw IoError(fmt::format("chain file '{}' for model '{}' does not exist", *m.chain_path, m.name));
    }
    if (const auto* g = std::get_if<GaussianLinearFamily>(&m.family)) g->config.validate();
    if (const auto* l = std::get_if<LogisticFamily>(&m.family)) l->config.validate();
    if (const auto* b = std::get_if<BinomialFamily>(&m.family)) {
      require(!b->priors.empty(), fmt::format("model '{}': binomial family needs priors", m.name));
      for (const BetaPrior& p : b->priors) require(p.a > 0.0 && p.b > 0.0, "beta prior parameters must be positive");
    }
    total += m.prior_weight;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    warnings.push_back(fmt::format("prior weights sum to {:.12g}; renormalized to 1", total));
    for (ModelDefinition& m : config.models) m.prior_weight /= total;
  }

  require(config.stage1.chains >= 1, "stage1.chains must be at least 1");
  require(config.stage1.burnin >= 0 && config.stage1.iters > config.stage1.burnin,
          "stage1.iters must exceed stage1.burnin");
  const Stage2Settings& s2 = config.stage2;
  require(s2.iterations >= 1, "stage2.iterations must be at least 1");
  const std::int64_t burnin = s2.burnin.value_or(s2.iterations / 2);
  require(burnin >= 0 && burnin < s2.iterations, "no post-burn-in iterations");
  require(!s2.initial_models.empty(), "stage2.initial_models must name at least one chain");
  for (int k : s2.initial_models) {
    require(k >= 1 && k <= static_cast<int>(config.models.size()), fmt::format("initial model {} out of range", k));
  }
  require(s2.draws_per_model >= 1, "stage2.draws_per_model must be at least 1");
  require(s2.tune_rounds >= 1 && s2.tune_iterations >= 2, "prior tuning needs rounds >= 1 and iterations >= 2");
  check_simplex_like(s2.tune_target, config.models.size(), "tune_target");
  check_simplex_like(s2.report_prior, config.models.size(), "report_prior");
  return warnings;
}

}  // namespace palette
