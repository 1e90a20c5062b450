#include "palette/pipeline.hpp"

#include <fmt/format.h>

#include "palette/error.hpp"

namespace palette {

using nlohmann::json;

Dataset embedded_dataset(const std::string& name) {
  if (name == "binomial") {
    Dataset data;
    data.response_name = "y";
    data.response = Eigen::Vector2d(8.0, 16.0);
    data.covariate_names = {"N"};
    data.covariates = Eigen::MatrixXd(2, 1);
    data.covariates << 20.0, 30.0;
    return data;
  }
  throw ContractViolation(fmt::format("no embedded dataset named '{}'", name));
}

Dataset load_run_dataset(const DataSource& source) {
  Dataset data = source.embedded ? embedded_dataset(*source.embedded) : load_dataset_csv(*source.path, source.schema);
  for (const std::string& name : source.standardize) {
    const Eigen::Index c = data.covariate_index(name);
    const auto n = static_cast<double>(data.rows());
    require(data.rows() >= 2, "standardization needs at least two records");
    const double mean = data.covariates.col(c).mean();
    const double sd = std::sqrt((data.covariates.col(c).array() - mean).square().sum() / (n - 1.0));
    require(sd > 0.0, fmt::format("cannot standardize constant column '{}'", name));
    data.covariates.col(c) = ((data.covariates.col(c).array() - mean) / sd).matrix();
  }
  return data;
}

std::uint64_t stage1_seed(std::uint64_t run_seed, std::size_t model_index) {
  Rng rng = make_stream(run_seed, 0x5eed0000ULL + model_index);
  return rng();
}

std::vector<SampleStore> run_stage1(const RunConfig& config, const ModelSet& models, const Dataset& data) {
  std::vector<SampleStore> stores;
  for (std::size_t k = 0; k < models.size(); ++k) {
    stores.push_back(fit_model(config.models[k], models[k], data, config.stage1, stage1_seed(config.seed, k)));
  }
  return stores;
}

PosteriorReport run_stage2(const RunConfig& config, const std::vector<SampleStore>& stores, const ModelSet& models,
                           const Dataset& data) {
  const Stage2Settings& s2 = config.stage2;
  const auto k = static_cast<Eigen::Index>(models.size());
  const Eigen::VectorXd configured_prior = models.prior_weights();
  Rng control = make_stream(config.seed, 0);

  ModelSet working = models;
  std::vector<std::string> diagnostics;
  if (s2.tune_priors) {
    const Eigen::VectorXd target =
        s2.tune_target.empty()
            ? Eigen::VectorXd(Eigen::VectorXd::Constant(k, 1.0 / static_cast<double>(k)))
            : normalize_weights(Eigen::Map<const Eigen::VectorXd>(s2.tune_target.data(), k));
    Rng tune_rng = make_stream(config.seed, 0x7e7e);
    const TunedPriors tuned = tune_model_priors(stores, models, data, target, s2.tune_rounds, s2.tune_iterations,
                                                tune_rng);
    working = models.with_weights(tuned.weights);
    if (!tuned.converged) {
      diagnostics.push_back(fmt::format("prior tuning did not reach +-0.1 of the target in {} rounds",
                                        tuned.rounds_used));
    }
  }

  PosteriorReport report;
  if (s2.method != MethodSelection::Two) {
    Method1Options opts;
    opts.iterations = s2.iterations;
    opts.burnin = s2.burnin;
    report = method1_replicates(stores, working, data, opts, s2.initial_models, config.seed);
  } else {
    report.model_names = working.names();
    report.prior_weights_used = working.prior_weights();
    report.seed = config.seed;
  }

  if (s2.method != MethodSelection::One) {
    TransitionEstimate transition = method2_transition(stores, working, data, s2.draws_per_model, control);
    const Eigen::VectorXd pi = stationary_distribution(transition.matrix);
    report.stationary = ProbabilityEstimate{pi, stationary_standard_errors(transition, pi)};
    report.transition = std::move(transition);
    report.draws_per_model = s2.draws_per_model;
  }

  std::optional<Eigen::VectorXd> restate;
  if (!s2.report_prior.empty()) {
    restate = normalize_weights(Eigen::Map<const Eigen::VectorXd>(s2.report_prior.data(), k));
  } else if (s2.tune_priors) {
    restate = configured_prior;
  }
  finalize_report(report);
  if (restate) {
    const ProbabilityEstimate& best = report.preferred();
    if ((best.probs.array() > 0.0).all()) {
      report.report_prior = *restate;
      report.reweighted = ProbabilityEstimate{reweight_under_prior(best.probs, report.prior_weights_used, *restate),
                                              reweight_standard_errors(best, report.prior_weights_used, *restate)};
    }
  }
  report.diagnostics.insert(report.diagnostics.begin(), diagnostics.begin(), diagnostics.end());
  return report;
}

std::string example_schema(const std::string& name) {
  if (name == "binomial") return "embedded: y = (8, 16), N = (20, 30); no file needed";
  if (name == "pine") return "CSV with header and columns y, x, z (42 boards: strength, density, resin-adjusted density)";
  if (name == "trout") return "CSV with header and columns y, S, L (binary return indicator, sex, length)";
  throw ContractViolation(fmt::format("unknown example '{}' (expected binomial, pine or trout)", name));
}

namespace {

ModelDefinition binomial_model(const std::string& name, std::vector<Eigen::Index> groups, std::size_t n_params) {
  ModelDefinition m;
  m.name = name;
  BinomialFamily f;
  f.trials_column = "N";
  f.groups = std::move(groups);
  f.priors.assign(n_params, BetaPrior{1.0, 1.0});
  m.family = f;
  m.prior_weight = 0.5;
  return m;
}

ModelDefinition pine_model(const std::string& name, const std::string& column, double weight) {
  ModelDefinition m;
  m.name = name;
  GaussianLinearFamily f;
  f.config.design.terms = {{column}};
  f.config.design.center = true;
  f.config.coef_prior_mean = Eigen::Vector2d(3000.0, 185.0);
  f.config.coef_prior_covariance = Eigen::Vector2d(1e6, 1e4).asDiagonal();
  // mean = sd = 300^2 pins shape 3, scale 180000
  f.config.variance_prior_shape = 3.0;
  f.config.variance_prior_scale = 180000.0;
  m.family = f;
  m.prior_weight = weight;
  return m;
}

ModelDefinition trout_model(const std::string& name, std::vector<std::vector<std::string>> terms,
                            std::vector<Eigen::Index> palette_order) {
  ModelDefinition m;
  m.name = name;
  LogisticFamily f;
  f.config.design.terms = std::move(terms);
  const auto n_coef = static_cast<double>(f.config.design.n_coefficients());
  f.config.precision_multiplier = n_coef;
  m.family = f;
  m.bijection = LinearBijection::permutation(palette_order).matrix();
  m.supplemental.assign(4 - static_cast<std::size_t>(n_coef), ScaledPrecisionNormalPrior{n_coef});
  m.prior_weight = 0.2;
  return m;
}

}  // namespace

RunConfig example_config(const std::string& name) {
  RunConfig c;
  c.output.dir = fmt::format("{}_out", name);
  if (name == "binomial") {
    c.data.embedded = "binomial";
    c.data.schema = DatasetSchema{"y", {"N"}, ResponseKind::Binomial, "N"};
    c.models.push_back(binomial_model("separate", {0, 1}, 2));
    ModelDefinition pooled = binomial_model("pooled", {0, 0}, 1);
    pooled.bijection = Eigen::MatrixXd(2, 2);
    pooled.bijection << 0.5, 0.5, 0.0, 1.0;
    pooled.supplemental = {BetaPrior{15.0, 15.0}};
    c.models.push_back(pooled);
    c.stage2.iterations = 100000;
    c.stage2.initial_models = {1, 2};
    c.stage2.draws_per_model = 100000;
  } else if (name == "pine") {
    c.data.schema = DatasetSchema{"y", {"x", "z"}, ResponseKind::Real, ""};
    c.models.push_back(pine_model("density", "x", 0.9995));
    c.models.push_back(pine_model("adjusted", "z", 0.0005));
    c.stage2.iterations = 200000;
    c.stage2.initial_models = {1, 2};
    c.stage2.draws_per_model = 200000;
  } else if (name == "trout") {
    c.data.schema = DatasetSchema{"y", {"S", "L"}, ResponseKind::Binary, ""};
    c.data.standardize = {"S", "L"};
    c.models.push_back(trout_model("constant", {}, {0, 1, 2, 3}));
    c.models.push_back(trout_model("sex", {{"S"}}, {0, 1, 2, 3}));
    // psi_3 carries the length effect, psi_2 a supplemental variable
    c.models.push_back(trout_model("length", {{"L"}}, {0, 2, 1, 3}));
    c.models.push_back(trout_model("sex+length", {{"S"}, {"L"}}, {0, 1, 2, 3}));
    c.models.push_back(trout_model("interaction", {{"S"}, {"L"}, {"S", "L"}}, {0, 1, 2, 3}));
    c.stage2.iterations = 200000;
    c.stage2.initial_models = {1, 2, 3, 4, 5};
    c.stage2.draws_per_model = 100000;
    c.stage2.tune_priors = true;
  } else {
    throw ContractViolation(fmt::format("unknown example '{}' (expected binomial, pine or trout)", name));
  }
  return c;
}

PosteriorReport run_example(const std::string& name, const json& overrides) {
  json patched = json(example_config(name));
  patched.merge_patch(overrides);
  RunConfig config = patched.get<RunConfig>();
  if (!config.data.path && !config.data.embedded) {
    throw ContractViolation(
        fmt::format("example '{}' needs a data file: {}", name, example_schema(name)));
  }
  validate_run_config(config);
  const Dataset data = load_run_dataset(config.data);
  const ModelSet models = build_model_set(config.models, data);
  const std::vector<SampleStore> stores = run_stage1(config, models, data);
  return run_stage2(config, stores, models, data);
}

}  // namespace palette
