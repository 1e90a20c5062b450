#include "palette/families.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <numbers>

#include <fmt/format.h>

#include "palette/densities.hpp"
#include "palette/error.hpp"
#include "palette/csv_io.hpp"

namespace palette {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double hyper_value(Hyper hyper) {
  require(hyper.has_value(), "prior component needs the shared hyperparameter");
  require(*hyper > 0.0, "hyperparameter V must be positive");
  return *hyper;
}

}  // namespace

double component_log_pdf(const PriorComponent& component, double x, Hyper hyper) {
  return std::visit(Overloaded{
                        [&](const BetaPrior& p) { return dist::beta_log_pdf(x, p.a, p.b); },
                        [&](const NormalPrior& p) { return dist::normal_log_pdf(x, p.mean, p.sd); },
                        [&](const ScaledPrecisionNormalPrior& p) {
                          return dist::normal_log_pdf(x, 0.0, 1.0 / std::sqrt(p.multiplier * hyper_value(hyper)));
                        },
                    },
                    component);
}

double component_sample(const PriorComponent& component, Rng& rng, Hyper hyper) {
  return std::visit(Overloaded{
                        [&](const BetaPrior& p) { return dist::sample_beta(rng, p.a, p.b); },
                        [&](const NormalPrior& p) { return dist::sample_normal(rng, p.mean, p.sd); },
                        [&](const ScaledPrecisionNormalPrior& p) {
                          return dist::sample_normal(rng, 0.0, 1.0 / std::sqrt(p.multiplier * hyper_value(hyper)));
                        },
                    },
                    component);
}

bool component_needs_hyper(const PriorComponent& component) {
  return std::holds_alternative<ScaledPrecisionNormalPrior>(component);
}

SupplementalPrior make_supplemental_prior(std::vector<PriorComponent> components) {
  auto shared = std::make_shared<const std::vector<PriorComponent>>(std::move(components));
  SupplementalPrior prior;
  prior.log_density = [shared](const Eigen::VectorXd& u, Hyper hyper) {
    require(u.size() == static_cast<Eigen::Index>(shared->size()), "supplemental vector has the wrong length");
    double lp = 0.0;
    for (std::size_t i = 0; i < shared->size(); ++i) {
      lp += component_log_pdf((*shared)[i], u[static_cast<Eigen::Index>(i)], hyper);
      if (lp == kNegInf) return kNegInf;
    }
    return lp;
  };
  prior.sample = [shared](Rng& rng, Hyper hyper) {
    Eigen::VectorXd u(static_cast<Eigen::Index>(shared->size()));
    for (std::size_t i = 0; i < shared->size(); ++i) {
      u[static_cast<Eigen::Index>(i)] = component_sample((*shared)[i], rng, hyper);
    }
    return u;
  };
  return prior;
}

Eigen::Index family_param_count(const FamilySpec& family) {
  return std::visit(Overloaded{
                        [](const BinomialFamily& f) { return static_cast<Eigen::Index>(f.priors.size()); },
                        [](const GaussianLinearFamily& f) { return f.config.design.n_coefficients() + 1; },
                        [](const LogisticFamily& f) { return f.config.design.n_coefficients(); },
                    },
                    family);
}

std::string family_name(const FamilySpec& family) {
  return std::visit(Overloaded{
                        [](const BinomialFamily&) { return std::string("binomial"); },
                        [](const GaussianLinearFamily&) { return std::string("gaussian_linear"); },
                        [](const LogisticFamily&) { return std::string("logistic_hierarchical"); },
                    },
                    family);
}

bool family_requires_hyper(const FamilySpec& family) { return std::holds_alternative<LogisticFamily>(family); }

std::vector<std::string> theta_names(const FamilySpec& family) {
  std::vector<std::string> names;
  const Eigen::Index n = family_param_count(family);
  if (std::holds_alternative<BinomialFamily>(family)) {
    for (Eigen::Index i = 0; i < n; ++i) names.push_back(fmt::format("p_{}", i + 1));
  } else if (std::holds_alternative<GaussianLinearFamily>(family)) {
    for (Eigen::Index i = 0; i + 1 < n; ++i) names.push_back(fmt::format("beta_{}", i));
    names.emplace_back("sigma2");
  } else {
    for (Eigen::Index i = 0; i < n; ++i) names.push_back(fmt::format("beta_{}", i));
  }
  return names;
}

Eigen::Index palette_dim(const std::vector<ModelDefinition>& definitions) {
  require(!definitions.empty(), "no model definitions");
  Eigen::Index d = 0;
  for (const ModelDefinition& def : definitions) d = std::max(d, family_param_count(def.family));
  return d;
}

namespace {

void bind_binomial(ModelSpec& spec, const BinomialFamily& family, const Dataset& data) {
  require(!family.priors.empty(), fmt::format("model '{}': binomial family needs at least one prior", spec.name));
  require(static_cast<Eigen::Index>(family.groups.size()) == data.rows(),
          fmt::format("model '{}': {} group labels for {} records", spec.name, family.groups.size(), data.rows()));
  for (Eigen::Index g : family.groups) {
    require(g >= 0 && g < static_cast<Eigen::Index>(family.priors.size()),
            fmt::format("model '{}': group label {} out of range", spec.name, g));
  }
  for (const BetaPrior& p : family.priors) require(p.a > 0.0 && p.b > 0.0, "beta prior parameters must be positive");

  const Eigen::VectorXd trials = data.covariate(family.trials_column);
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    require(data.response[i] >= 0.0 && data.response[i] <= trials[i],
            fmt::format("record {}: need 0 <= y <= N, got y={} N={}", i + 1, data.response[i], trials[i]));
  }

  auto priors = std::make_shared<const std::vector<BetaPrior>>(family.priors);
  spec.param_prior = [priors](const Eigen::VectorXd& theta, Hyper) {
    double lp = 0.0;
    for (std::size_t j = 0; j < priors->size(); ++j) {
      lp += dist::beta_log_pdf(theta[static_cast<Eigen::Index>(j)], (*priors)[j].a, (*priors)[j].b);
      if (lp == kNegInf) return kNegInf;
    }
    return lp;
  };
  auto groups = std::make_shared<const std::vector<Eigen::Index>>(family.groups);
  const Eigen::Index trials_col = data.covariate_index(family.trials_column);
  spec.log_likelihood = [groups, trials_col](const Eigen::VectorXd& theta, const Dataset& d) {
    require(d.rows() == static_cast<Eigen::Index>(groups->size()), "dataset size differs from the bound model");
    double ll = 0.0;
    for (Eigen::Index i = 0; i < d.rows(); ++i) {
      const double p = theta[(*groups)[static_cast<std::size_t>(i)]];
      if (!(p > 0.0 && p < 1.0)) return kNegInf;
      const double y = d.response[i];
      const double n = d.covariates(i, trials_col);
      ll += dist::log_binomial_coefficient(n, y) + y * std::log(p) + (n - y) * std::log1p(-p);
    }
    return ll;
  };
}

void bind_gaussian(ModelSpec& spec, const GaussianLinearFamily& family, const Dataset& data) {
  const ConjugateRegressionConfig& cfg = family.config;
  cfg.validate();
  const Eigen::Index p = cfg.design.n_coefficients();
  auto design = std::make_shared<const Eigen::MatrixXd>(cfg.design.design(data));
  auto cov_llt = std::make_shared<const Eigen::LLT<Eigen::MatrixXd>>(cfg.coef_prior_covariance);
  const Eigen::VectorXd mean = cfg.coef_prior_mean;
  const double shape = cfg.variance_prior_shape;
  const double scale = cfg.variance_prior_scale;

  spec.param_prior = [cov_llt, mean, shape, scale, p](const Eigen::VectorXd& theta, Hyper) {
    const double lv = dist::inverse_gamma_log_pdf(theta[p], shape, scale);
    if (lv == kNegInf) return kNegInf;
    return lv + dist::mvnormal_log_pdf(theta.head(p), mean, *cov_llt);
  };
  spec.log_likelihood = [design, p](const Eigen::VectorXd& theta, const Dataset& d) {
    require(d.rows() == design->rows(), "dataset size differs from the bound model");
    const double sigma2 = theta[p];
    if (!(sigma2 > 0.0)) return kNegInf;
    const double rss = (d.response - *design * theta.head(p)).squaredNorm();
    const auto n = static_cast<double>(d.rows());
    return -0.5 * n * std::log(2.0 * std::numbers::pi * sigma2) - 0.5 * rss / sigma2;
  };
}

void bind_logistic(ModelSpec& spec, const LogisticFamily& family, const Dataset& data) {
  const HierarchicalLogisticConfig& cfg = family.config;
  cfg.validate();
  auto design = std::make_shared<const Eigen::MatrixXd>(cfg.design.design(data));
  const double nk = cfg.precision_multiplier;
  const double shape = cfg.v_prior_shape;
  const double rate = cfg.v_prior_rate;
  spec.requires_hyper = true;
  spec.param_prior = [nk](const Eigen::VectorXd& theta, Hyper hyper) {
    const double v = hyper_value(hyper);
    const double sd = 1.0 / std::sqrt(nk * v);
    double lp = 0.0;
    for (Eigen::Index j = 0; j < theta.size(); ++j) lp += dist::normal_log_pdf(theta[j], 0.0, sd);
    return lp;
  };
  spec.hyper_log_prior = [shape, rate](double v) { return dist::gamma_log_pdf(v, shape, rate); };
  spec.log_likelihood = [design](const Eigen::VectorXd& theta, const Dataset& d) {
    require(d.rows() == design->rows(), "dataset size differs from the bound model");
    const Eigen::VectorXd eta = *design * theta;
    double ll = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
      const double e = eta[i];
      const double softplus = e > 0.0 ? e + std::log1p(std::exp(-e)) : std::log1p(std::exp(e));
      ll += d.response[i] * e - softplus;
    }
    return ll;
  };
}

}  // namespace

ModelSpec build_model(const ModelDefinition& definition, int id, Eigen::Index palette_dim, const Dataset& data) {
  ModelSpec spec;
  spec.id = id;
  spec.name = definition.name;
  spec.n_params = family_param_count(definition.family);
  spec.prior_weight = definition.prior_weight;
  require(spec.n_params <= palette_dim,
          fmt::format("model '{}' has {} parameters but the palette has dimension {}", spec.name, spec.n_params,
                      palette_dim));

  if (definition.bijection.size() == 0) {
    spec.bijection = std::make_shared<const LinearBijection>(LinearBijection::identity(palette_dim));
  } else {
    require(definition.bijection.rows() == palette_dim && definition.bijection.cols() == palette_dim,
            fmt::format("model '{}': bijection is {}x{}, palette dimension is {}", spec.name,
                        definition.bijection.rows(), definition.bijection.cols(), palette_dim));
    spec.bijection = std::make_shared<const LinearBijection>(definition.bijection);
  }

  const Eigen::Index n_supp = palette_dim - spec.n_params;
  require(static_cast<Eigen::Index>(definition.supplemental.size()) == n_supp,
          fmt::format("model '{}' needs {} supplemental prior components, got {}", spec.name, n_supp,
                      definition.supplemental.size()));
  spec.supplemental = make_supplemental_prior(definition.supplemental);

  std::visit(Overloaded{
                 [&](const BinomialFamily& f) { bind_binomial(spec, f, data); },
                 [&](const GaussianLinearFamily& f) { bind_gaussian(spec, f, data); },
                 [&](const LogisticFamily& f) { bind_logistic(spec, f, data); },
             },
             definition.family);
  for (const PriorComponent& c : definition.supplemental) {
    spec.requires_hyper = spec.requires_hyper || component_needs_hyper(c);
  }
  validate_model(spec);
  return spec;
}

ModelSet build_model_set(const std::vector<ModelDefinition>& definitions, const Dataset& data) {
  const Eigen::Index d = palette_dim(definitions);
  std::vector<ModelSpec> models;
  models.reserve(definitions.size());
  for (std::size_t k = 0; k < definitions.size(); ++k) {
    models.push_back(build_model(definitions[k], static_cast<int>(k) + 1, d, data));
  }
  return ModelSet(std::move(models));
}

ParameterChain sample_theta(const ModelDefinition& definition, const ModelSpec& model, const Dataset& data,
                            const Stage1Settings& settings, std::uint64_t seed) {
  require(settings.chains >= 1, "need at least one chain");
  require(settings.burnin >= 0 && settings.iters > settings.burnin, "iterations must exceed burn-in");
  const std::int64_t kept = settings.iters - settings.burnin;

  if (const auto* binomial = std::get_if<BinomialFamily>(&definition.family)) {
    // Conjugate: independent exact draws, as many as the chains would retain.
    const std::size_t n_groups = binomial->priors.size();
    std::vector<std::int64_t> successes(n_groups, 0);
    std::vector<std::int64_t> trials(n_groups, 0);
    const Eigen::VectorXd n = data.covariate(binomial->trials_column);
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
      const auto g = static_cast<std::size_t>(binomial->groups[static_cast<std::size_t>(i)]);
      successes[g] += std::llround(data.response[i]);
      trials[g] += std::llround(n[i]);
    }
    ParameterChain chain;
    chain.theta.resize(settings.chains * kept, static_cast<Eigen::Index>(n_groups));
    Rng rng = make_stream(seed, 0);
    for (Eigen::Index r = 0; r < chain.theta.rows(); ++r) {
      for (std::size_t g = 0; g < n_groups; ++g) {
        chain.theta(r, static_cast<Eigen::Index>(g)) =
            sample_beta_posterior(successes[g], trials[g], binomial->priors[g].a, binomial->priors[g].b, rng);
      }
    }
    return chain;
  }

  std::vector<ParameterChain> runs;
  for (std::int64_t c = 0; c < settings.chains; ++c) {
    Rng rng = make_stream(seed, static_cast<std::uint64_t>(c));
    if (const auto* gaussian = std::get_if<GaussianLinearFamily>(&definition.family)) {
      runs.push_back(gibbs_linear_regression(data, gaussian->config, settings.iters, settings.burnin, rng));
    } else {
      const auto& logistic = std::get<LogisticFamily>(definition.family);
      runs.push_back(mh_logistic_hierarchical(data, logistic.config, model, settings.iters, settings.burnin, rng));
    }
  }
  ParameterChain all;
  all.theta.resize(settings.chains * kept, model.n_params);
  if (runs.front().hyper) all.hyper = Eigen::VectorXd(settings.chains * kept);
  double acceptance = 0.0;
  for (std::size_t c = 0; c < runs.size(); ++c) {
    const auto offset = static_cast<Eigen::Index>(c) * kept;
    all.theta.middleRows(offset, kept) = runs[c].theta;
    if (all.hyper) all.hyper->segment(offset, kept) = *runs[c].hyper;
    if (runs[c].acceptance_rate) acceptance += *runs[c].acceptance_rate;
  }
  if (runs.front().acceptance_rate) all.acceptance_rate = acceptance / static_cast<double>(runs.size());
  return all;
}

SampleStore fit_model(const ModelDefinition& definition, const ModelSpec& model, const Dataset& data,
                      const Stage1Settings& settings, std::uint64_t seed) {
  ParameterChain chain;
  std::int64_t burnin = settings.burnin * settings.chains;
  if (definition.chain_path) {
    chain = load_chain_csv(*definition.chain_path, model.n_params);
    burnin = 0;
  } else {
    if (std::holds_alternative<BinomialFamily>(definition.family)) burnin = 0;
    chain = sample_theta(definition, model, data, settings, seed);
  }
  Rng rng = make_stream(seed, 0xFFFF);
  SampleStore store = build_psi_store(model, chain, rng);
  store.burnin_discarded = burnin;
  store.seed = seed;
  return store;
}

}  // namespace palette
