#include "palette/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "palette/densities.hpp"
#include "palette/error.hpp"

namespace palette {

void SampleStore::validate() const {
  require(psi_draws.rows() >= 1, fmt::format("store for model '{}' is empty", model_name));
  require(psi_draws.allFinite(), fmt::format("store for model '{}' has non-finite palette draws", model_name));
  if (hyper_draws) {
    require(hyper_draws->size() == psi_draws.rows(),
            fmt::format("store for model '{}': {} hyperparameter draws for {} palette rows", model_name,
                        hyper_draws->size(), psi_draws.rows()));
    require(hyper_draws->allFinite(), fmt::format("store for model '{}' has non-finite hyperparameter draws", model_name));
  }
}

void ConjugateRegressionConfig::validate() const {
  const Eigen::Index p = design.n_coefficients();
  require(coef_prior_mean.size() == p,
          fmt::format("regression prior mean has length {}, design has {} coefficients", coef_prior_mean.size(), p));
  require(coef_prior_covariance.rows() == p && coef_prior_covariance.cols() == p,
          "regression prior covariance does not match the design");
  Eigen::LLT<Eigen::MatrixXd> llt(coef_prior_covariance);
  require(llt.info() == Eigen::Success, "regression prior covariance is not positive definite");
  require(variance_prior_shape > 0.0 && variance_prior_scale > 0.0,
          "inverse gamma shape and scale must be positive");
}

void HierarchicalLogisticConfig::validate() const {
  require(precision_multiplier >= 1.0, "precision multiplier must be at least 1");
  require(v_prior_shape > 0.0 && v_prior_rate > 0.0, "V prior shape and rate must be positive");
  require(proposal_scale > 0.0, "proposal scale must be positive");
}

double sample_beta_posterior(std::int64_t successes, std::int64_t trials, double alpha, double beta, Rng& rng) {
  require(successes >= 0 && successes <= trials,
          fmt::format("invalid binomial counts: {} successes in {} trials", successes, trials));
  require(alpha > 0.0 && beta > 0.0, "beta prior parameters must be positive");
  return dist::sample_beta(rng, static_cast<double>(successes) + alpha,
                           static_cast<double>(trials - successes) + beta);
}

ParameterChain gibbs_linear_regression(const Dataset& data, const ConjugateRegressionConfig& config,
                                       std::int64_t iters, std::int64_t burnin, Rng& rng) {
  config.validate();
  require(burnin >= 0 && iters > burnin, "iterations must exceed burn-in");
  require(data.rows() >= 2, "regression needs at least two records");

  const Eigen::MatrixXd x = config.design.design(data);
  const Eigen::VectorXd& y = data.response;
  const auto n = static_cast<double>(data.rows());
  const Eigen::Index p = x.cols();

  const Eigen::MatrixXd prior_precision = config.coef_prior_covariance.inverse();
  const Eigen::VectorXd prior_shift = prior_precision * config.coef_prior_mean;
  const Eigen::MatrixXd xtx = x.transpose() * x;
  const Eigen::VectorXd xty = x.transpose() * y;
  const double post_shape = config.variance_prior_shape + 0.5 * n;

  ParameterChain chain;
  chain.theta.resize(iters - burnin, p + 1);

  double sigma2 = std::max((y.array() - y.mean()).square().sum() / (n - 1.0), 1e-12);
  for (std::int64_t it = 0; it < iters; ++it) {
    const Eigen::MatrixXd precision = prior_precision + xtx / sigma2;
    Eigen::LLT<Eigen::MatrixXd> llt(precision);
    if (llt.info() != Eigen::Success) throw DegenerateError("regression posterior precision is singular");
    const Eigen::VectorXd mean = llt.solve(prior_shift + xty / sigma2);
    const Eigen::VectorXd coef = dist::sample_mvnormal_precision(rng, mean, llt);

    const double rss = (y - x * coef).squaredNorm();
    sigma2 = dist::sample_inverse_gamma(rng, post_shape, config.variance_prior_scale + 0.5 * rss);

    if (it >= burnin) {
      auto row = chain.theta.row(it - burnin);
      row.head(p) = coef.transpose();
      row[p] = sigma2;
    }
  }
  return chain;
}

double sample_precision_full_conditional(const Eigen::VectorXd& beta, const HierarchicalLogisticConfig& config,
                                         Rng& rng) {
  return dist::sample_gamma(rng, config.v_prior_shape + 0.5 * static_cast<double>(beta.size()),
                            config.v_prior_rate + 0.5 * config.precision_multiplier * beta.squaredNorm());
}

double metropolis_accept_prob(double log_target_current, double log_target_proposed) {
  if (log_target_proposed == -std::numeric_limits<double>::infinity()) return 0.0;
  const double log_ratio = log_target_proposed - log_target_current;
  return log_ratio >= 0.0 ? 1.0 : std::exp(log_ratio);
}

namespace {

double bernoulli_logit_loglik(const Eigen::VectorXd& eta, const Eigen::VectorXd& y) {
  // y log p + (1-y) log(1-p) = y eta - log(1 + e^eta)
  double ll = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    const double e = eta[i];
    const double softplus = e > 0.0 ? e + std::log1p(std::exp(-e)) : std::log1p(std::exp(e));
    ll += y[i] * e - softplus;
  }
  return ll;
}

}  // namespace

ParameterChain mh_logistic_hierarchical(const Dataset& data, const HierarchicalLogisticConfig& config,
                                        const ModelSpec& model, std::int64_t iters, std::int64_t burnin,
                                        Rng& rng) {
  config.validate();
  require(burnin >= 0 && iters > burnin, "iterations must exceed burn-in");
  require(data.rows() >= 1, "logistic regression needs at least one record");
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    require(data.response[i] == 0.0 || data.response[i] == 1.0,
            fmt::format("logistic response must be binary; record {} has {}", i + 1, data.response[i]));
  }
  const Eigen::MatrixXd x = config.design.design(data);
  const Eigen::Index m = x.cols();
  require(m == model.n_params,
          fmt::format("model '{}' has {} parameters but the design has {} coefficients", model.name,
                      model.n_params, m));
  const Eigen::VectorXd& y = data.response;
  const double nk = config.precision_multiplier;

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(m);
  double v = config.v_prior_shape / config.v_prior_rate;
  Eigen::VectorXd eta = Eigen::VectorXd::Zero(data.rows());
  double loglik = bernoulli_logit_loglik(eta, y);

  ParameterChain chain;
  chain.theta.resize(iters - burnin, m);
  chain.hyper = Eigen::VectorXd(iters - burnin);
  std::int64_t accepted = 0;

  for (std::int64_t it = 0; it < iters; ++it) {
    const double sd = std::sqrt(1.0 / (nk * v));
    for (Eigen::Index j = 0; j < m; ++j) {
      const double step = dist::sample_normal(rng, 0.0, config.proposal_scale);
      const double proposed = beta[j] + step;
      const Eigen::VectorXd eta_new = eta + step * x.col(j);
      const double loglik_new = bernoulli_logit_loglik(eta_new, y);
      const double current = loglik + dist::normal_log_pdf(beta[j], 0.0, sd);
      const double candidate = loglik_new + dist::normal_log_pdf(proposed, 0.0, sd);
      if (dist::sample_uniform(rng) < metropolis_accept_prob(current, candidate)) {
        beta[j] = proposed;
        eta = eta_new;
        loglik = loglik_new;
        if (it >= burnin) ++accepted;
      }
    }
    v = sample_precision_full_conditional(beta, config, rng);
    if (it >= burnin) {
      chain.theta.row(it - burnin) = beta.transpose();
      (*chain.hyper)[it - burnin] = v;
    }
  }
  chain.acceptance_rate = static_cast<double>(accepted) / static_cast<double>((iters - burnin) * m);
  return chain;
}

Eigen::VectorXd sample_supplemental(const ModelSpec& model, Hyper hyper, Rng& rng) {
  if (model.supplemental_dim() == 0) return Eigen::VectorXd(0);
  Eigen::VectorXd u = model.supplemental.sample(rng, hyper);
  require(u.size() == model.supplemental_dim(),
          fmt::format("model '{}': supplemental sampler returned {} values, expected {}", model.name, u.size(),
                      model.supplemental_dim()));
  return u;
}

SampleStore build_psi_store(const ModelSpec& model, const ParameterChain& chain, Rng& rng) {
  require(chain.draws() >= 1, fmt::format("model '{}': empty parameter chain", model.name));
  require(chain.theta.cols() == model.n_params,
          fmt::format("model '{}': chain has {} columns, expected {}", model.name, chain.theta.cols(),
                      model.n_params));
  if (chain.hyper) require(chain.hyper->size() == chain.draws(), "hyperparameter column length differs from chain");
  require(!model.requires_hyper || chain.hyper.has_value(),
          fmt::format("model '{}' requires a hyperparameter column", model.name));

  SampleStore store;
  store.model_id = model.id;
  store.model_name = model.name;
  store.psi_draws.resize(chain.draws(), model.palette_dim());
  store.hyper_draws = chain.hyper;
  for (Eigen::Index r = 0; r < chain.draws(); ++r) {
    const Hyper hyper = chain.hyper ? Hyper((*chain.hyper)[r]) : std::nullopt;
    const Eigen::VectorXd theta = chain.theta.row(r).transpose();
    const Eigen::VectorXd u = sample_supplemental(model, hyper, rng);
    store.psi_draws.row(r) = invert_bijection(model, theta, u).values().transpose();
  }
  store.validate();
  return store;
}

}  // namespace palette
