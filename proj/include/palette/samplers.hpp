#pragma once

// Stage 1: per-model posterior samplers and conversion of their output into
// stored palette draws.

#include <cstdint>
#include <optional>
#include <string>

#include <Eigen/Dense>

#include "palette/design.hpp"
#include "palette/model.hpp"
#include "palette/rng.hpp"

namespace palette {

// Draws of theta (one row each), optionally with the shared hyperparameter.
struct ParameterChain {
  Eigen::MatrixXd theta;
  std::optional<Eigen::VectorXd> hyper;
  // Metropolis acceptance rate over retained iterations, for samplers that have one.
  std::optional<double> acceptance_rate;

  Eigen::Index draws() const { return theta.rows(); }
};

// Stored palette draws for one model, representing [psi | y, M_k].
struct SampleStore {
  int model_id = 1;
  std::string model_name;
  Eigen::MatrixXd psi_draws;
  std::optional<Eigen::VectorXd> hyper_draws;
  std::int64_t burnin_discarded = 0;
  std::uint64_t seed = 0;

  Eigen::Index draws() const { return psi_draws.rows(); }
  Eigen::Index dim() const { return psi_draws.cols(); }
  Palette palette(Eigen::Index row) const { return Palette(psi_draws.row(row).transpose()); }
  Hyper hyper(Eigen::Index row) const {
    return hyper_draws ? Hyper((*hyper_draws)[row]) : std::nullopt;
  }
  // Throws ContractViolation on empty stores, ragged hyper column or non-finite entries.
  void validate() const;
};

struct ConjugateRegressionConfig {
  LinearPredictor design;
  Eigen::VectorXd coef_prior_mean;
  Eigen::MatrixXd coef_prior_covariance;
  // Inverse gamma on sigma^2: density ∝ s^-(a+1) exp(-b/s).
  double variance_prior_shape = 3.0;
  double variance_prior_scale = 180000.0;

  void validate() const;
};

struct HierarchicalLogisticConfig {
  LinearPredictor design;
  // beta_j | V ~ N(0, (precision_multiplier * V)^-1)
  double precision_multiplier = 1.0;
  // V ~ Gamma(shape, rate)
  double v_prior_shape = 3.29;
  double v_prior_rate = 7.80;
  double proposal_scale = 0.2;

  void validate() const;
};

// Draw from Be(successes + alpha, trials - successes + beta).
double sample_beta_posterior(std::int64_t successes, std::int64_t trials, double alpha, double beta, Rng& rng);

// Two-block Gibbs sampler for y = X b + e, e ~ N(0, sigma^2 I), b ~ N(m0, S0),
// sigma^2 ~ IG(a, b). Rows of the result are (b, sigma^2); the first `burnin`
// iterations are discarded.
ParameterChain gibbs_linear_regression(const Dataset& data, const ConjugateRegressionConfig& config,
                                       std::int64_t iters, std::int64_t burnin, Rng& rng);

// Metropolis-within-Gibbs for Bernoulli-logit regression with
// beta_j | V ~ N(0, (n V)^-1) and V ~ Ga(shape, rate). Coefficients use
// componentwise Gaussian random-walk proposals, V its conjugate Gamma update.
ParameterChain mh_logistic_hierarchical(const Dataset& data, const HierarchicalLogisticConfig& config,
                                        const ModelSpec& model, std::int64_t iters, std::int64_t burnin,
                                        Rng& rng);

// V | beta ~ Ga(shape + m/2, rate + n * |beta|^2 / 2), m = length(beta).
double sample_precision_full_conditional(const Eigen::VectorXd& beta, const HierarchicalLogisticConfig& config,
                                         Rng& rng);

// Acceptance probability for a symmetric-proposal Metropolis step.
double metropolis_accept_prob(double log_target_current, double log_target_proposed);

// Independent draw from [u | M_k] (conditioned on the hyperparameter when
// the prior depends on it). Empty when the model fills the palette.
Eigen::VectorXd sample_supplemental(const ModelSpec& model, Hyper hyper, Rng& rng);

// Attach a fresh supplemental draw to every theta row and map (theta, u) back
// to the palette.
SampleStore build_psi_store(const ModelSpec& model, const ParameterChain& chain, Rng& rng);

}  // namespace palette
