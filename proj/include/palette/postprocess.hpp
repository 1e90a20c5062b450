#pragma once

// Stage 2: posterior model probabilities from stored per-model palette draws.
//
// Method 1 runs a Gibbs chain over the model indicator, drawing the palette
// from the current model's store and the next model from the categorical full
// conditional. Method 2 averages the full conditional over each store to
// estimate the model-to-model transition matrix and solves for its
// stationary distribution.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "palette/model.hpp"
#include "palette/rng.hpp"
#include "palette/samplers.hpp"

namespace palette {

struct ProbabilityEstimate {
  Eigen::VectorXd probs;
  // Monte Carlo standard error per entry.
  Eigen::VectorXd mcse;
};

struct TransitionEstimate {
  // Row h: mean over draws from store h of Pr(M_k | psi, y).
  Eigen::MatrixXd matrix;
  std::vector<std::int64_t> counts;
  // Covariance of the per-draw probability vectors for each row.
  std::vector<Eigen::MatrixXd> row_covariances;
  // Covariance of each row mean, by batch means over contiguous store blocks
  // (includes the store's own sampling error). Preferred when present.
  std::vector<Eigen::MatrixXd> mean_covariances;

  void validate() const;
};

// Cumulative Rao-Blackwellized estimate after each iteration (burn-in included).
struct CumulativeTrace {
  int initial_model = 1;
  Eigen::MatrixXd cumulative;
};

struct PosteriorReport {
  std::vector<std::string> model_names;
  Eigen::VectorXd prior_weights_used;
  std::optional<ProbabilityEstimate> indicator;
  std::optional<ProbabilityEstimate> rao_blackwell;
  std::optional<ProbabilityEstimate> stationary;
  std::optional<TransitionEstimate> transition;
  // BF_jk = posterior odds / prior odds of model j against k; empty when a
  // model has zero estimated probability.
  Eigen::MatrixXd bayes_factors;
  // Estimates converted to another prior, e.g. after prior tuning.
  std::optional<Eigen::VectorXd> report_prior;
  std::optional<ProbabilityEstimate> reweighted;
  std::vector<CumulativeTrace> traces;
  std::uint64_t seed = 0;
  std::int64_t iterations = 0;
  std::int64_t burnin = 0;
  std::int64_t chains = 0;
  std::int64_t draws_per_model = 0;
  std::vector<std::string> diagnostics;

  // Method-1 estimate if present, otherwise Method 2.
  const ProbabilityEstimate& preferred() const;
  std::int64_t post_burnin_iterations() const { return iterations - burnin; }
};

struct Method1Options {
  std::int64_t iterations = 100000;
  // Defaults to half the iterations.
  std::optional<std::int64_t> burnin;
  // 1-based.
  int initial_model = 1;
  std::int64_t batches = 20;

  std::int64_t effective_burnin() const { return burnin.value_or(iterations / 2); }
};

// Checks one nonempty store per model with matching palette dimension and
// hyperparameter columns where the models need them.
void validate_stores(const std::vector<SampleStore>& stores, const ModelSet& models);

// A single Method-1 chain.
PosteriorReport method1_chain(const std::vector<SampleStore>& stores, const ModelSet& models, const Dataset& data,
                              const Method1Options& options, Rng& rng);

// Independent Method-1 chains (one per initial model) run concurrently on
// streams derived from `seed`, then pooled.
PosteriorReport method1_replicates(const std::vector<SampleStore>& stores, const ModelSet& models,
                                   const Dataset& data, const Method1Options& options,
                                   const std::vector<int>& initial_models, std::uint64_t seed);

// Rows are estimated independently, each on its own stream seeded from `rng`.
TransitionEstimate method2_transition(const std::vector<SampleStore>& stores, const ModelSet& models,
                                      const Dataset& data, std::int64_t draws_per_model, Rng& rng);

// pi with pi P = pi, sum(pi) = 1. Throws DegenerateError when P is reducible.
Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& transition);

// Delta-method standard errors of the stationary distribution of an
// estimated transition matrix.
Eigen::VectorXd stationary_standard_errors(const TransitionEstimate& estimate, const Eigen::VectorXd& stationary);

Eigen::MatrixXd bayes_factor_matrix(const Eigen::VectorXd& posterior, const Eigen::VectorXd& prior);

Eigen::VectorXd reweight_under_prior(const Eigen::VectorXd& probs, const Eigen::VectorXd& old_prior,
                                     const Eigen::VectorXd& new_prior);

// Standard errors carried through reweight_under_prior to first order.
Eigen::VectorXd reweight_standard_errors(const ProbabilityEstimate& estimate, const Eigen::VectorXd& old_prior,
                                         const Eigen::VectorXd& new_prior);

struct TunedPriors {
  Eigen::VectorXd weights;
  bool converged = false;
  Eigen::VectorXd visit_frequencies;
  int rounds_used = 0;
};

// Adjusts prior model weights so that a Method-1 chain visits models in the
// target proportions (within 0.1). Each round shifts log weights by
// log(target) - log(estimate), clamped to +-5.
TunedPriors tune_model_priors(const std::vector<SampleStore>& stores, const ModelSet& models, const Dataset& data,
                              const Eigen::VectorXd& target, int rounds, std::int64_t iters_per_round, Rng& rng);

// Fills bayes_factors (and the never-visited diagnostics) from the preferred estimate.
void finalize_report(PosteriorReport& report);

}  // namespace palette
