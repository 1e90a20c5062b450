#pragma once

// Palette, per-model specifications, and the categorical full conditional
// over models.

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "palette/bijection.hpp"
#include "palette/rng.hpp"

namespace palette {

// Universal parameter vector shared by every model in a set.
class Palette {
 public:
  explicit Palette(Eigen::VectorXd values);

  Eigen::Index dim() const { return values_.size(); }
  const Eigen::VectorXd& values() const { return values_; }
  double operator[](Eigen::Index i) const { return values_[i]; }

 private:
  Eigen::VectorXd values_;
};

// Responses plus named covariate columns (one row per record).
struct Dataset {
  std::string response_name = "y";
  Eigen::VectorXd response;
  std::vector<std::string> covariate_names;
  Eigen::MatrixXd covariates;

  Eigen::Index rows() const { return response.size(); }
  // Index of a covariate column; throws ContractViolation naming the column.
  Eigen::Index covariate_index(std::string_view name) const;
  Eigen::VectorXd covariate(std::string_view name) const { return covariates.col(covariate_index(name)); }
};

// Shared hyperparameter carried next to the palette (e.g. a prior precision).
using Hyper = std::optional<double>;

using LogDensityFn = std::function<double(const Eigen::VectorXd&, Hyper)>;
using LogLikelihoodFn = std::function<double(const Eigen::VectorXd& theta, const Dataset&)>;
using SupplementalSampler = std::function<Eigen::VectorXd(Rng&, Hyper)>;

struct SupplementalPrior {
  LogDensityFn log_density;
  SupplementalSampler sample;
};

// One model of the set. `bijection` maps psi to (theta, u); theta occupies
// the first n_params coordinates of the image.
struct ModelSpec {
  int id = 1;
  std::string name;
  Eigen::Index n_params = 0;
  std::shared_ptr<const Bijection> bijection;
  LogDensityFn param_prior;
  SupplementalPrior supplemental;
  LogLikelihoodFn log_likelihood;
  double prior_weight = 1.0;
  // Set when the priors are conditioned on a shared hyperparameter.
  bool requires_hyper = false;
  // Log prior of the hyperparameter under this model; empty means constant.
  std::function<double(double)> hyper_log_prior;

  Eigen::Index palette_dim() const { return bijection->dim(); }
  Eigen::Index supplemental_dim() const { return palette_dim() - n_params; }
};

// Checks the structural invariants of a single model (dimensions, weight range, callables present).
void validate_model(const ModelSpec& model);

// A validated collection of models sharing one palette dimension, with prior
// weights summing to one.
class ModelSet {
 public:
  // Throws ContractViolation if dimensions differ, weights are outside (0,1],
  // or weights do not sum to one within 1e-12.
  explicit ModelSet(std::vector<ModelSpec> models);

  std::size_t size() const { return models_.size(); }
  Eigen::Index palette_dim() const { return models_.front().palette_dim(); }
  bool requires_hyper() const { return requires_hyper_; }
  const ModelSpec& operator[](std::size_t k) const { return models_[k]; }
  const std::vector<ModelSpec>& models() const { return models_; }
  Eigen::VectorXd prior_weights() const;
  std::vector<std::string> names() const;

  // Same models with different prior weights (renormalized).
  ModelSet with_weights(const Eigen::VectorXd& weights) const;

 private:
  std::vector<ModelSpec> models_;
  bool requires_hyper_ = false;
};

// Scales positive weights to sum to one. Throws on non-positive entries.
Eigen::VectorXd normalize_weights(const Eigen::VectorXd& weights);

struct ExtendedParameters {
  Eigen::VectorXd theta;
  Eigen::VectorXd u;
};

ExtendedParameters apply_bijection(const ModelSpec& model, const Palette& psi);
Palette invert_bijection(const ModelSpec& model, const Eigen::VectorXd& theta, const Eigen::VectorXd& u);

// log [psi | M_k] = log f_k(g_k(psi)) + log|dg_k/dpsi| (+ the hyperparameter's
// log prior when present). Returns -inf when psi maps outside the support.
double log_psi_prior(const ModelSpec& model, const Palette& psi, Hyper hyper);

// log [y | psi, M_k] + log [psi | M_k] + log Pr(M_k).
double log_model_weight(const ModelSpec& model, const Palette& psi, const Dataset& data, Hyper hyper);

// Pr(M_k | psi, y) for every model, normalized in log domain. Prior weights
// enter only through their ratios. Throws DegenerateError if every model has
// zero weight at psi.
Eigen::VectorXd full_conditional_model_probs(const Palette& psi, const ModelSet& models,
                                             const Dataset& data, Hyper hyper);
Eigen::VectorXd full_conditional_model_probs(const Palette& psi, std::span<const ModelSpec> models,
                                             const Dataset& data, Hyper hyper);

}  // namespace palette
