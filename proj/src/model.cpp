#include "palette/model.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "palette/error.hpp"
#include "palette/log_sum_exp.hpp"

namespace palette {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

Palette::Palette(Eigen::VectorXd values) : values_(std::move(values)) {
  require(values_.size() > 0, "palette must have positive dimension");
}

Eigen::Index Dataset::covariate_index(std::string_view name) const {
  for (std::size_t i = 0; i < covariate_names.size(); ++i) {
    if (covariate_names[i] == name) return static_cast<Eigen::Index>(i);
  }
  throw ContractViolation(fmt::format("dataset has no column '{}'", name));
}

void validate_model(const ModelSpec& model) {
  require(model.bijection != nullptr, fmt::format("model '{}' has no bijection", model.name));
  require(model.n_params >= 1 && model.n_params <= model.palette_dim(),
          fmt::format("model '{}': n_params {} must lie in 1..{}", model.name, model.n_params,
                      model.palette_dim()));
  require(static_cast<bool>(model.param_prior), fmt::format("model '{}' has no parameter prior", model.name));
  require(static_cast<bool>(model.log_likelihood), fmt::format("model '{}' has no likelihood", model.name));
  if (model.supplemental_dim() > 0) {
    require(model.supplemental.log_density && model.supplemental.sample,
            fmt::format("model '{}' needs a supplemental prior for {} coordinates", model.name,
                        model.supplemental_dim()));
  }
  require(model.prior_weight > 0.0 && model.prior_weight <= 1.0,
          fmt::format("model '{}': prior weight {} outside (0,1]", model.name, model.prior_weight));
}

ModelSet::ModelSet(std::vector<ModelSpec> models) : models_(std::move(models)) {
  require(!models_.empty(), "model set is empty");
  double total = 0.0;
  for (const ModelSpec& m : models_) {
    validate_model(m);
    require(m.palette_dim() == models_.front().palette_dim(),
            fmt::format("model '{}' has palette dimension {}, expected {}", m.name, m.palette_dim(),
                        models_.front().palette_dim()));
    total += m.prior_weight;
    requires_hyper_ = requires_hyper_ || m.requires_hyper;
  }
  require(std::abs(total - 1.0) <= 1e-12, fmt::format("prior weights sum to {:.15g}, not 1", total));
}

Eigen::VectorXd ModelSet::prior_weights() const {
  Eigen::VectorXd w(static_cast<Eigen::Index>(models_.size()));
  for (std::size_t k = 0; k < models_.size(); ++k) w[static_cast<Eigen::Index>(k)] = models_[k].prior_weight;
  return w;
}

std::vector<std::string> ModelSet::names() const {
  std::vector<std::string> out;
  out.reserve(models_.size());
  for (const ModelSpec& m : models_) out.push_back(m.name);
  return out;
}

ModelSet ModelSet::with_weights(const Eigen::VectorXd& weights) const {
  require(weights.size() == static_cast<Eigen::Index>(models_.size()), "weight vector length differs from model count");
  const Eigen::VectorXd w = normalize_weights(weights);
  std::vector<ModelSpec> copy = models_;
  for (std::size_t k = 0; k < copy.size(); ++k) copy[k].prior_weight = w[static_cast<Eigen::Index>(k)];
  return ModelSet(std::move(copy));
}

Eigen::VectorXd normalize_weights(const Eigen::VectorXd& weights) {
  require(weights.size() > 0, "empty weight vector");
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    require(std::isfinite(weights[i]) && weights[i] > 0.0, "weights must be finite and positive");
  }
  return weights / weights.sum();
}

ExtendedParameters apply_bijection(const ModelSpec& model, const Palette& psi) {
  require(psi.dim() == model.palette_dim(),
          fmt::format("model '{}': palette has dimension {}, expected {}", model.name, psi.dim(),
                      model.palette_dim()));
  const Eigen::VectorXd extended = model.bijection->apply(psi.values());
  return {extended.head(model.n_params), extended.tail(model.supplemental_dim())};
}

Palette invert_bijection(const ModelSpec& model, const Eigen::VectorXd& theta, const Eigen::VectorXd& u) {
  require(theta.size() == model.n_params,
          fmt::format("model '{}': theta has length {}, expected {}", model.name, theta.size(), model.n_params));
  require(u.size() == model.supplemental_dim(),
          fmt::format("model '{}': u has length {}, expected {}", model.name, u.size(), model.supplemental_dim()));
  Eigen::VectorXd extended(model.palette_dim());
  extended << theta, u;
  return Palette(model.bijection->invert(extended));
}

namespace {

double log_psi_prior_at(const ModelSpec& model, const Palette& psi, const ExtendedParameters& ext, Hyper hyper) {
  double lp = model.param_prior(ext.theta, hyper);
  if (lp == kNegInf) return kNegInf;
  if (ext.u.size() > 0) {
    lp += model.supplemental.log_density(ext.u, hyper);
    if (lp == kNegInf) return kNegInf;
  }
  if (hyper && model.hyper_log_prior) lp += model.hyper_log_prior(*hyper);
  return lp + model.bijection->log_abs_jacobian(psi.values());
}

}  // namespace

double log_psi_prior(const ModelSpec& model, const Palette& psi, Hyper hyper) {
  require(!model.requires_hyper || hyper.has_value(),
          fmt::format("model '{}' requires a hyperparameter value", model.name));
  return log_psi_prior_at(model, psi, apply_bijection(model, psi), hyper);
}

double log_model_weight(const ModelSpec& model, const Palette& psi, const Dataset& data, Hyper hyper) {
  require(!model.requires_hyper || hyper.has_value(),
          fmt::format("model '{}' requires a hyperparameter value", model.name));
  const ExtendedParameters ext = apply_bijection(model, psi);
  const double lp = log_psi_prior_at(model, psi, ext, hyper);
  if (lp == kNegInf) return kNegInf;
  const double ll = model.log_likelihood(ext.theta, data);
  if (std::isnan(ll) || std::isnan(lp)) {
    throw DegenerateError(fmt::format("model '{}': NaN log density at palette point", model.name));
  }
  return ll + lp + std::log(model.prior_weight);
}

Eigen::VectorXd full_conditional_model_probs(const Palette& psi, std::span<const ModelSpec> models,
                                             const Dataset& data, Hyper hyper) {
  require(!models.empty(), "no models supplied");
  Eigen::VectorXd log_w(static_cast<Eigen::Index>(models.size()));
  for (std::size_t k = 0; k < models.size(); ++k) {
    log_w[static_cast<Eigen::Index>(k)] = log_model_weight(models[k], psi, data, hyper);
  }
  if ((log_w.array() == kNegInf).all()) {
    throw DegenerateError("degenerate palette point: every model has zero density");
  }
  return softmax(log_w);
}

Eigen::VectorXd full_conditional_model_probs(const Palette& psi, const ModelSet& models,
                                             const Dataset& data, Hyper hyper) {
  return full_conditional_model_probs(psi, std::span<const ModelSpec>(models.models()), data, hyper);
}

}  // namespace palette
