#pragma once

// The shipped model families and their Stage-1 drivers. A ModelDefinition is
// the declarative form read from a run configuration; build_model turns it
// into a ModelSpec bound to a dataset.

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "palette/model.hpp"
#include "palette/samplers.hpp"

namespace palette {

struct BetaPrior {
  double a = 1.0;
  double b = 1.0;
};
struct NormalPrior {
  double mean = 0.0;
  double sd = 1.0;
};
// N(0, (multiplier * V)^-1) with V the shared hyperparameter.
struct ScaledPrecisionNormalPrior {
  double multiplier = 1.0;
};
using PriorComponent = std::variant<BetaPrior, NormalPrior, ScaledPrecisionNormalPrior>;

double component_log_pdf(const PriorComponent& component, double x, Hyper hyper);
double component_sample(const PriorComponent& component, Rng& rng, Hyper hyper);
bool component_needs_hyper(const PriorComponent& component);

// Product of independent components.
SupplementalPrior make_supplemental_prior(std::vector<PriorComponent> components);

// Binomial counts; record i has success probability theta[groups[i]].
struct BinomialFamily {
  std::string trials_column = "N";
  std::vector<Eigen::Index> groups;
  // One Beta prior per theta coordinate.
  std::vector<BetaPrior> priors;
};

// theta = (coefficients, sigma^2).
struct GaussianLinearFamily {
  ConjugateRegressionConfig config;
};

// theta = coefficients; hyperparameter V.
struct LogisticFamily {
  HierarchicalLogisticConfig config;
};

using FamilySpec = std::variant<BinomialFamily, GaussianLinearFamily, LogisticFamily>;

struct ModelDefinition {
  std::string name;
  FamilySpec family;
  // Rows of the bijection matrix; empty means identity.
  Eigen::MatrixXd bijection;
  std::vector<PriorComponent> supplemental;
  double prior_weight = 1.0;
  // Externally produced theta chain (CSV) used instead of the built-in sampler.
  std::optional<std::string> chain_path;
};

Eigen::Index family_param_count(const FamilySpec& family);
std::string family_name(const FamilySpec& family);
bool family_requires_hyper(const FamilySpec& family);
// Column names for theta in chain files.
std::vector<std::string> theta_names(const FamilySpec& family);

// Palette dimension of a definition set: max number of parameters.
Eigen::Index palette_dim(const std::vector<ModelDefinition>& definitions);

ModelSpec build_model(const ModelDefinition& definition, int id, Eigen::Index palette_dim, const Dataset& data);
ModelSet build_model_set(const std::vector<ModelDefinition>& definitions, const Dataset& data);

struct Stage1Settings {
  std::int64_t chains = 3;
  std::int64_t iters = 60000;
  std::int64_t burnin = 10000;
};

// Runs the family's built-in sampler (chains concatenated) and returns theta draws.
ParameterChain sample_theta(const ModelDefinition& definition, const ModelSpec& model, const Dataset& data,
                            const Stage1Settings& settings, std::uint64_t seed);

// sample_theta (or the external chain) followed by build_psi_store.
SampleStore fit_model(const ModelDefinition& definition, const ModelSpec& model, const Dataset& data,
                      const Stage1Settings& settings, std::uint64_t seed);

}  // namespace palette
