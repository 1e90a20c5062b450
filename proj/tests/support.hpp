#pragma once

// Shared fixtures for the test binaries: the embedded binomial problem, a
// random two-model regression generator and an independent marginal
// likelihood for conjugate regression.

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "palette/config.hpp"
#include "palette/families.hpp"
#include "palette/model.hpp"
#include "palette/pipeline.hpp"
#include "palette/rng.hpp"
#include "palette/samplers.hpp"

namespace testing {

struct Problem {
  palette::RunConfig config;
  palette::Dataset data;
  palette::ModelSet models;
  std::vector<palette::SampleStore> stores;
};

inline Problem fit_problem(palette::RunConfig config, palette::Dataset data) {
  palette::ModelSet models = palette::build_model_set(config.models, data);
  std::vector<palette::SampleStore> stores = palette::run_stage1(config, models, data);
  return Problem{std::move(config), std::move(data), std::move(models), std::move(stores)};
}

inline Problem binomial_problem(std::uint64_t seed = 20240607) {
  palette::RunConfig config = palette::example_config("binomial");
  config.seed = seed;
  return fit_problem(config, palette::load_run_dataset(config.data));
}

// Pr(M2 | y) for the binomial example in closed form: Beta-binomial
// marginals (binomial coefficients cancel).
inline double binomial_exact_p2() {
  auto lbeta = [](double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); };
  const double m1 = lbeta(9, 13) + lbeta(17, 15);  // separate p1, p2 under Be(1,1)
  const double m2 = lbeta(25, 27);                  // common p
  return 1.0 / (1.0 + std::exp(m1 - m2));
}

// log ∫∫ N(y; Xb, s I) N(b; m0, S0) IG(s; a, scale) db ds.
// Coefficients integrate analytically: y | s ~ N(X m0, s I + X S0 X'). With
// X S0 X' = Q diag(lam) Q' the density is a product over eigen-directions,
// leaving a smooth 1-D integral over t = log s done by Gauss-Kronrod.
inline double regression_log_marginal(const Eigen::VectorXd& y, const Eigen::MatrixXd& x, const Eigen::VectorXd& m0,
                                      const Eigen::MatrixXd& s0, double a, double scale) {
  const Eigen::Index n = y.size();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(x * s0 * x.transpose());
  const Eigen::VectorXd lam = eig.eigenvalues().cwiseMax(0.0);
  const Eigen::VectorXd r = eig.eigenvectors().transpose() * (y - x * m0);
  const double log2pi = std::log(2.0 * M_PI);

  // log of integrand in t (includes ds = s dt)
  auto log_f = [&](double t) {
    const double s = std::exp(t);
    double v = -0.5 * static_cast<double>(n) * log2pi;
    for (Eigen::Index i = 0; i < n; ++i) {
      v -= 0.5 * std::log(s + lam[i]) + 0.5 * r[i] * r[i] / (s + lam[i]);
    }
    v += a * std::log(scale) - std::lgamma(a) - (a + 1.0) * t - scale / s;
    return v + t;
  };
  double t_max = 0.0;
  double f_max = -std::numeric_limits<double>::infinity();
  for (double t = -30.0; t <= 30.0; t += 0.01) {
    const double v = log_f(t);
    if (v > f_max) {
      f_max = v;
      t_max = t;
    }
  }
  auto f = [&](double t) { return std::exp(log_f(t) - f_max); };
  const double integral =
      boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, t_max - 25.0, t_max + 25.0, 15, 1e-13);
  return f_max + std::log(integral);
}

// Two straight-line regressions of y on x or on z, identity bijections, equal
// prior weights, unit-information style priors. Data drawn so that neither
// model dominates too strongly.
inline palette::RunConfig regression_pair_config(std::uint64_t seed) {
  palette::RunConfig config;
  config.seed = seed;
  config.data.schema = palette::DatasetSchema{"y", {"x", "z"}, palette::ResponseKind::Real, ""};
  for (const char* column : {"x", "z"}) {
    palette::ModelDefinition m;
    m.name = std::string("on_") + column;
    palette::GaussianLinearFamily f;
    f.config.design.terms = {{column}};
    f.config.coef_prior_mean = Eigen::Vector2d(0.0, 0.0);
    f.config.coef_prior_covariance = Eigen::Vector2d(4.0, 4.0).asDiagonal();
    f.config.variance_prior_shape = 3.0;
    f.config.variance_prior_scale = 2.0;
    m.family = f;
    m.prior_weight = 0.5;
    config.models.push_back(m);
  }
  return config;
}

inline palette::Dataset random_regression_data(palette::Rng& rng, Eigen::Index n) {
  std::normal_distribution<double> z01(0.0, 1.0);
  palette::Dataset data;
  data.covariate_names = {"x", "z"};
  data.covariates.resize(n, 2);
  data.response.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = z01(rng);
    // z correlated with x so the two explanations compete
    const double z = 0.7 * x + 0.7 * z01(rng);
    data.covariates(i, 0) = x;
    data.covariates(i, 1) = z;
    data.response[i] = 0.5 + 0.6 * x + 0.4 * z + z01(rng);
  }
  return data;
}

// Exact Pr(M_k | y) for a regression_pair_config problem.
inline Eigen::VectorXd regression_pair_oracle(const palette::RunConfig& config, const palette::Dataset& data) {
  Eigen::VectorXd log_m(2);
  for (int k = 0; k < 2; ++k) {
    const auto& fam = std::get<palette::GaussianLinearFamily>(config.models[k].family).config;
    const Eigen::MatrixXd x = fam.design.design(data);
    log_m[k] = regression_log_marginal(data.response, x, fam.coef_prior_mean, fam.coef_prior_covariance,
                                       fam.variance_prior_shape, fam.variance_prior_scale) +
               std::log(config.models[k].prior_weight);
  }
  const double mx = log_m.maxCoeff();
  Eigen::VectorXd p = (log_m.array() - mx).exp().matrix();
  return p / p.sum();
}

}  // namespace testing
