#pragma once

// Log densities and random variates for the distributions the shipped model
// families use. Densities return -inf outside their support.

#include <Eigen/Dense>

#include "palette/rng.hpp"

namespace palette::dist {

double log_beta_fn(double a, double b);

double beta_log_pdf(double x, double a, double b);
double normal_log_pdf(double x, double mean, double sd);
// Gamma with shape/rate: density ∝ x^(shape-1) exp(-rate x).
double gamma_log_pdf(double x, double shape, double rate);
// Inverse gamma with shape a, scale b: density ∝ x^-(a+1) exp(-b/x).
double inverse_gamma_log_pdf(double x, double shape, double scale);
double mvnormal_log_pdf(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                        const Eigen::LLT<Eigen::MatrixXd>& covariance_llt);
// log C(n, k) for real-valued counts.
double log_binomial_coefficient(double n, double k);

double sample_gamma(Rng& rng, double shape, double rate);
double sample_inverse_gamma(Rng& rng, double shape, double scale);
double sample_beta(Rng& rng, double a, double b);
double sample_normal(Rng& rng, double mean, double sd);
double sample_uniform(Rng& rng);
// Draw from N(mean, precision^-1) given the Cholesky factor of the precision.
Eigen::VectorXd sample_mvnormal_precision(Rng& rng, const Eigen::VectorXd& mean,
                                          const Eigen::LLT<Eigen::MatrixXd>& precision_llt);

}  // namespace palette::dist
