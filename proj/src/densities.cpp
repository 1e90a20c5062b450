#include "palette/densities.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace palette::dist {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kLogTwoPi = 1.8378770664093454835606594728112;
}  // namespace

double log_beta_fn(double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); }

double beta_log_pdf(double x, double a, double b) {
  if (!(x > 0.0 && x < 1.0)) return kNegInf;
  return (a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x) - log_beta_fn(a, b);
}

double normal_log_pdf(double x, double mean, double sd) {
  const double z = (x - mean) / sd;
  return -0.5 * (kLogTwoPi + z * z) - std::log(sd);
}

double gamma_log_pdf(double x, double shape, double rate) {
  if (!(x > 0.0)) return kNegInf;
  return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(x) - rate * x;
}

double inverse_gamma_log_pdf(double x, double shape, double scale) {
  if (!(x > 0.0)) return kNegInf;
  return shape * std::log(scale) - std::lgamma(shape) - (shape + 1.0) * std::log(x) - scale / x;
}

double mvnormal_log_pdf(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                        const Eigen::LLT<Eigen::MatrixXd>& covariance_llt) {
  const Eigen::VectorXd z = covariance_llt.matrixL().solve(x - mean);
  const double log_det = 2.0 * covariance_llt.matrixLLT().diagonal().array().log().sum();
  return -0.5 * (static_cast<double>(x.size()) * kLogTwoPi + log_det + z.squaredNorm());
}

double log_binomial_coefficient(double n, double k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

double sample_gamma(Rng& rng, double shape, double rate) {
  std::gamma_distribution<double> gamma(shape, 1.0 / rate);
  return gamma(rng);
}

double sample_inverse_gamma(Rng& rng, double shape, double scale) {
  return 1.0 / sample_gamma(rng, shape, scale);
}

double sample_beta(Rng& rng, double a, double b) {
  // Ratio of gammas; resample in the (measure-zero) event of an exact 0 or 1.
  for (;;) {
    const double x = sample_gamma(rng, a, 1.0);
    const double y = sample_gamma(rng, b, 1.0);
    const double p = x / (x + y);
    if (p > 0.0 && p < 1.0) return p;
  }
}

double sample_normal(Rng& rng, double mean, double sd) {
  std::normal_distribution<double> normal(mean, sd);
  return normal(rng);
}

double sample_uniform(Rng& rng) {
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  return uniform(rng);
}

Eigen::VectorXd sample_mvnormal_precision(Rng& rng, const Eigen::VectorXd& mean,
                                          const Eigen::LLT<Eigen::MatrixXd>& precision_llt) {
  Eigen::VectorXd z(mean.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = sample_normal(rng, 0.0, 1.0);
  // precision = L L'; x = mean + L'^{-1} z has covariance (L L')^{-1}.
  return mean + precision_llt.matrixU().solve(z);
}

}  // namespace palette::dist
