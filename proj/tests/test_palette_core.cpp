#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "palette/bijection.hpp"
#include "palette/densities.hpp"
#include "palette/error.hpp"
#include "palette/log_sum_exp.hpp"
#include "palette/model.hpp"
#include "support.hpp"

using namespace palette;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Dataset trout_like_data(Rng& rng, Eigen::Index n) {
  std::normal_distribution<double> z(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  Dataset d;
  d.covariate_names = {"S", "L"};
  d.covariates.resize(n, 2);
  d.response.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    d.covariates(i, 0) = coin(rng) ? 1.0 : -1.0;
    d.covariates(i, 1) = z(rng);
    d.response[i] = coin(rng) ? 1.0 : 0.0;
  }
  return d;
}

Dataset pine_like_data(Rng& rng, Eigen::Index n) {
  std::normal_distribution<double> z(0.0, 1.0);
  Dataset d;
  d.covariate_names = {"x", "z"};
  d.covariates.resize(n, 2);
  d.response.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    d.covariates(i, 0) = 25.0 + 5.0 * z(rng);
    d.covariates(i, 1) = 25.0 + 5.0 * z(rng);
    d.response[i] = 3000.0 + 180.0 * (d.covariates(i, 0) - 25.0) + 300.0 * z(rng);
  }
  return d;
}

ModelSet shipped_models(const std::string& name, Rng& rng) {
  const RunConfig config = example_config(name);
  Dataset data;
  if (name == "binomial") data = embedded_dataset("binomial");
  if (name == "pine") data = pine_like_data(rng, 42);
  if (name == "trout") data = trout_like_data(rng, 50);
  return build_model_set(config.models, data);
}

}  // namespace

TEST_CASE("log_sum_exp examples") {
  CHECK(log_sum_exp(Eigen::Vector2d(0.0, 0.0)) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(log_sum_exp(Eigen::Vector2d(-1000.0, -1000.0)) == doctest::Approx(-1000.0 + std::log(2.0)).epsilon(1e-15));
  CHECK(log_sum_exp(Eigen::Vector2d(-kInf, 0.5)) == 0.5);
  Eigen::VectorXd one(1);
  one << -3.25;
  CHECK(log_sum_exp(one) == -3.25);
  CHECK_THROWS_AS(log_sum_exp(Eigen::Vector2d(-kInf, -kInf)), DegenerateError);
  CHECK_THROWS_AS(log_sum_exp(Eigen::VectorXd()), DegenerateError);
}

TEST_CASE("log_sum_exp shift invariance up to |c| = 1e6") {
  Rng rng = make_stream(11, 0);
  std::uniform_real_distribution<double> v(-50.0, 50.0);
  std::uniform_real_distribution<double> shift(-1e6, 1e6);
  for (int trial = 0; trial < 10000; ++trial) {
    Eigen::VectorXd x(1 + trial % 7);
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = v(rng);
    const double c = shift(rng);
    const Eigen::VectorXd xc = (x.array() + c).matrix();
    // x + c is itself rounded at the scale of |c|, so compare against that
    const double tol = 1e-12 * std::max(1.0, std::abs(c)) + 4.0 * std::numeric_limits<double>::epsilon() * std::abs(c);
    REQUIRE(std::abs(log_sum_exp(xc) - (log_sum_exp(x) + c)) <= tol);
  }
}

TEST_CASE("softmax is a simplex") {
  const Eigen::VectorXd p = softmax(Eigen::Vector3d(-1e4, -1e4 + 1.0, -kInf));
  CHECK(p.sum() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(p[2] == 0.0);
  CHECK(p[1] / p[0] == doctest::Approx(std::exp(1.0)));
}

TEST_CASE("linear bijection: pooled binomial map") {
  Eigen::Matrix2d a;
  a << 0.5, 0.5, 0.0, 1.0;
  const LinearBijection g(a);
  CHECK(g.log_abs_det() == doctest::Approx(std::log(0.5)).epsilon(1e-15));
  const Eigen::VectorXd theta = g.apply(Eigen::Vector2d(0.4, 0.5));
  CHECK(theta[0] == doctest::Approx(0.45));
  CHECK(theta[1] == doctest::Approx(0.5));
  const Eigen::VectorXd psi = g.invert(Eigen::Vector2d(0.45, 0.5));
  // psi_1 = 2 pi - u
  CHECK(psi[0] == doctest::Approx(0.4).epsilon(1e-14));
  CHECK(psi[1] == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("linear bijection: construction checks") {
  CHECK_THROWS_AS(LinearBijection(Eigen::MatrixXd(2, 3)), ContractViolation);
  Eigen::Matrix2d singular;
  singular << 1.0, 2.0, 2.0, 4.0;
  CHECK_THROWS_AS(LinearBijection(Eigen::MatrixXd(singular)), ContractViolation);
  Eigen::Matrix2d bad;
  bad << 1.0, std::nan(""), 0.0, 1.0;
  CHECK_THROWS_AS(LinearBijection(Eigen::MatrixXd(bad)), ContractViolation);
  CHECK_THROWS_AS(LinearBijection::permutation({0, 0, 1}), ContractViolation);

  const LinearBijection p = LinearBijection::permutation({0, 2, 1, 3});
  CHECK(p.log_abs_det() == 0.0);
  const Eigen::VectorXd out = p.apply(Eigen::Vector4d(1.0, 2.0, 3.0, 4.0));
  CHECK(out == Eigen::VectorXd(Eigen::Vector4d(1.0, 3.0, 2.0, 4.0)));
}

TEST_CASE("log_abs_det matches the determinant of random matrices") {
  Rng rng = make_stream(12, 0);
  std::normal_distribution<double> z(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::Index d = 1 + trial % 6;
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(d, d) * 2.0;
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = 0; j < d; ++j) a(i, j) += z(rng);
    if (std::abs(a.determinant()) < 1e-3) continue;
    const LinearBijection g(a);
    CHECK(g.log_abs_det() == doctest::Approx(std::log(std::abs(a.determinant()))).epsilon(1e-12));
    Eigen::VectorXd theta(d);
    for (Eigen::Index i = 0; i < d; ++i) theta[i] = z(rng);
    CHECK((g.apply(g.invert(theta)) - theta).lpNorm<Eigen::Infinity>() < 1e-10);
  }
}

TEST_CASE("apply and invert through a ModelSpec") {
  Rng rng = make_stream(13, 0);
  const ModelSet bin = shipped_models("binomial", rng);
  const ExtendedParameters e = apply_bijection(bin[1], Palette(Eigen::Vector2d(0.4, 0.5)));
  REQUIRE(e.theta.size() == 1);
  REQUIRE(e.u.size() == 1);
  CHECK(e.theta[0] == doctest::Approx(0.45));
  CHECK(e.u[0] == doctest::Approx(0.5));
  const ExtendedParameters id = apply_bijection(bin[0], Palette(Eigen::Vector2d(0.4, 0.5)));
  CHECK(id.theta.size() == 2);
  CHECK(id.u.size() == 0);
  CHECK_THROWS_AS(apply_bijection(bin[0], Palette(Eigen::Vector3d(1, 2, 3))), ContractViolation);
  CHECK_THROWS_AS(invert_bijection(bin[1], Eigen::Vector2d(0.1, 0.2), Eigen::Vector2d(0.1, 0.2)), ContractViolation);

  const ModelSet trout = shipped_models("trout", rng);
  const Palette psi(Eigen::Vector4d(1.0, 2.0, 3.0, 4.0));
  const ExtendedParameters constant = apply_bijection(trout[0], psi);
  CHECK(constant.theta == Eigen::VectorXd::Constant(1, 1.0));
  CHECK(constant.u == Eigen::VectorXd(Eigen::Vector3d(2.0, 3.0, 4.0)));
  // length model reads its slope from the third coordinate
  const ExtendedParameters length = apply_bijection(trout[2], psi);
  CHECK(length.theta == Eigen::VectorXd(Eigen::Vector2d(1.0, 3.0)));
  CHECK(length.u == Eigen::VectorXd(Eigen::Vector2d(2.0, 4.0)));
}

TEST_CASE("round trip for every shipped model over 1e4 palettes") {
  Rng rng = make_stream(14, 0);
  std::normal_distribution<double> z(0.0, 1.0);
  for (const char* name : {"binomial", "pine", "trout"}) {
    const ModelSet set = shipped_models(name, rng);
    for (const ModelSpec& m : set.models()) {
      double worst = 0.0;
      for (int i = 0; i < 10000; ++i) {
        Eigen::VectorXd v(m.palette_dim());
        for (Eigen::Index j = 0; j < v.size(); ++j) v[j] = 100.0 * z(rng);
        const ExtendedParameters e = apply_bijection(m, Palette(v));
        worst = std::max(worst, (invert_bijection(m, e.theta, e.u).values() - v).lpNorm<Eigen::Infinity>());
      }
      INFO(name << " / " << m.name);
      CHECK(worst < 1e-10);
    }
  }
}

TEST_CASE("log_psi_prior examples") {
  Rng rng = make_stream(15, 0);
  // identity, standard normal product, d = 2
  ModelSpec m;
  m.name = "normal";
  m.n_params = 2;
  m.bijection = std::make_shared<LinearBijection>(LinearBijection::identity(2));
  m.param_prior = [](const Eigen::VectorXd& t, Hyper) {
    return dist::normal_log_pdf(t[0], 0, 1) + dist::normal_log_pdf(t[1], 0, 1);
  };
  m.supplemental = make_supplemental_prior({});
  m.log_likelihood = [](const Eigen::VectorXd&, const Dataset&) { return 0.0; };
  CHECK(log_psi_prior(m, Palette(Eigen::Vector2d::Zero()), std::nullopt) ==
        doctest::Approx(-std::log(2.0 * std::numbers::pi)));

  const ModelSet bin = shipped_models("binomial", rng);
  const double expected = dist::beta_log_pdf(0.5, 15.0, 15.0) + std::log(0.5);
  // independent Be(15,15) log density
  const double be = std::lgamma(30.0) - 2.0 * std::lgamma(15.0) + 28.0 * std::log(0.5);
  CHECK(expected == doctest::Approx(be + std::log(0.5)).epsilon(1e-13));
  CHECK(log_psi_prior(bin[1], Palette(Eigen::Vector2d(0.4, 0.5)), std::nullopt) ==
        doctest::Approx(expected).epsilon(1e-13));
  CHECK(log_psi_prior(bin[1], Palette(Eigen::Vector2d(2.1, 0.1)), std::nullopt) == -kInf);
  CHECK(log_psi_prior(bin[0], Palette(Eigen::Vector2d(-0.1, 0.1)), std::nullopt) == -kInf);

  // hierarchical prior needs V
  const ModelSet trout = shipped_models("trout", rng);
  CHECK_THROWS_AS(log_psi_prior(trout[0], Palette(Eigen::Vector4d::Zero()), std::nullopt), ContractViolation);
  CHECK(std::isfinite(log_psi_prior(trout[0], Palette(Eigen::Vector4d::Zero()), 0.5)));
}

TEST_CASE("full conditional: binomial palette point against direct evaluation") {
  Rng rng = make_stream(16, 0);
  const ModelSet bin = shipped_models("binomial", rng);
  const Dataset data = embedded_dataset("binomial");
  const Eigen::VectorXd p = full_conditional_model_probs(Palette(Eigen::Vector2d(0.4, 0.5)), bin, data, std::nullopt);

  // unnormalized displayed forms; binomial coefficients cancel
  const double w1 = std::pow(0.4, 8) * std::pow(0.6, 12) * std::pow(0.5, 16) * std::pow(0.5, 14);
  const double be = std::exp(std::lgamma(30.0) - 2.0 * std::lgamma(15.0)) * std::pow(0.5, 14) * std::pow(0.5, 14);
  const double w2 = std::pow(0.45, 24) * std::pow(0.55, 26) * be * 0.5;
  CHECK(p[1] == doctest::Approx(w2 / (w1 + w2)).epsilon(1e-12));
  CHECK(p.sum() == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("full conditional: equal psi priors reduce to weighted likelihood ratio") {
  Dataset d;
  d.covariate_names = {"x", "z"};
  d.covariates.resize(5, 2);
  d.covariates << 20, 22, 24, 23, 25, 29, 28, 24, 31, 30;
  d.response = (Eigen::VectorXd(5) << 2500, 2900, 3300, 3100, 3700).finished();
  const RunConfig config = example_config("pine");
  const ModelSet set = build_model_set(config.models, d);
  const Eigen::Vector3d psi(3000.0, 150.0, 90000.0);
  const Eigen::VectorXd p = full_conditional_model_probs(Palette(psi), set, d, std::nullopt);

  auto rss = [&](int col) {
    const double mean = d.covariates.col(col).mean();
    double s = 0.0;
    for (int i = 0; i < 5; ++i) {
      const double r = d.response[i] - psi[0] - psi[1] * (d.covariates(i, col) - mean);
      s += r * r;
    }
    return s;
  };
  const double log_odds = -(rss(1) - rss(0)) / (2.0 * psi[2]) + std::log(0.0005 / 0.9995);
  CHECK(std::log(p[1] / p[0]) == doctest::Approx(log_odds).epsilon(1e-10));
}

TEST_CASE("full conditional: K = 1 and degenerate points") {
  Rng rng = make_stream(17, 0);
  const ModelSet bin = shipped_models("binomial", rng);
  const Dataset data = embedded_dataset("binomial");
  std::vector<ModelSpec> one{bin[0]};
  one[0].prior_weight = 1.0;
  const ModelSet single(one);
  const Eigen::VectorXd p = full_conditional_model_probs(Palette(Eigen::Vector2d(0.3, 0.6)), single, data, std::nullopt);
  CHECK(p.size() == 1);
  CHECK(p[0] == 1.0);
  CHECK_THROWS_WITH_AS(full_conditional_model_probs(Palette(Eigen::Vector2d(5.0, 5.0)), bin, data, std::nullopt),
                       doctest::Contains("degenerate palette point"), DegenerateError);
}

TEST_CASE("full conditional: normalization and weight equivariance") {
  Rng rng = make_stream(18, 0);
  std::normal_distribution<double> z(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const ModelSet trout = shipped_models("trout", rng);
  Dataset data = trout_like_data(rng, 50);
  const ModelSet set = build_model_set(example_config("trout").models, data);
  for (int trial = 0; trial < 2000; ++trial) {
    Eigen::VectorXd w(5);
    for (int k = 0; k < 5; ++k) w[k] = 0.01 + u(rng);
    const ModelSet a = set.with_weights(w);
    const ModelSet b = set.with_weights(w * (0.001 + 1000.0 * u(rng)));
    const Palette psi(Eigen::Vector4d(z(rng), z(rng), z(rng), z(rng)));
    const double v = 0.1 + 3.0 * u(rng);
    const Eigen::VectorXd pa = full_conditional_model_probs(psi, a, data, v);
    const Eigen::VectorXd pb = full_conditional_model_probs(psi, b, data, v);
    REQUIRE(std::abs(pa.sum() - 1.0) < 1e-12);
    REQUIRE(pa.minCoeff() >= 0.0);
    REQUIRE(pa.maxCoeff() <= 1.0);
    REQUIRE((pa - pb).lpNorm<Eigen::Infinity>() < 1e-12);
  }
}

TEST_CASE("model set invariants") {
  Rng rng = make_stream(19, 0);
  const ModelSet bin = shipped_models("binomial", rng);
  std::vector<ModelSpec> models = bin.models();
  models[0].prior_weight = 0.7;
  CHECK_THROWS_AS(ModelSet{models}, ContractViolation);
  CHECK_THROWS_AS(normalize_weights(Eigen::Vector2d(1.0, 0.0)), ContractViolation);
  const Eigen::VectorXd w = normalize_weights(Eigen::Vector3d(2.0, 1.0, 1.0));
  CHECK(w[0] == 0.5);
  CHECK(bin.with_weights(Eigen::Vector2d(3.0, 1.0)).prior_weights()[0] == doctest::Approx(0.75));
}
