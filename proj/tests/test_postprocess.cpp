#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "palette/error.hpp"
#include "palette/postprocess.hpp"
#include "palette/stats.hpp"
#include "support.hpp"

using namespace palette;

namespace {

const testing::Problem& binomial() {
  static const testing::Problem p = testing::binomial_problem();
  return p;
}

Eigen::MatrixXd published_five() {
  Eigen::MatrixXd p(5, 5);
  p << 0.8172, 0.0870, 0.0847, 0.0088, 0.0024,
       0.0858, 0.8086, 0.0107, 0.0755, 0.0195,
       0.0854, 0.0102, 0.8233, 0.0759, 0.0052,
       0.0081, 0.0749, 0.0781, 0.7884, 0.0504,
       0.0026, 0.0176, 0.0057, 0.0498, 0.9244;
  return p;
}

double sample_var(const std::vector<double>& xs) {
  double m = 0.0;
  for (double x : xs) m += x / static_cast<double>(xs.size());
  double v = 0.0;
  for (double x : xs) v += (x - m) * (x - m);
  return v / static_cast<double>(xs.size() - 1);
}

}  // namespace

TEST_CASE("stationary distribution of small chains") {
  Eigen::Matrix2d pine;
  pine << 0.6003, 0.3997, 0.1651, 0.8349;
  const Eigen::VectorXd pi = stationary_distribution(pine);
  CHECK(std::abs(pi[0] - 0.2924) < 5e-4);
  CHECK(std::abs(pi[1] - 0.7076) < 5e-4);
  // closed form for two states
  CHECK(pi[0] == doctest::Approx(0.1651 / (0.1651 + 0.3997)).epsilon(1e-13));
  CHECK((pi.transpose() * pine - pi.transpose()).lpNorm<Eigen::Infinity>() < 1e-10);

  Eigen::Matrix2d half = Eigen::Matrix2d::Constant(0.5);
  CHECK(stationary_distribution(half).isApprox(Eigen::Vector2d(0.5, 0.5), 1e-14));

  // published rows are rounded to 4 dp; renormalize before solving
  Eigen::MatrixXd five = published_five();
  for (Eigen::Index h = 0; h < 5; ++h) five.row(h) /= five.row(h).sum();
  const Eigen::VectorXd p5 = stationary_distribution(five);
  const Eigen::VectorXd expected = (Eigen::VectorXd(5) << 0.1986, 0.1975, 0.2016, 0.1989, 0.2034).finished();
  CHECK((p5 - expected).lpNorm<Eigen::Infinity>() < 5e-4);
  CHECK((p5.transpose() * five - p5.transpose()).lpNorm<Eigen::Infinity>() < 1e-10);

  Eigen::Matrix2d flip;
  flip << 0.0, 1.0, 1.0, 0.0;
  CHECK(stationary_distribution(flip).isApprox(Eigen::Vector2d(0.5, 0.5)));
  CHECK(stationary_distribution(Eigen::MatrixXd::Ones(1, 1))[0] == 1.0);
}

TEST_CASE("stationary distribution rejects bad matrices") {
  Eigen::Matrix3d reducible;
  reducible << 0.5, 0.5, 0.0, 0.5, 0.5, 0.0, 0.0, 0.0, 1.0;
  CHECK_THROWS_WITH_AS(stationary_distribution(reducible), doctest::Contains("no unique stationary distribution"),
                       DegenerateError);
  Eigen::Matrix2d absorbing;
  absorbing << 1.0, 0.0, 0.3, 0.7;
  CHECK_THROWS_AS(stationary_distribution(absorbing), DegenerateError);
  CHECK_THROWS_AS(stationary_distribution(published_five()), ContractViolation);
  CHECK_THROWS_AS(stationary_distribution(Eigen::MatrixXd(2, 3)), ContractViolation);
}

TEST_CASE("random irreducible chains") {
  Rng rng = make_stream(21, 0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 2000; ++trial) {
    const Eigen::Index k = 2 + trial % 9;
    Eigen::MatrixXd p(k, k);
    for (Eigen::Index i = 0; i < k; ++i) {
      for (Eigen::Index j = 0; j < k; ++j) p(i, j) = u(rng) < 0.3 ? 0.0 : u(rng);
      p(i, (i + 1) % k) += 0.05;  // a cycle keeps it irreducible
      p.row(i) /= p.row(i).sum();
    }
    const Eigen::VectorXd pi = stationary_distribution(p);
    REQUIRE(std::abs(pi.sum() - 1.0) < 1e-12);
    REQUIRE(pi.minCoeff() >= 0.0);
    REQUIRE((pi.transpose() * p - pi.transpose()).lpNorm<Eigen::Infinity>() < 1e-10);
  }
}

TEST_CASE("bayes factors") {
  const Eigen::MatrixXd pine = bayes_factor_matrix(Eigen::Vector2d(0.291, 0.709), Eigen::Vector2d(0.9995, 0.0005));
  CHECK(pine(1, 0) == doctest::Approx(0.709 / 0.291 * 0.9995 / 0.0005).epsilon(1e-12));
  CHECK(std::abs(pine(1, 0) - 4870.0) < 1.0);
  CHECK(pine(0, 1) * pine(1, 0) == doctest::Approx(1.0).epsilon(1e-12));

  const Eigen::MatrixXd bin = bayes_factor_matrix(Eigen::Vector2d(0.3423, 0.6577), Eigen::Vector2d(0.5, 0.5));
  CHECK(std::abs(bin(1, 0) - 1.921) < 1e-3);

  const Eigen::Vector3d q(0.2, 0.3, 0.5);
  CHECK(bayes_factor_matrix(q, q).isApprox(Eigen::Matrix3d::Ones(), 1e-14));

  CHECK_THROWS_WITH_AS(bayes_factor_matrix(Eigen::Vector2d(1.0, 0.0), Eigen::Vector2d(0.5, 0.5)),
                       doctest::Contains("model never visited; increase iterations or tune priors"), DegenerateError);
}

TEST_CASE("reweighting under another prior") {
  const Eigen::Vector2d p(0.291, 0.709);
  const Eigen::Vector2d pine_prior(0.9995, 0.0005);
  const Eigen::Vector2d uniform(0.5, 0.5);
  CHECK(reweight_under_prior(p, pine_prior, pine_prior).isApprox(p, 1e-15));
  const Eigen::VectorXd r = reweight_under_prior(p, pine_prior, uniform);
  const double bf = 0.709 / 0.291 * 0.9995 / 0.0005;
  CHECK(r[0] == doctest::Approx(1.0 / (1.0 + bf)).epsilon(1e-12));
  CHECK(std::abs(r[0] - 0.000205) < 1e-6);
  CHECK(std::abs(r[1] - 0.999795) < 1e-6);
  CHECK((reweight_under_prior(r, uniform, pine_prior) - p).lpNorm<Eigen::Infinity>() < 1e-12);
  CHECK_THROWS_AS(reweight_under_prior(Eigen::Vector2d(0.0, 1.0), uniform, pine_prior), DegenerateError);

  // first-order SE: logit scale preserved
  const ProbabilityEstimate est{p, Eigen::Vector2d(0.01, 0.01)};
  const Eigen::VectorXd se = reweight_standard_errors(est, pine_prior, uniform);
  CHECK(se[1] == doctest::Approx(0.01 * r[1] * r[0] / (p[1] * p[0])).epsilon(1e-12));
}

TEST_CASE("compensated sums are order insensitive") {
  Rng rng = make_stream(22, 0);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<Eigen::VectorXd> xs;
  for (int i = 0; i < 100000; ++i) {
    Eigen::Vector3d v(z(rng), 1e8 + z(rng), 1.0 / (1.0 + std::exp(z(rng))));
    xs.push_back(v);
  }
  CompensatedSum forward(3);
  for (const auto& v : xs) forward.add(v);
  std::shuffle(xs.begin(), xs.end(), rng);
  CompensatedSum shuffled(3);
  for (const auto& v : xs) shuffled.add(v);
  const Eigen::VectorXd a = forward.value() / 1e5;
  const Eigen::VectorXd b = shuffled.value() / 1e5;
  for (int j = 0; j < 3; ++j) CHECK(std::abs(a[j] - b[j]) <= 1e-12 * std::max(1.0, std::abs(a[j])));
}

TEST_CASE("batch means standard error of iid draws") {
  Rng rng = make_stream(23, 0);
  std::normal_distribution<double> z(0.0, 2.0);
  const std::int64_t n = 100000;
  BatchMeans bm(n, 1);
  for (std::int64_t i = 0; i < n; ++i) bm.add(Eigen::VectorXd::Constant(1, z(rng)));
  CHECK(bm.batches() == 20);
  // 19 degrees of freedom: se estimate within ~50% with overwhelming probability
  CHECK(bm.standard_error()[0] == doctest::Approx(2.0 / std::sqrt(1e5)).epsilon(0.5));
}

TEST_CASE("method 1 on the binomial example") {
  const testing::Problem& p = binomial();
  Method1Options opts;
  opts.iterations = 60000;
  const PosteriorReport r = method1_replicates(p.stores, p.models, p.data, opts, {1, 2}, 31);
  REQUIRE(r.rao_blackwell.has_value());
  REQUIRE(r.indicator.has_value());
  const double exact = testing::binomial_exact_p2();
  CHECK(exact == doctest::Approx(0.65798).epsilon(1e-4));
  CHECK(std::abs(r.rao_blackwell->probs[1] - exact) < 0.006);
  CHECK(std::abs(r.indicator->probs[1] - exact) < 4.0 * r.indicator->mcse[1] + 0.002);
  CHECK(std::abs(r.rao_blackwell->probs.sum() - 1.0) < 1e-10);
  CHECK(std::abs(r.indicator->probs.sum() - 1.0) < 1e-10);
  CHECK(r.traces.size() == 2);
  CHECK(r.chains == 2);
  CHECK(r.burnin == 30000);

  // both chains, started from different models, meet
  const Eigen::VectorXd end1 = r.traces[0].cumulative.bottomRows(1).transpose();
  const Eigen::VectorXd end2 = r.traces[1].cumulative.bottomRows(1).transpose();
  CHECK(r.traces[0].initial_model == 1);
  CHECK(r.traces[1].initial_model == 2);
  CHECK((end1 - end2).lpNorm<Eigen::Infinity>() < 0.01);
  CHECK(r.traces[0].cumulative.rows() == 60000);
}

TEST_CASE("method 2 and estimator agreement on the binomial example") {
  const testing::Problem& p = binomial();
  Rng rng = make_stream(32, 0);
  const TransitionEstimate t = method2_transition(p.stores, p.models, p.data, 50000, rng);
  t.validate();
  CHECK(t.counts == std::vector<std::int64_t>{50000, 50000});
  Eigen::Matrix2d published;
  published << 0.4318, 0.5682, 0.2951, 0.7049;
  CHECK((t.matrix - published).lpNorm<Eigen::Infinity>() < 0.01);
  const Eigen::VectorXd pi = stationary_distribution(t.matrix);
  const Eigen::VectorXd se = stationary_standard_errors(t, pi);

  Method1Options opts;
  opts.iterations = 60000;
  const PosteriorReport r = method1_replicates(p.stores, p.models, p.data, opts, {1, 2}, 33);
  auto agree = [](double a, double sa, double b, double sb) { return std::abs(a - b) < 3.0 * std::hypot(sa, sb); };
  CHECK(agree(pi[1], se[1], r.rao_blackwell->probs[1], r.rao_blackwell->mcse[1]));
  CHECK(agree(pi[1], se[1], r.indicator->probs[1], r.indicator->mcse[1]));
  CHECK(agree(r.indicator->probs[1], r.indicator->mcse[1], r.rao_blackwell->probs[1], r.rao_blackwell->mcse[1]));
  CHECK(std::abs(pi[1] - testing::binomial_exact_p2()) < 0.01);
}

TEST_CASE("reported standard errors track replicate spread") {
  const testing::Problem& p = binomial();
  std::vector<double> rb, ind, st;
  double rb_se = 0.0, ind_se = 0.0, st_se = 0.0;
  const int reps = 20;
  for (int s = 0; s < reps; ++s) {
    Method1Options opts;
    opts.iterations = 10000;
    Rng rng = make_stream(400 + s, 0);
    const PosteriorReport r = method1_chain(p.stores, p.models, p.data, opts, rng);
    rb.push_back(r.rao_blackwell->probs[1]);
    ind.push_back(r.indicator->probs[1]);
    rb_se += r.rao_blackwell->mcse[1] / reps;
    ind_se += r.indicator->mcse[1] / reps;
    const TransitionEstimate t = method2_transition(p.stores, p.models, p.data, 4000, rng);
    const Eigen::VectorXd pi = stationary_distribution(t.matrix);
    st.push_back(pi[1]);
    st_se += stationary_standard_errors(t, pi)[1] / reps;
  }
  const double rb_sd = std::sqrt(sample_var(rb));
  const double ind_sd = std::sqrt(sample_var(ind));
  const double st_sd = std::sqrt(sample_var(st));
  MESSAGE("RB sd " << rb_sd << " se " << rb_se << "; indicator sd " << ind_sd << " se " << ind_se
                   << "; stationary sd " << st_sd << " se " << st_se);
  CHECK(rb_se / rb_sd > 0.5);
  CHECK(rb_se / rb_sd < 2.0);
  CHECK(ind_se / ind_sd > 0.5);
  CHECK(ind_se / ind_sd < 2.0);
  CHECK(st_se / st_sd > 0.5);
  CHECK(st_se / st_sd < 2.0);
}

TEST_CASE("single-model sets") {
  const testing::Problem& p = binomial();
  std::vector<ModelSpec> one{p.models[0]};
  one[0].prior_weight = 1.0;
  const ModelSet single(one);
  const std::vector<SampleStore> stores{p.stores[0]};
  Method1Options opts;
  opts.iterations = 200;
  Rng rng = make_stream(34, 0);
  const PosteriorReport r = method1_chain(stores, single, p.data, opts, rng);
  CHECK(r.rao_blackwell->probs[0] == 1.0);
  CHECK(r.indicator->probs[0] == 1.0);
  CHECK((r.traces[0].cumulative.array() == 1.0).all());
  const TransitionEstimate t = method2_transition(stores, single, p.data, 10, rng);
  CHECK(t.matrix(0, 0) == 1.0);
}

TEST_CASE("method 1 argument checks") {
  const testing::Problem& p = binomial();
  Rng rng = make_stream(35, 0);
  Method1Options opts;
  opts.iterations = 100;
  opts.burnin = 100;
  CHECK_THROWS_WITH_AS(method1_chain(p.stores, p.models, p.data, opts, rng),
                       doctest::Contains("no post-burn-in iterations"), ContractViolation);
  opts.burnin = 10;
  opts.initial_model = 3;
  CHECK_THROWS_AS(method1_chain(p.stores, p.models, p.data, opts, rng), ContractViolation);
  std::vector<SampleStore> short_list{p.stores[0]};
  opts.initial_model = 1;
  CHECK_THROWS_AS(method1_chain(short_list, p.models, p.data, opts, rng), ContractViolation);
  std::vector<SampleStore> empty = p.stores;
  empty[1].psi_draws.resize(0, 2);
  CHECK_THROWS_AS(method2_transition(empty, p.models, p.data, 10, rng), ContractViolation);
}

TEST_CASE("never-visited models are reported, not hidden") {
  const testing::Problem& p = binomial();
  const ModelSet skewed = p.models.with_weights(Eigen::Vector2d(1.0 - 1e-9, 1e-9));
  Method1Options opts;
  opts.iterations = 2000;
  Rng rng = make_stream(36, 0);
  PosteriorReport r = method1_chain(p.stores, skewed, p.data, opts, rng);
  CHECK(r.indicator->probs[1] == 0.0);
  finalize_report(r);
  const bool flagged = std::any_of(r.diagnostics.begin(), r.diagnostics.end(),
                                   [](const std::string& d) { return d.find("never visited") != std::string::npos; });
  CHECK(flagged);
  // the RB estimate stays positive, so Bayes factors are still available
  CHECK(r.bayes_factors.rows() == 2);
  // (an importance-sampling estimate from 1000 model-1 draws)
  CHECK(std::abs(r.bayes_factors(1, 0) / 1.9238 - 1.0) < 0.25);
}

TEST_CASE("prior tuning") {
  const testing::Problem& p = binomial();
  Rng rng = make_stream(37, 0);
  const TunedPriors tuned = tune_model_priors(p.stores, p.models, p.data, Eigen::Vector2d(0.5, 0.5), 6, 20000, rng);
  CHECK(tuned.converged);
  MESSAGE("tuned weights " << tuned.weights.transpose() << " visits " << tuned.visit_frequencies.transpose());
  // balanced visits need prior odds equal to 1 / BF_21
  CHECK(std::abs(tuned.weights[0] - 0.658) < 0.03);
  CHECK((tuned.visit_frequencies.array() - 0.5).abs().maxCoeff() < 0.1);

  // results under the tuned prior restated to the equal prior match a direct run
  const ModelSet tuned_set = p.models.with_weights(tuned.weights);
  Method1Options opts;
  opts.iterations = 60000;
  const PosteriorReport t = method1_replicates(p.stores, tuned_set, p.data, opts, {1, 2}, 38);
  const PosteriorReport d = method1_replicates(p.stores, p.models, p.data, opts, {1, 2}, 39);
  const Eigen::VectorXd restated = reweight_under_prior(t.rao_blackwell->probs, tuned_set.prior_weights(),
                                                        p.models.prior_weights());
  const Eigen::VectorXd restated_se = reweight_standard_errors(*t.rao_blackwell, tuned_set.prior_weights(),
                                                               p.models.prior_weights());
  CHECK(std::abs(restated[1] - d.rao_blackwell->probs[1]) < 3.0 * std::hypot(restated_se[1], d.rao_blackwell->mcse[1]));

  // two copies of the same model are already balanced
  std::vector<ModelSpec> twins{p.models[0], p.models[0]};
  twins[1].id = 2;
  twins[1].name = "twin";
  const ModelSet twin_set(twins);
  const std::vector<SampleStore> twin_stores{p.stores[0], p.stores[0]};
  const TunedPriors flat = tune_model_priors(twin_stores, twin_set, p.data, Eigen::Vector2d(0.5, 0.5), 5, 5000, rng);
  CHECK(flat.converged);
  CHECK(flat.rounds_used == 1);
  CHECK(std::abs(flat.weights[0] - 0.5) < 0.02);
}
