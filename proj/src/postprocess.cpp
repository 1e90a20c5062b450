#include "palette/postprocess.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <random>

#include <fmt/format.h>

#include "palette/error.hpp"
#include "palette/log_sum_exp.hpp"
#include "palette/stats.hpp"

namespace palette {

void TransitionEstimate::validate() const {
  const Eigen::Index k = matrix.rows();
  require(k >= 1 && matrix.cols() == k, "transition matrix must be square and nonempty");
  require(static_cast<Eigen::Index>(counts.size()) == k, "transition counts do not match the matrix");
  for (Eigen::Index h = 0; h < k; ++h) {
    require(counts[static_cast<std::size_t>(h)] >= 1, fmt::format("transition row {} averaged no draws", h + 1));
    require(std::abs(matrix.row(h).sum() - 1.0) <= 1e-10, fmt::format("transition row {} does not sum to one", h + 1));
    require((matrix.row(h).array() >= 0.0).all() && (matrix.row(h).array() <= 1.0).all(),
            fmt::format("transition row {} has entries outside [0,1]", h + 1));
  }
}

const ProbabilityEstimate& PosteriorReport::preferred() const {
  if (rao_blackwell) return *rao_blackwell;
  if (stationary) return *stationary;
  throw ContractViolation("report has no probability estimates");
}

void validate_stores(const std::vector<SampleStore>& stores, const ModelSet& models) {
  require(stores.size() == models.size(),
          fmt::format("{} sample stores supplied for {} models", stores.size(), models.size()));
  for (std::size_t k = 0; k < stores.size(); ++k) {
    const SampleStore& s = stores[k];
    require(s.draws() >= 1, fmt::format("store for model '{}' is empty", models[k].name));
    require(s.dim() == models.palette_dim(),
            fmt::format("store for model '{}' has {} columns, palette dimension is {}", models[k].name, s.dim(),
                        models.palette_dim()));
    require(!models.requires_hyper() || s.hyper_draws.has_value(),
            fmt::format("store for model '{}' lacks the hyperparameter column the model set needs", models[k].name));
    s.validate();
  }
}

namespace {

// Batches for standard errors of Method-2 row means.
constexpr std::int64_t kBatches = 20;

Eigen::Index draw_row(const SampleStore& store, Rng& rng) {
  std::uniform_int_distribution<Eigen::Index> pick(0, store.draws() - 1);
  return pick(rng);
}

int draw_categorical(const Eigen::VectorXd& probs, Rng& rng) {
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  double cumulative = 0.0;
  for (Eigen::Index k = 0; k < probs.size(); ++k) {
    cumulative += probs[k];
    if (u < cumulative) return static_cast<int>(k);
  }
  // u landed in the rounding gap above the final partial sum
  for (Eigen::Index k = probs.size() - 1; k >= 0; --k) {
    if (probs[k] > 0.0) return static_cast<int>(k);
  }
  return static_cast<int>(probs.size() - 1);
}

void add_visit_diagnostics(PosteriorReport& report) {
  if (!report.indicator) return;
  for (Eigen::Index k = 0; k < report.indicator->probs.size(); ++k) {
    if (report.indicator->probs[k] == 0.0) {
      report.diagnostics.push_back(
          fmt::format("model '{}' never visited after burn-in", report.model_names[static_cast<std::size_t>(k)]));
    }
  }
}

}  // namespace

PosteriorReport method1_chain(const std::vector<SampleStore>& stores, const ModelSet& models, const Dataset& data,
                              const Method1Options& options, Rng& rng) {
  validate_stores(stores, models);
  const auto n_models = static_cast<Eigen::Index>(models.size());
  const std::int64_t iters = options.iterations;
  const std::int64_t burnin = options.effective_burnin();
  require(iters >= 1, "Method 1 needs at least one iteration");
  require(burnin >= 0 && burnin < iters, "no post-burn-in iterations");
  require(options.initial_model >= 1 && options.initial_model <= n_models,
          fmt::format("initial model {} outside 1..{}", options.initial_model, n_models));

  BatchMeans rb(iters - burnin, n_models, options.batches);
  BatchMeans visits(iters - burnin, n_models, options.batches);
  CompensatedSum running(n_models);
  CumulativeTrace trace;
  trace.initial_model = options.initial_model;
  trace.cumulative.resize(iters, n_models);

  int current = options.initial_model - 1;
  Eigen::VectorXd indicator = Eigen::VectorXd::Zero(n_models);
  for (std::int64_t j = 0; j < iters; ++j) {
    const SampleStore& store = stores[static_cast<std::size_t>(current)];
    const Eigen::Index row = draw_row(store, rng);
    const Eigen::VectorXd probs =
        full_conditional_model_probs(store.palette(row), models, data, store.hyper(row));

    running.add(probs);
    trace.cumulative.row(j) = (running.value() / static_cast<double>(j + 1)).transpose();
    if (j >= burnin) {
      rb.add(probs);
      indicator.setZero();
      indicator[current] = 1.0;
      visits.add(indicator);
    }
    current = draw_categorical(probs, rng);
  }

  PosteriorReport report;
  report.model_names = models.names();
  report.prior_weights_used = models.prior_weights();
  report.rao_blackwell = ProbabilityEstimate{rb.mean(), rb.standard_error()};
  report.indicator = ProbabilityEstimate{visits.mean(), visits.standard_error()};
  report.traces.push_back(std::move(trace));
  report.iterations = iters;
  report.burnin = burnin;
  report.chains = 1;
  add_visit_diagnostics(report);
  finalize_report(report);
  return report;
}

PosteriorReport method1_replicates(const std::vector<SampleStore>& stores, const ModelSet& models,
                                   const Dataset& data, const Method1Options& options,
                                   const std::vector<int>& initial_models, std::uint64_t seed) {
  require(!initial_models.empty(), "need at least one Method-1 chain");
  std::vector<std::future<PosteriorReport>> futures;
  for (std::size_t c = 0; c < initial_models.size(); ++c) {
    futures.push_back(std::async(std::launch::async, [&, c] {
      Method1Options opts = options;
      opts.initial_model = initial_models[c];
      Rng rng = make_stream(seed, 1 + c);
      return method1_chain(stores, models, data, opts, rng);
    }));
  }
  std::vector<PosteriorReport> chains;
  for (auto& f : futures) chains.push_back(f.get());

  const auto n_chains = static_cast<double>(chains.size());
  PosteriorReport pooled;
  pooled.model_names = chains.front().model_names;
  pooled.prior_weights_used = chains.front().prior_weights_used;
  const Eigen::Index k = pooled.prior_weights_used.size();
  ProbabilityEstimate rb{Eigen::VectorXd::Zero(k), Eigen::VectorXd::Zero(k)};
  ProbabilityEstimate ind{Eigen::VectorXd::Zero(k), Eigen::VectorXd::Zero(k)};
  for (PosteriorReport& chain : chains) {
    rb.probs += chain.rao_blackwell->probs;
    rb.mcse += chain.rao_blackwell->mcse.array().square().matrix();
    ind.probs += chain.indicator->probs;
    ind.mcse += chain.indicator->mcse.array().square().matrix();
    pooled.traces.push_back(std::move(chain.traces.front()));
  }
  rb.probs /= n_chains;
  ind.probs /= n_chains;
  rb.mcse = rb.mcse.array().sqrt().matrix() / n_chains;
  ind.mcse = ind.mcse.array().sqrt().matrix() / n_chains;
  pooled.rao_blackwell = rb;
  pooled.indicator = ind;
  pooled.seed = seed;
  pooled.iterations = options.iterations;
  pooled.burnin = options.effective_burnin();
  pooled.chains = static_cast<std::int64_t>(chains.size());
  add_visit_diagnostics(pooled);
  finalize_report(pooled);
  return pooled;
}

TransitionEstimate method2_transition(const std::vector<SampleStore>& stores, const ModelSet& models,
                                      const Dataset& data, std::int64_t draws_per_model, Rng& rng) {
  validate_stores(stores, models);
  require(draws_per_model >= 1, "Method 2 needs at least one draw per model");
  const auto n_models = static_cast<Eigen::Index>(models.size());

  struct Row {
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance;
    Eigen::MatrixXd mean_covariance;
  };
  std::vector<std::uint64_t> row_seeds(models.size());
  for (auto& s : row_seeds) s = rng();

  // Draws are stratified over contiguous blocks of the store. The spread of
  // the block means then reflects both the resampling noise and the
  // autocorrelation of the Stage-1 chain the store came from.
  std::vector<std::future<Row>> futures;
  for (std::size_t h = 0; h < models.size(); ++h) {
    futures.push_back(std::async(std::launch::async, [&, h] {
      Rng row_rng = make_stream(row_seeds[h], h);
      const SampleStore& store = stores[h];
      const std::int64_t store_rows = store.draws();
      const std::int64_t blocks = std::min<std::int64_t>({kBatches, store_rows, draws_per_model});
      CompensatedSum sum(n_models);
      Eigen::MatrixXd outer = Eigen::MatrixXd::Zero(n_models, n_models);
      std::vector<Eigen::VectorXd> block_means;
      for (std::int64_t b = 0; b < blocks; ++b) {
        const std::int64_t lo = b * store_rows / blocks;
        const std::int64_t hi = (b + 1) * store_rows / blocks;
        const std::int64_t n_b = draws_per_model / blocks + (b < draws_per_model % blocks ? 1 : 0);
        std::uniform_int_distribution<std::int64_t> pick(lo, hi - 1);
        CompensatedSum block(n_models);
        for (std::int64_t i = 0; i < n_b; ++i) {
          const Eigen::Index r = pick(row_rng);
          const Eigen::VectorXd p = full_conditional_model_probs(store.palette(r), models, data, store.hyper(r));
          sum.add(p);
          block.add(p);
          outer.noalias() += p * p.transpose();
        }
        block_means.push_back(block.value() / static_cast<double>(n_b));
      }
      const auto n = static_cast<double>(draws_per_model);
      Row row;
      row.mean = sum.value() / n;
      row.covariance = draws_per_model > 1
                           ? Eigen::MatrixXd((outer - n * row.mean * row.mean.transpose()) / (n - 1.0))
                           : Eigen::MatrixXd::Zero(n_models, n_models);
      if (blocks >= 2) {
        Eigen::MatrixXd m(n_models, blocks);
        for (std::int64_t b = 0; b < blocks; ++b) m.col(b) = block_means[static_cast<std::size_t>(b)];
        const Eigen::MatrixXd centered = m.colwise() - m.rowwise().mean();
        const auto nb = static_cast<double>(blocks);
        row.mean_covariance = centered * centered.transpose() / ((nb - 1.0) * nb);
      } else {
        row.mean_covariance = row.covariance / n;
      }
      return row;
    }));
  }

  TransitionEstimate est;
  est.matrix.resize(n_models, n_models);
  for (std::size_t h = 0; h < models.size(); ++h) {
    Row row = futures[h].get();
    // absorb floating error only; each probability vector already sums to one
    est.matrix.row(static_cast<Eigen::Index>(h)) = row.mean.transpose() / row.mean.sum();
    est.counts.push_back(draws_per_model);
    est.row_covariances.push_back(std::move(row.covariance));
    est.mean_covariances.push_back(std::move(row.mean_covariance));
  }
  est.validate();
  return est;
}

namespace {

bool strongly_connected(const Eigen::MatrixXd& p) {
  const Eigen::Index k = p.rows();
  auto reaches_all = [&](bool transpose) {
    std::vector<bool> seen(static_cast<std::size_t>(k), false);
    std::vector<Eigen::Index> stack{0};
    seen[0] = true;
    while (!stack.empty()) {
      const Eigen::Index a = stack.back();
      stack.pop_back();
      for (Eigen::Index b = 0; b < k; ++b) {
        const double w = transpose ? p(b, a) : p(a, b);
        if (w > 0.0 && !seen[static_cast<std::size_t>(b)]) {
          seen[static_cast<std::size_t>(b)] = true;
          stack.push_back(b);
        }
      }
    }
    return std::all_of(seen.begin(), seen.end(), [](bool s) { return s; });
  };
  return reaches_all(false) && reaches_all(true);
}

}  // namespace

Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& transition) {
  const Eigen::Index k = transition.rows();
  require(k >= 1 && transition.cols() == k, "transition matrix must be square and nonempty");
  require(transition.allFinite(), "transition matrix has non-finite entries");
  for (Eigen::Index h = 0; h < k; ++h) {
    require((transition.row(h).array() >= 0.0).all(), fmt::format("transition row {} has negative entries", h + 1));
    require(std::abs(transition.row(h).sum() - 1.0) <= 1e-8, fmt::format("transition row {} does not sum to one", h + 1));
  }
  if (!strongly_connected(transition)) {
    throw DegenerateError("no unique stationary distribution: transition matrix is reducible");
  }

  // (P' - I) pi = 0 with the last equation replaced by sum(pi) = 1.
  Eigen::MatrixXd system = transition.transpose() - Eigen::MatrixXd::Identity(k, k);
  system.row(k - 1).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(k);
  rhs[k - 1] = 1.0;
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(system);
  if (!lu.isInvertible()) throw DegenerateError("no unique stationary distribution: singular system");
  Eigen::VectorXd pi = lu.solve(rhs);
  // one round of iterative refinement
  pi += lu.solve(rhs - system * pi);
  pi /= pi.sum();

  const double residual = (pi.transpose() * transition - pi.transpose()).cwiseAbs().maxCoeff();
  if (!(residual < 1e-10)) {
    throw DegenerateError(fmt::format("stationary solve residual {:.3g} exceeds 1e-10", residual));
  }
  return pi;
}

Eigen::VectorXd stationary_standard_errors(const TransitionEstimate& estimate, const Eigen::VectorXd& stationary) {
  const Eigen::Index k = estimate.matrix.rows();
  require(stationary.size() == k, "stationary vector length differs from the transition matrix");
  const bool blocked = static_cast<Eigen::Index>(estimate.mean_covariances.size()) == k;
  require(blocked || static_cast<Eigen::Index>(estimate.row_covariances.size()) == k,
          "transition estimate lacks row covariances");
  // Perturbing row h by e changes pi by pi_h e Z with Z the fundamental matrix.
  const Eigen::MatrixXd fundamental =
      (Eigen::MatrixXd::Identity(k, k) - estimate.matrix + Eigen::VectorXd::Ones(k) * stationary.transpose()).inverse();
  Eigen::MatrixXd variance = Eigen::MatrixXd::Zero(k, k);
  for (Eigen::Index h = 0; h < k; ++h) {
    const auto hs = static_cast<std::size_t>(h);
    const Eigen::MatrixXd cov = blocked ? estimate.mean_covariances[hs]
                                        : Eigen::MatrixXd(estimate.row_covariances[hs] /
                                                          static_cast<double>(estimate.counts[hs]));
    variance += stationary[h] * stationary[h] * fundamental.transpose() * cov * fundamental;
  }
  return variance.diagonal().cwiseMax(0.0).cwiseSqrt();
}

Eigen::MatrixXd bayes_factor_matrix(const Eigen::VectorXd& posterior, const Eigen::VectorXd& prior) {
  require(posterior.size() == prior.size() && posterior.size() >= 1, "posterior and prior lengths differ");
  const Eigen::Index k = posterior.size();
  Eigen::VectorXd log_ratio(k);
  for (Eigen::Index j = 0; j < k; ++j) {
    if (!(posterior[j] > 0.0) || !(prior[j] > 0.0)) {
      throw DegenerateError(fmt::format(
          "model {} has zero probability: model never visited; increase iterations or tune priors", j + 1));
    }
    log_ratio[j] = std::log(posterior[j]) - std::log(prior[j]);
  }
  Eigen::MatrixXd bf(k, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    for (Eigen::Index l = 0; l < k; ++l) bf(j, l) = j == l ? 1.0 : std::exp(log_ratio[j] - log_ratio[l]);
  }
  return bf;
}

Eigen::VectorXd reweight_under_prior(const Eigen::VectorXd& probs, const Eigen::VectorXd& old_prior,
                                     const Eigen::VectorXd& new_prior) {
  require(probs.size() == old_prior.size() && probs.size() == new_prior.size(), "reweight: vector lengths differ");
  Eigen::VectorXd log_w(probs.size());
  for (Eigen::Index k = 0; k < probs.size(); ++k) {
    if (!(probs[k] > 0.0) || !(old_prior[k] > 0.0) || !(new_prior[k] > 0.0)) {
      throw DegenerateError(fmt::format("reweight: model {} has a zero probability", k + 1));
    }
    log_w[k] = std::log(probs[k]) + std::log(new_prior[k]) - std::log(old_prior[k]);
  }
  return softmax(log_w);
}

Eigen::VectorXd reweight_standard_errors(const ProbabilityEstimate& estimate, const Eigen::VectorXd& old_prior,
                                         const Eigen::VectorXd& new_prior) {
  const Eigen::VectorXd moved = reweight_under_prior(estimate.probs, old_prior, new_prior);
  // logit of each entry shifts by a constant when the rest absorb changes proportionally
  Eigen::VectorXd se(moved.size());
  for (Eigen::Index k = 0; k < moved.size(); ++k) {
    const double p = estimate.probs[k];
    const double q = moved[k];
    se[k] = (p > 0.0 && p < 1.0) ? estimate.mcse[k] * (q * (1.0 - q)) / (p * (1.0 - p)) : 0.0;
  }
  return se;
}

TunedPriors tune_model_priors(const std::vector<SampleStore>& stores, const ModelSet& models, const Dataset& data,
                              const Eigen::VectorXd& target, int rounds, std::int64_t iters_per_round, Rng& rng) {
  require(rounds >= 1, "prior tuning needs at least one round");
  require(target.size() == static_cast<Eigen::Index>(models.size()), "tuning target length differs from model count");
  require((target.array() > 0.0).all() && std::abs(target.sum() - 1.0) <= 1e-9, "tuning target must be a simplex");

  Eigen::VectorXd log_w = models.prior_weights().array().log().matrix();
  TunedPriors result;
  for (int round = 1; round <= rounds; ++round) {
    const Eigen::VectorXd weights = softmax(log_w).cwiseMax(1e-300);
    const ModelSet current = models.with_weights(weights);
    Method1Options opts;
    opts.iterations = iters_per_round;
    const PosteriorReport report = method1_chain(stores, current, data, opts, rng);

    result.weights = current.prior_weights();
    result.visit_frequencies = report.indicator->probs;
    result.rounds_used = round;
    if ((result.visit_frequencies - target).cwiseAbs().maxCoeff() <= 0.1) {
      result.converged = true;
      return result;
    }
    const Eigen::VectorXd& estimate = report.rao_blackwell->probs;
    for (Eigen::Index k = 0; k < log_w.size(); ++k) {
      const double step = std::log(target[k]) - std::log(std::max(estimate[k], 1e-300));
      log_w[k] += std::clamp(step, -5.0, 5.0);
    }
    log_w.array() -= log_w.maxCoeff();
  }
  return result;
}

void finalize_report(PosteriorReport& report) {
  const ProbabilityEstimate& est = report.preferred();
  if ((est.probs.array() > 0.0).all()) {
    report.bayes_factors = bayes_factor_matrix(est.probs, report.prior_weights_used);
  } else {
    report.bayes_factors.resize(0, 0);
    const std::string message =
        "Bayes factors unavailable: a model has zero estimated probability; increase iterations or tune priors";
    if (std::find(report.diagnostics.begin(), report.diagnostics.end(), message) == report.diagnostics.end()) {
      report.diagnostics.push_back(message);
    }
  }
}

}  // namespace palette
