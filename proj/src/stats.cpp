#include "palette/stats.hpp"

#include <algorithm>

#include "palette/error.hpp"

namespace palette {

BatchMeans::BatchMeans(std::int64_t length, Eigen::Index dim, std::int64_t batches) : length_(length), total_(dim) {
  require(length >= 1 && batches >= 1, "batch means needs a positive length and batch count");
  const std::int64_t b = std::min(batches, length);
  batch_sums_.assign(static_cast<std::size_t>(b), CompensatedSum(dim));
  batch_counts_.assign(static_cast<std::size_t>(b), 0);
}

void BatchMeans::add(const Eigen::VectorXd& x) {
  require(seen_ < length_, "batch means: more values than declared");
  const auto b = static_cast<std::int64_t>(batch_sums_.size());
  // batch index of element i: floor(i * b / length)
  const auto batch = static_cast<std::size_t>((seen_ * b) / length_);
  batch_sums_[batch].add(x);
  ++batch_counts_[batch];
  total_.add(x);
  ++seen_;
}

Eigen::VectorXd BatchMeans::mean() const {
  require(seen_ > 0, "batch means: no values");
  return total_.value() / static_cast<double>(seen_);
}

Eigen::VectorXd BatchMeans::standard_error() const {
  const Eigen::VectorXd overall = mean();
  const auto b = static_cast<Eigen::Index>(batch_sums_.size());
  if (b < 2) return Eigen::VectorXd::Zero(overall.size());
  Eigen::VectorXd ss = Eigen::VectorXd::Zero(overall.size());
  for (std::size_t i = 0; i < batch_sums_.size(); ++i) {
    const Eigen::VectorXd m = batch_sums_[i].value() / static_cast<double>(batch_counts_[i]);
    ss += (m - overall).array().square().matrix();
  }
  // variance of a batch mean, scaled to the overall mean
  return (ss / static_cast<double>(b - 1) / static_cast<double>(b)).array().sqrt().matrix();
}

}  // namespace palette
