#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace palette {

// Neumaier-compensated running sum of vectors.
class CompensatedSum {
 public:
  explicit CompensatedSum(Eigen::Index size) : sum_(Eigen::VectorXd::Zero(size)), carry_(Eigen::VectorXd::Zero(size)) {}

  void add(const Eigen::VectorXd& x) {
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double t = sum_[i] + x[i];
      if (std::abs(sum_[i]) >= std::abs(x[i])) {
        carry_[i] += (sum_[i] - t) + x[i];
      } else {
        carry_[i] += (x[i] - t) + sum_[i];
      }
      sum_[i] = t;
    }
  }
  Eigen::VectorXd value() const { return sum_ + carry_; }

 private:
  Eigen::VectorXd sum_;
  Eigen::VectorXd carry_;
};

// Streaming batch-means estimator of the Monte Carlo standard error of the
// mean of a vector-valued series of known length.
class BatchMeans {
 public:
  BatchMeans(std::int64_t length, Eigen::Index dim, std::int64_t batches = 20);

  void add(const Eigen::VectorXd& x);
  Eigen::VectorXd mean() const;
  // Zero when fewer than two batches are available.
  Eigen::VectorXd standard_error() const;
  std::int64_t batches() const { return static_cast<std::int64_t>(batch_sums_.size()); }

 private:
  std::int64_t length_;
  std::int64_t seen_ = 0;
  std::vector<CompensatedSum> batch_sums_;
  std::vector<std::int64_t> batch_counts_;
  CompensatedSum total_;
};

}  // namespace palette
