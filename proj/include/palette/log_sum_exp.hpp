#pragma once

#include <span>

#include <Eigen/Dense>

namespace palette {

// log(sum_i exp(values[i])), shifted by the maximum so that large negative
// arguments do not underflow. -inf entries contribute nothing.
// Throws DegenerateError when every entry is -inf (or the input is empty).
double log_sum_exp(std::span<const double> values);

inline double log_sum_exp(const Eigen::VectorXd& values) {
  return log_sum_exp(std::span<const double>(values.data(), static_cast<std::size_t>(values.size())));
}

// exp(values - log_sum_exp(values)); entries sum to one.
Eigen::VectorXd softmax(const Eigen::VectorXd& log_values);

}  // namespace palette
