#include "palette/log_sum_exp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "palette/error.hpp"

namespace palette {

double log_sum_exp(std::span<const double> values) {
  if (values.empty()) throw DegenerateError("log_sum_exp: empty input");
  const double max_value = *std::max_element(values.begin(), values.end());
  if (std::isnan(max_value)) throw DegenerateError("log_sum_exp: NaN input");
  if (max_value == -std::numeric_limits<double>::infinity()) {
    throw DegenerateError("log_sum_exp: all entries are -inf");
  }
  if (values.size() == 1 || std::isinf(max_value)) return max_value;

  double sum = 0.0;
  for (double v : values) {
    if (std::isnan(v)) throw DegenerateError("log_sum_exp: NaN input");
    sum += std::exp(v - max_value);
  }
  return max_value + std::log(sum);
}

Eigen::VectorXd softmax(const Eigen::VectorXd& log_values) {
  const double normalizer = log_sum_exp(log_values);
  Eigen::VectorXd out(log_values.size());
  for (Eigen::Index i = 0; i < log_values.size(); ++i) out[i] = std::exp(log_values[i] - normalizer);
  // absorb the last ulp so the simplex sums to one
  out /= out.sum();
  return out;
}

}  // namespace palette
