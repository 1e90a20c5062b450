#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "palette/model.hpp"

namespace palette {

// Intercept plus one column per term; a term is the elementwise product of
// one or more covariate columns (a single column, or an interaction).
struct LinearPredictor {
  std::vector<std::vector<std::string>> terms;
  // Subtract each term's sample mean before use.
  bool center = false;

  Eigen::Index n_coefficients() const { return 1 + static_cast<Eigen::Index>(terms.size()); }
  // n x n_coefficients; first column is all ones.
  Eigen::MatrixXd design(const Dataset& data) const;
};

}  // namespace palette
