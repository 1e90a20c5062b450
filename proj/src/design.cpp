#include "palette/design.hpp"

#include "palette/error.hpp"

namespace palette {

Eigen::MatrixXd LinearPredictor::design(const Dataset& data) const {
  const Eigen::Index n = data.rows();
  Eigen::MatrixXd x(n, n_coefficients());
  x.col(0).setOnes();
  for (std::size_t t = 0; t < terms.size(); ++t) {
    require(!terms[t].empty(), "design term with no columns");
    Eigen::VectorXd column = Eigen::VectorXd::Ones(n);
    for (const std::string& name : terms[t]) column.array() *= data.covariate(name).array();
    if (center && n > 0) column.array() -= column.mean();
    x.col(static_cast<Eigen::Index>(t) + 1) = column;
  }
  return x;
}

}  // namespace palette
