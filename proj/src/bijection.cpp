#include "palette/bijection.hpp"

#include <cmath>
#include <vector>

#include <fmt/format.h>

#include "palette/error.hpp"

namespace palette {

LinearBijection::LinearBijection(Eigen::MatrixXd matrix) : matrix_(std::move(matrix)) {
  require(matrix_.rows() > 0 && matrix_.rows() == matrix_.cols(),
          fmt::format("bijection matrix must be square and nonempty, got {}x{}", matrix_.rows(),
                      matrix_.cols()));
  require(matrix_.allFinite(), "bijection matrix has non-finite entries");

  lu_.compute(matrix_);
  // log|det A| from the LU diagonal avoids overflow for larger d.
  const Eigen::MatrixXd& lu = lu_.matrixLU();
  double log_abs_det = 0.0;
  for (Eigen::Index i = 0; i < lu.rows(); ++i) {
    const double pivot = std::abs(lu(i, i));
    require(pivot > 0.0, "bijection matrix is singular");
    log_abs_det += std::log(pivot);
  }
  // reciprocal condition estimate guards against nearly singular maps
  require(lu_.rcond() > 1e-12, fmt::format("bijection matrix is numerically singular (rcond {:.3g})",
                                           lu_.rcond()));
  log_abs_det_ = log_abs_det;
}

LinearBijection LinearBijection::identity(Eigen::Index d) {
  return LinearBijection(Eigen::MatrixXd::Identity(d, d));
}

LinearBijection LinearBijection::permutation(const std::vector<Eigen::Index>& order) {
  const auto d = static_cast<Eigen::Index>(order.size());
  std::vector<bool> seen(order.size(), false);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(d, d);
  for (Eigen::Index row = 0; row < d; ++row) {
    const Eigen::Index col = order[static_cast<std::size_t>(row)];
    require(col >= 0 && col < d && !seen[static_cast<std::size_t>(col)],
            "permutation bijection: order is not a permutation");
    seen[static_cast<std::size_t>(col)] = true;
    m(row, col) = 1.0;
  }
  return LinearBijection(std::move(m));
}

Eigen::VectorXd LinearBijection::apply(const Eigen::VectorXd& psi) const {
  require(psi.size() == dim(),
          fmt::format("palette has dimension {}, bijection expects {}", psi.size(), dim()));
  return matrix_ * psi;
}

Eigen::VectorXd LinearBijection::invert(const Eigen::VectorXd& extended) const {
  require(extended.size() == dim(),
          fmt::format("extended parameter has dimension {}, bijection expects {}", extended.size(), dim()));
  return lu_.solve(extended);
}

}  // namespace palette
