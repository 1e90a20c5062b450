#pragma once

#include <memory>
#include <vector>

#include <Eigen/Dense>

namespace palette {

// Invertible map from the palette psi to a model's extended parameter vector
// Theta = (theta, u). Implementations are immutable.
class Bijection {
 public:
  virtual ~Bijection() = default;

  virtual Eigen::Index dim() const = 0;
  virtual Eigen::VectorXd apply(const Eigen::VectorXd& psi) const = 0;
  virtual Eigen::VectorXd invert(const Eigen::VectorXd& extended) const = 0;
  // log |d Theta / d psi| evaluated at psi.
  virtual double log_abs_jacobian(const Eigen::VectorXd& psi) const = 0;
};

// Theta = A psi. The Jacobian is the constant |det A|.
class LinearBijection final : public Bijection {
 public:
  // Throws ContractViolation if `matrix` is not square, has non-finite
  // entries, or is numerically singular.
  explicit LinearBijection(Eigen::MatrixXd matrix);

  static LinearBijection identity(Eigen::Index d);
  // Row i of the result picks psi[order[i]]; `order` must be a permutation of 0..d-1.
  static LinearBijection permutation(const std::vector<Eigen::Index>& order);

  Eigen::Index dim() const override { return matrix_.rows(); }
  Eigen::VectorXd apply(const Eigen::VectorXd& psi) const override;
  Eigen::VectorXd invert(const Eigen::VectorXd& extended) const override;
  double log_abs_jacobian(const Eigen::VectorXd&) const override { return log_abs_det_; }

  const Eigen::MatrixXd& matrix() const { return matrix_; }
  double log_abs_det() const { return log_abs_det_; }

 private:
  Eigen::MatrixXd matrix_;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
  double log_abs_det_ = 0.0;
};

}  // namespace palette
