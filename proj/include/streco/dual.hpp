#ifndef STRECO_DUAL_HPP
#define STRECO_DUAL_HPP

#include <memory>

#include "streco/secondorder.hpp"

namespace streco {

/// The dual operator lambda -> mass-projection of the weighted equation
/// residual of the augmented primal solve: T lambda = M^{-1} B A^{-1} B^T
/// lambda on the multiplier space with its L2 mass inner product. Symmetric
/// positive definite for r > 0.
class DualOperator {
 public:
  explicit DualOperator(const SaddleSystem& system);

  int multiplier_dim() const;
  const SaddleSystem& system() const { return *system_; }

  /// A^{-1} v on the primal space.
  Eigen::VectorXd solve_primal(const Eigen::VectorXd& v) const;
  /// T lambda as a multiplier coefficient vector (mass-orthogonal
  /// projection of the residual function).
  Eigen::VectorXd apply(const Eigen::VectorXd& lambda) const;
  /// <u, v> in the multiplier mass inner product.
  double inner(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const;
  /// M^{-1} v (mass preconditioner).
  Eigen::VectorXd precondition(const Eigen::VectorXd& v) const;

 private:
  struct Impl;
  std::shared_ptr<Impl> impl_;
  std::shared_ptr<SaddleSystem> system_;
};

/// T lambda for the second-order operator (role-naming wrapper).
Eigen::VectorXd apply_Tr(const DualOperator& op, const Eigen::VectorXd& lambda);
/// Same operator on the product multiplier space of the first-order
/// formulation; the vector concatenates (lambda, mu).
Eigen::VectorXd apply_Tr_mixed(const DualOperator& op,
                               const Eigen::VectorXd& lambda_mu);

struct DualOptions {
  double tol = 1e-10;
  int maxit = -1;  // -1: 4 x multiplier dimension
};

struct DualTrace {
  std::vector<double> residuals;   // preconditioned residual norm per iteration
  std::vector<double> functional;  // dual functional value per iteration
};

/// Conjugate-gradient minimization of the dual functional
/// J**(lambda) = 1/2 <T lambda, lambda> - <B y_0, lambda>, y_0 the solution
/// of A y_0 = l1; recovers y = A^{-1}(l1 - B^T lambda).
ReconstructionReport minimize_dual(const DualOperator& op,
                                   const DualOptions& options = {},
                                   DualTrace* trace = nullptr);

}  // namespace streco

#endif
