#include "streco/dual.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#include <cmath>

namespace streco {

struct DualOperator::Impl {
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> A_chol;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> A_lu;
  bool use_lu = false;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> M_chol;
};

DualOperator::DualOperator(const SaddleSystem& system)
    : impl_(std::make_shared<Impl>()),
      system_(std::make_shared<SaddleSystem>(system)) {
  const bool mixed = system.primal_spaces.size() > 1;
  const bool augmented = mixed ? (system.r > 0.0 && system.r2 > 0.0)
                               : system.r > 0.0;
  if (!augmented)
    throw SingularAr("dual operator requires a positive augmentation parameter");
  impl_->A_chol.compute(system_->A);
  if (impl_->A_chol.info() != Eigen::Success) {
    impl_->A_lu.compute(system_->A);
    if (impl_->A_lu.info() != Eigen::Success)
      throw SingularAr("dual operator: primal block factorization failed");
    impl_->use_lu = true;
  }
  impl_->M_chol.compute(system_->multiplier_gram);
  if (impl_->M_chol.info() != Eigen::Success)
    throw FactorizationFailure("dual operator: multiplier mass factorization failed");
}

int DualOperator::multiplier_dim() const { return system_->multiplier_dim(); }

Eigen::VectorXd DualOperator::solve_primal(const Eigen::VectorXd& v) const {
  if (impl_->use_lu) return impl_->A_lu.solve(v);
  return impl_->A_chol.solve(v);
}

Eigen::VectorXd DualOperator::apply(const Eigen::VectorXd& lambda) const {
  const Eigen::VectorXd y = solve_primal(system_->B.transpose() * lambda);
  return impl_->M_chol.solve(system_->B * y);
}

double DualOperator::inner(const Eigen::VectorXd& u,
                           const Eigen::VectorXd& v) const {
  return u.dot(system_->multiplier_gram * v);
}

Eigen::VectorXd DualOperator::precondition(const Eigen::VectorXd& v) const {
  return impl_->M_chol.solve(v);
}

Eigen::VectorXd apply_Tr(const DualOperator& op,
                         const Eigen::VectorXd& lambda) {
  return op.apply(lambda);
}

Eigen::VectorXd apply_Tr_mixed(const DualOperator& op,
                               const Eigen::VectorXd& lambda_mu) {
  return op.apply(lambda_mu);
}

ReconstructionReport minimize_dual(const DualOperator& op,
                                   const DualOptions& options,
                                   DualTrace* trace) {
  const SaddleSystem& s = op.system();
  const int nm = s.multiplier_dim();
  const int maxit = options.maxit > 0 ? options.maxit : 4 * nm;

  // rhs of the dual gradient: b_k = (B y0)_k with A y0 = l1.
  const Eigen::VectorXd y0 = op.solve_primal(s.l1);
  const Eigen::VectorXd b = s.B * y0;

  // PCG on S lambda = b, S = B A^{-1} B^T, preconditioner M (the multiplier
  // mass), which realizes CG in the L2 multiplier inner product.
  Eigen::VectorXd lambda = Eigen::VectorXd::Zero(nm);
  Eigen::VectorXd r = b;
  Eigen::VectorXd z = op.precondition(r);
  double rz = r.dot(z);
  const double scale0 = std::sqrt(std::max(rz, 0.0));
  int iters = 0;
  auto functional = [&](const Eigen::VectorXd& lam) {
    const Eigen::VectorXd y = op.solve_primal(s.B.transpose() * lam);
    return 0.5 * lam.dot(s.B * y) - b.dot(lam);
  };
  if (trace) {
    trace->residuals.push_back(scale0);
    trace->functional.push_back(0.0);
  }
  if (scale0 > 0.0) {
    Eigen::VectorXd p = z;
    for (; iters < maxit; ++iters) {
      const double rel = std::sqrt(std::max(rz, 0.0)) / scale0;
      if (rel <= options.tol) break;
      const Eigen::VectorXd Sp =
          s.B * op.solve_primal(s.B.transpose() * p);
      const double pSp = p.dot(Sp);
      if (pSp <= 0.0)
        throw SingularAr("minimize_dual: operator lost positive definiteness");
      const double a = rz / pSp;
      lambda += a * p;
      r -= a * Sp;
      z = op.precondition(r);
      const double rz_new = r.dot(z);
      if (trace) {
        trace->residuals.push_back(std::sqrt(std::max(rz_new, 0.0)));
        trace->functional.push_back(functional(lambda));
      }
      p = z + (rz_new / rz) * p;
      rz = rz_new;
    }
    if (std::sqrt(std::max(rz, 0.0)) / scale0 > options.tol)
      throw MaxIterationsExceeded(
          "minimize_dual: no convergence in " + std::to_string(maxit) +
          " iterations (relative residual " +
          std::to_string(std::sqrt(std::max(rz, 0.0)) / scale0) + ")");
  }

  const Eigen::VectorXd y =
      op.solve_primal(s.l1 - s.B.transpose() * lambda);
  Eigen::VectorXd u(s.primal_dim() + nm);
  u << y, lambda;
  ReconstructionReport rep = build_report(s, u);
  rep.stats.iterations = iters;
  rep.stats.final_residual = scale0 > 0.0
                                 ? std::sqrt(std::max(rz, 0.0)) / scale0
                                 : 0.0;
  return rep;
}

}  // namespace streco
