#include "dqsg/spd_solver.hpp"

#include <cmath>

namespace dqsg {

SpdSolver::SpdSolver(const SparseMatrix& a, Backend backend)
    : n_(a.rows()), backend_(backend == Backend::automatic ? Backend::sparse : backend) {
  if (a.rows() != a.cols()) throw std::invalid_argument("SpdSolver: matrix is not square");
  if (backend_ == Backend::dense) {
    dense_ = std::make_unique<Eigen::LLT<Eigen::MatrixXd>>(Eigen::MatrixXd(a));
    if (dense_->info() != Eigen::Success)
      throw NumericalError("dense Cholesky failed (matrix not positive definite)");
  } else {
    sparse_ = std::make_unique<
        Eigen::SimplicialLLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>>>(a);
    if (sparse_->info() != Eigen::Success)
      throw NumericalError("sparse Cholesky failed (matrix not positive definite)");
  }
}

SpdSolver::~SpdSolver() = default;
SpdSolver::SpdSolver(SpdSolver&&) noexcept = default;
SpdSolver& SpdSolver::operator=(SpdSolver&&) noexcept = default;

double SpdSolver::log_det() const {
  double s = 0.0;
  if (dense_) {
    const auto& l = dense_->matrixLLT();
    for (Eigen::Index i = 0; i < n_; ++i) s += std::log(l(i, i));
  } else {
    const SparseMatrix l = sparse_->matrixL();
    for (Eigen::Index i = 0; i < n_; ++i) s += std::log(l.coeff(i, i));
  }
  return 2.0 * s;
}

Eigen::VectorXd SpdSolver::solve(const Eigen::VectorXd& b) const {
  if (dense_) return dense_->solve(b);
  return sparse_->solve(b);
}

Eigen::VectorXd SpdSolver::inverse_column(Eigen::Index j) const {
  Eigen::VectorXd e = Eigen::VectorXd::Zero(n_);
  e[j] = 1.0;
  return solve(e);
}

double SpdSolver::inverse_diagonal(Eigen::Index i) const {
  // A^{-1}_ii = |L^{-1} P e_i|^2
  Eigen::VectorXd e = Eigen::VectorXd::Zero(n_);
  if (dense_) {
    e[i] = 1.0;
    dense_->matrixL().solveInPlace(e);
  } else {
    const auto& perm = sparse_->permutationP().indices();
    e[perm.size() > 0 ? perm[i] : i] = 1.0;
    sparse_->matrixL().solveInPlace(e);
  }
  return e.squaredNorm();
}

Eigen::VectorXd SpdSolver::color_inverse(const Eigen::VectorXd& z) const {
  // A = L L^T (up to permutation), so L^{-T} z has covariance A^{-1}.
  Eigen::VectorXd x = z;
  if (dense_) {
    dense_->matrixU().solveInPlace(x);
    return x;
  }
  sparse_->matrixU().solveInPlace(x);
  if (sparse_->permutationPinv().size() == 0) return x;
  return sparse_->permutationPinv() * x;
}

}  // namespace dqsg
