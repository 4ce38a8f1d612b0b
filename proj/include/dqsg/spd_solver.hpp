#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <memory>
#include <stdexcept>
#include <string>

namespace dqsg {

struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Backend { automatic, dense, sparse };

using SparseMatrix = Eigen::SparseMatrix<double>;

// Cholesky factorization of a symmetric positive-definite matrix.
//
// The sparse path (AMD-ordered simplicial LLT) is what `automatic` selects;
// the dense path is kept as an independent cross-check.
class SpdSolver {
public:
  SpdSolver(const SparseMatrix& a, Backend backend = Backend::automatic);
  ~SpdSolver();
  SpdSolver(SpdSolver&&) noexcept;
  SpdSolver& operator=(SpdSolver&&) noexcept;

  Eigen::Index size() const { return n_; }
  Backend backend() const { return backend_; }

  double log_det() const;
  Eigen::VectorXd solve(const Eigen::VectorXd& b) const;
  Eigen::VectorXd inverse_column(Eigen::Index j) const;
  double inverse_diagonal(Eigen::Index i) const;

  // Maps z ~ N(0, I) to x ~ N(0, A^{-1}).
  Eigen::VectorXd color_inverse(const Eigen::VectorXd& z) const;

private:
  Eigen::Index n_;
  Backend backend_;
  std::unique_ptr<Eigen::LLT<Eigen::MatrixXd>> dense_;
  std::unique_ptr<Eigen::SimplicialLLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>>>
      sparse_;
};

}  // namespace dqsg
