#pragma once

#include <Eigen/Dense>

namespace focusfic {

/// Symmetric positive definite factorization with a condition-number guard.
/// The matrix is equilibrated by its diagonal first (A = D S D with unit
/// diagonal S); the guard applies to cond(S) so that rescaling a covariate does
/// not change the verdict. Solves go through the Cholesky factor of S.
class SpdSolver {
public:
    static constexpr double default_max_condition = 1e12;

    /// Throws NumericalError when the matrix is not symmetric positive definite
    /// or its condition number exceeds `max_condition`. `what` names the matrix
    /// in the error message.
    explicit SpdSolver(const Eigen::MatrixXd& matrix, const char* what = "matrix",
                       double max_condition = default_max_condition);

    Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;
    Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const;

    /// rhs^T A^{-1} rhs
    double quadratic(const Eigen::VectorXd& rhs) const;

    double condition() const { return condition_; }
    Eigen::Index size() const { return llt_.rows(); }

private:
    Eigen::LLT<Eigen::MatrixXd> llt_;
    Eigen::VectorXd inv_scale_;
    double condition_ = 0.0;
};

} // namespace focusfic
