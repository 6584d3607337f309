#include "focusfic/linalg.hpp"

#include "focusfic/error.hpp"

#include <fmt/format.h>

namespace focusfic {

SpdSolver::SpdSolver(const Eigen::MatrixXd& matrix, const char* what, double max_condition)
{
    if (matrix.rows() != matrix.cols() || matrix.rows() == 0) {
        throw NumericalError(fmt::format("{} is not a nonempty square matrix", what));
    }
    const double scale = matrix.cwiseAbs().maxCoeff();
    if (!(scale > 0.0) || !matrix.allFinite()) {
        throw NumericalError(fmt::format("{} is zero or not finite", what));
    }
    if ((matrix - matrix.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale) {
        throw NumericalError(fmt::format("{} is not symmetric", what));
    }
    const Eigen::VectorXd diag = matrix.diagonal();
    if (!(diag.minCoeff() > 0.0)) {
        throw NumericalError(fmt::format("{} is not positive definite", what));
    }
    inv_scale_ = diag.cwiseSqrt().cwiseInverse();
    Eigen::MatrixXd eq = inv_scale_.asDiagonal() * (0.5 * (matrix + matrix.transpose())) * inv_scale_.asDiagonal();

    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(eq, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    if (!(lo > 0.0)) {
        throw NumericalError(fmt::format("{} is not positive definite", what));
    }
    condition_ = hi / lo;
    if (condition_ > max_condition) {
        throw NumericalError(fmt::format("{} is ill-conditioned (condition number {:.3g})", what, condition_));
    }
    llt_.compute(eq);
    if (llt_.info() != Eigen::Success) {
        throw NumericalError(fmt::format("Cholesky factorization of {} failed", what));
    }
}

Eigen::VectorXd SpdSolver::solve(const Eigen::VectorXd& rhs) const
{
    return inv_scale_.asDiagonal() * llt_.solve(inv_scale_.asDiagonal() * rhs);
}

Eigen::MatrixXd SpdSolver::solve(const Eigen::MatrixXd& rhs) const
{
    return inv_scale_.asDiagonal() * llt_.solve(inv_scale_.asDiagonal() * rhs);
}

double SpdSolver::quadratic(const Eigen::VectorXd& rhs) const
{
    const Eigen::VectorXd scaled = inv_scale_.asDiagonal() * rhs;
    return scaled.dot(llt_.solve(scaled));
}

} // namespace focusfic
