#pragma once

#include "focusfic/model.hpp"

#include <string>
#include <string_view>

namespace focusfic {

enum class FocusKind { linear_predictor, mean_response, exceedance, coefficient_combination };

std::string to_string(FocusKind kind);
FocusKind parse_focus_kind(std::string_view text);

/// A scalar focus mu(theta; v) evaluated at k points v with importance weights.
///
/// Each evaluation point is a wide design row (length p, including intercept
/// and interaction columns). A candidate model evaluates the focus with its
/// off-slot coefficients held at zero. `coefficient-combination` ignores the
/// point and returns coefficients' * beta.
struct FocusSpec {
    FocusKind kind = FocusKind::mean_response;
    double threshold = 0.0;   // exceedance: P(Y > threshold | x)
    VectorXd coefficients;    // coefficient-combination weights over the p slots
    MatrixXd eval_points;     // k x p
    VectorXd weights;         // k, nonnegative, positive sum

    Index point_count() const { return eval_points.rows(); }

    /// Throws ConfigError for shape or weight problems and for an exceedance
    /// focus under the gaussian family.
    void validate(Index wide_width, Family family) const;
};

struct FocusValue {
    double mu_hat = 0.0;
    /// d mu / d theta_M, one entry per fitted parameter (zero for gaussian sigma).
    VectorXd gradient;
};

/// mu_M and its gradient at the candidate's MLE. Linear-predictor,
/// mean-response and coefficient-combination have analytic gradients;
/// exceedance uses a central difference along the linear predictor eta with
/// step 1e-6 * (1 + |eta|), times the covariate row.
FocusValue eval_focus(const FocusSpec& spec, Index point, const FitResult& fit, const CandidateSpec& candidate);

/// Focus value at an arbitrary coefficient vector of the candidate.
double focus_at(const FocusSpec& spec, Index point, const VectorXd& coefficients, const CandidateSpec& candidate,
                Family family);

/// Max over parameters of |analytic - central difference| / (1 + |analytic|),
/// the difference taken per parameter with step 1e-6 * (1 + |theta_j|) / max(1, |x_j|).
/// For exceedance (no analytic form) the two compared gradients are the
/// eta-direction differences at steps h and 2h.
double focus_gradient_check(const FocusSpec& spec, Index point, const FitResult& fit, const CandidateSpec& candidate);

/// P(Y > threshold) for Y ~ Poisson(mean). Sums the probability masses on the
/// shorter side of the mean, smallest terms first.
double poisson_upper_tail(double mean, double threshold);

} // namespace focusfic
