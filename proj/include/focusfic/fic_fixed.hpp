#pragma once

#include "focusfic/fic_record.hpp"
#include "focusfic/focus.hpp"
#include "focusfic/linalg.hpp"
#include "focusfic/model.hpp"

#include <optional>
#include <string>
#include <string_view>

namespace focusfic {

/// How K_M and C_M are estimated in the fixed-wide-model framework.
enum class SandwichMethod {
    /// (1/n) sum of outer products of fitted per-observation scores.
    empirical,
    /// Exact covariances of the candidate and wide scores under the fitted
    /// wide model (Var_wide and Cov_wide at the plug-in estimates).
    model_based,
};

std::string to_string(SandwichMethod method);
SandwichMethod parse_sandwich_method(std::string_view text);

/// J (p x p), J_M (p_M x p_M), K_M (p_M x p_M) and C_M (p x p_M).
struct SandwichSet {
    MatrixXd J_hat;
    MatrixXd J_M_hat;
    MatrixXd K_M_hat;
    MatrixXd C_M_hat;
};

/// Both fits must cover the same rows in the same order.
SandwichSet sandwich_matrices(const FitResult& wide_fit, const FitResult& cand_fit,
                              SandwichMethod method = SandwichMethod::empirical);

/// Poisson regression matrices written out directly from the means
/// exp(x' beta_wide) and exp(x_M' beta_M). Independent of the generic path.
SandwichSet poisson_sandwich_closed_form(const FitResult& wide_fit, const FitResult& cand_fit);

/// Precomputes the sandwich and the factorizations of J and J_M for one
/// (wide, candidate) pair so several focus points can be scored cheaply.
class FixedScorer {
public:
    FixedScorer(const FitResult& wide_fit, const FitResult& cand_fit, CandidateSpec candidate,
                SandwichMethod method = SandwichMethod::empirical);

    FicRecord score(const FocusSpec& focus, Index point) const;

    const SandwichSet& sandwich() const { return sandwich_; }
    bool is_wide() const { return is_wide_; }

private:
    const FitResult* wide_;
    const FitResult* cand_;
    CandidateSpec candidate_;
    CandidateSpec wide_spec_;
    bool is_wide_ = false;
    SandwichSet sandwich_;
    std::optional<SpdSolver> j_solver_;
    std::optional<SpdSolver> jm_solver_;
};

/// Fixed-wide-model FIC for one candidate and one focus point.
FicRecord fic_fixed_score(const FitResult& wide_fit, const FitResult& cand_fit, const CandidateSpec& candidate,
                          const FocusSpec& focus, Index point, SandwichMethod method = SandwichMethod::empirical);

} // namespace focusfic
