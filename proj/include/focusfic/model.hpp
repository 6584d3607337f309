#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace focusfic {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

// ---------------------------------------------------------------------------
// Data
// ---------------------------------------------------------------------------

/// Response vector plus named covariate columns. Immutable once built.
class Dataset {
public:
    /// Throws DataError when n < 2, when any value is non-finite, when the
    /// column names are not unique, or when the shapes disagree.
    Dataset(VectorXd response, MatrixXd covariates, std::vector<std::string> names,
            std::vector<std::string> row_ids = {});

    Index rows() const { return response_.size(); }
    Index columns() const { return covariates_.cols(); }

    const VectorXd& response() const { return response_; }
    const MatrixXd& covariates() const { return covariates_; }
    const std::vector<std::string>& names() const { return names_; }

    /// Row labels; defaults to "1".."n" when none were supplied.
    const std::vector<std::string>& row_ids() const { return row_ids_; }

    std::optional<Index> column_index(std::string_view name) const;
    std::optional<Index> row_index(std::string_view label) const;

    /// Copy with rows reordered; `order[k]` is the source row of new row k.
    Dataset permuted(const std::vector<Index>& order) const;

private:
    VectorXd response_;
    MatrixXd covariates_;
    std::vector<std::string> names_;
    std::vector<std::string> row_ids_;
};

enum class Family { poisson_log, binomial_logit, gaussian_identity };

std::string to_string(Family family);
/// Accepts "poisson-log", "binomial-logit", "gaussian-identity" and the short
/// forms "poisson", "binomial", "gaussian".
Family parse_family(std::string_view text);

/// Throws DataError if some response is not valid for the family.
void check_response(const VectorXd& response, Family family);

// ---------------------------------------------------------------------------
// Design template and candidates
// ---------------------------------------------------------------------------

enum class SlotKind { intercept, main, interaction };

struct Slot {
    SlotKind kind;
    std::string name;
    /// Covariate column for a main effect, both parents for an interaction
    /// (as main-slot indices into the template), unused for the intercept.
    Index first = -1;
    Index second = -1;
};

/// Wide-model column layout: intercept, main effects in column order, then
/// pairwise interactions in lexicographic pair order, (1,2), (1,3), ..., (r-1,r).
class DesignTemplate {
public:
    /// Intercept plus one main effect per name, plus all pairwise interactions
    /// when `interactions` is set.
    static DesignTemplate pairwise(const std::vector<std::string>& covariates, bool interactions);

    /// Generic constructor; validates that every interaction names two distinct
    /// main-effect slots and that slot 0 is the intercept.
    explicit DesignTemplate(std::vector<Slot> slots, std::vector<std::string> covariates);

    Index size() const { return static_cast<Index>(slots_.size()); }
    const Slot& slot(Index i) const { return slots_[static_cast<std::size_t>(i)]; }
    const std::vector<Slot>& slots() const { return slots_; }
    const std::vector<std::string>& covariates() const { return covariates_; }
    Index main_count() const;
    bool has_interactions() const { return size() > 1 + main_count(); }

    /// Expands one row of raw covariate values (length = covariates().size())
    /// into a wide design row of length size().
    VectorXd expand(const VectorXd& raw) const;

    /// Wide design over all rows of the dataset, matching covariates() by name.
    MatrixXd wide_design(const Dataset& data) const;

private:
    std::vector<Slot> slots_;
    std::vector<std::string> covariates_;
};

/// One model in the search set: indicator over the template slots plus family.
struct CandidateSpec {
    std::vector<std::uint8_t> indicator;
    Family family = Family::poisson_log;

    Index on_count() const;
    bool is_full() const;
    std::vector<Index> on_slots() const;
    friend bool operator==(const CandidateSpec&, const CandidateSpec&) = default;
};

/// "10010,000000": intercept and main-effect digits, a comma, interaction digits.
/// Without interaction slots the comma is omitted.
std::string indicator_string(const CandidateSpec& spec, const DesignTemplate& tmpl);
CandidateSpec parse_indicator(std::string_view text, const DesignTemplate& tmpl, Family family);

/// True when no interaction slot is on while one of its parents is off.
bool satisfies_hierarchy(const CandidateSpec& spec, const DesignTemplate& tmpl);

/// Columns of the on slots, in slot order. Throws ConfigError on a length
/// mismatch, an off intercept, or a hierarchy violation.
MatrixXd build_design(const Dataset& data, const DesignTemplate& tmpl, const CandidateSpec& spec);

/// Same column selection applied to an already-expanded wide design.
MatrixXd select_columns(const MatrixXd& wide, const CandidateSpec& spec);

// ---------------------------------------------------------------------------
// Maximum likelihood
// ---------------------------------------------------------------------------

struct FitOptions {
    int max_iterations = 100;
    int max_halvings = 30;
    double loglik_tolerance = 1e-12;  // relative change
    double score_tolerance = 1e-9;    // sup-norm of the total score
    double rank_tolerance = 1e-9;     // relative to the largest singular value
    double separation_bound = 1e3;    // sup-norm of theta for binomial fits
    double separation_eta = 30.0;     // binomial: fitted |eta| beyond this means p is 0 or 1 numerically
};

/// Maximum-likelihood fit of one model. For gaussian-identity the ML standard
/// deviation sigma is appended as the last parameter.
struct FitResult {
    Family family = Family::poisson_log;
    MatrixXd design;          // n x k regression columns
    VectorXd response;
    VectorXd theta_hat;       // k coefficients (+ sigma for gaussian)
    VectorXd fitted_mean;     // n
    double loglik = 0.0;
    MatrixXd score_contribs;  // n x p_M, per-observation scores at theta_hat
    MatrixXd obs_info;        // p_M x p_M, -(1/n) Hessian at theta_hat
    bool converged = false;
    int iterations = 0;

    Index n_obs() const { return response.size(); }
    Index param_count() const { return theta_hat.size(); }
    Index coef_count() const { return design.cols(); }
    VectorXd coefficients() const { return theta_hat.head(coef_count()); }
};

/// Newton-Raphson with step halving. Throws NumericalError on rank deficiency,
/// separation (binomial), a degenerate gaussian fit, or non-convergence, and
/// DataError when responses are invalid for the family.
FitResult fit_mle(const MatrixXd& design, const VectorXd& response, Family family,
                  const FitOptions& options = {});

/// Log-likelihood, per-observation scores and normalized observed information at
/// an arbitrary parameter (gaussian sigma last). Used by the fitter and in tests.
struct LikelihoodState {
    double loglik;
    MatrixXd score_contribs;
    MatrixXd obs_info;
    VectorXd mean;
};
LikelihoodState evaluate_likelihood(const MatrixXd& design, const VectorXd& response, Family family,
                                    const VectorXd& theta);

double aic(const FitResult& fit);
/// Uses log(n) with n taken from the fit.
double bic(const FitResult& fit);

/// Each per-observation score component as a quadratic in y,
/// u_j(y) = constant_j + linear_j * y + quadratic_j * y^2, at theta_hat.
struct ScorePolynomial {
    VectorXd constant;
    VectorXd linear;
    VectorXd quadratic;
};
ScorePolynomial score_polynomial(const FitResult& fit, Index row);

/// Second to fourth central moments of Y_i under a fitted model.
struct CentralMoments {
    double mean;
    double m2;
    double m3;
    double m4;
};
CentralMoments central_moments(const FitResult& fit, Index row);

} // namespace focusfic
