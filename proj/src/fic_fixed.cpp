#include "focusfic/fic_fixed.hpp"

#include "focusfic/error.hpp"

#include <fmt/format.h>

#include <cmath>

namespace focusfic {

std::string to_string(Framework framework)
{
    return framework == Framework::fixed ? "fixed" : "local";
}

Framework parse_framework(std::string_view text)
{
    if (text == "fixed") return Framework::fixed;
    if (text == "local") return Framework::local;
    throw ConfigError(fmt::format("unknown framework '{}'", text));
}

void finish_record(FicRecord& record)
{
    record.sqbias_u = record.bias_hat * record.bias_hat - record.kappa_sq_over_n;
    const double var = record.se * record.se;
    record.fic_u = var + record.sqbias_u;
    const double kept = std::max(record.sqbias_u, 0.0);
    record.fic_adj = var + kept;
    record.bias_adj = std::copysign(std::sqrt(kept), record.bias_hat);
    if (kept == 0.0) {
        record.bias_adj = 0.0;
    }
}

std::string to_string(SandwichMethod method)
{
    return method == SandwichMethod::empirical ? "empirical" : "model";
}

SandwichMethod parse_sandwich_method(std::string_view text)
{
    if (text == "empirical") return SandwichMethod::empirical;
    if (text == "model" || text == "model-based") return SandwichMethod::model_based;
    throw ConfigError(fmt::format("unknown sandwich method '{}'", text));
}

namespace {

void check_pair(const FitResult& wide_fit, const FitResult& cand_fit)
{
    if (wide_fit.n_obs() != cand_fit.n_obs()) {
        throw ConfigError("wide and candidate fits cover different numbers of rows");
    }
    if (wide_fit.response != cand_fit.response) {
        throw ConfigError("wide and candidate fits were made on different responses");
    }
}

} // namespace

SandwichSet sandwich_matrices(const FitResult& wide_fit, const FitResult& cand_fit, SandwichMethod method)
{
    check_pair(wide_fit, cand_fit);
    const double n = static_cast<double>(wide_fit.n_obs());
    SandwichSet s;
    s.J_hat = wide_fit.obs_info;
    s.J_M_hat = cand_fit.obs_info;
    if (method == SandwichMethod::empirical) {
        s.K_M_hat = cand_fit.score_contribs.transpose() * cand_fit.score_contribs / n;
        s.C_M_hat = wide_fit.score_contribs.transpose() * cand_fit.score_contribs / n;
        return s;
    }

    // Each score is quadratic in y: u = A + B e + C e^2 with e = y - m_wide, so
    // Cov(u_j, u_k) = B_j B_k m2 + (B_j C_k + C_j B_k) m3 + C_j C_k (m4 - m2^2).
    const Index p = wide_fit.param_count();
    const Index pm = cand_fit.param_count();
    s.K_M_hat = MatrixXd::Zero(pm, pm);
    s.C_M_hat = MatrixXd::Zero(p, pm);
    for (Index i = 0; i < wide_fit.n_obs(); ++i) {
        const CentralMoments mom = central_moments(wide_fit, i);
        const ScorePolynomial pw = score_polynomial(wide_fit, i);
        const ScorePolynomial pc = score_polynomial(cand_fit, i);
        const VectorXd bw = pw.linear + 2.0 * mom.mean * pw.quadratic;
        const VectorXd bc = pc.linear + 2.0 * mom.mean * pc.quadratic;
        const VectorXd& cw = pw.quadratic;
        const VectorXd& cc = pc.quadratic;
        const double excess = mom.m4 - mom.m2 * mom.m2;
        s.K_M_hat += bc * bc.transpose() * mom.m2 + (bc * cc.transpose() + cc * bc.transpose()) * mom.m3
            + cc * cc.transpose() * excess;
        s.C_M_hat += bw * bc.transpose() * mom.m2 + (bw * cc.transpose() + cw * bc.transpose()) * mom.m3
            + cw * cc.transpose() * excess;
    }
    s.K_M_hat /= n;
    s.C_M_hat /= n;
    return s;
}

SandwichSet poisson_sandwich_closed_form(const FitResult& wide_fit, const FitResult& cand_fit)
{
    check_pair(wide_fit, cand_fit);
    if (wide_fit.family != Family::poisson_log || cand_fit.family != Family::poisson_log) {
        throw ConfigError("closed-form sandwich needs Poisson wide and candidate fits");
    }
    const MatrixXd& x = wide_fit.design;
    const MatrixXd& xm = cand_fit.design;
    const double n = static_cast<double>(x.rows());
    const VectorXd xi = (x * wide_fit.theta_hat).array().exp();
    const VectorXd xi_m = (xm * cand_fit.theta_hat).array().exp();
    SandwichSet s;
    s.J_hat = x.transpose() * xi.asDiagonal() * x / n;
    s.J_M_hat = xm.transpose() * xi_m.asDiagonal() * xm / n;
    s.K_M_hat = xm.transpose() * xi.asDiagonal() * xm / n;
    s.C_M_hat = x.transpose() * xi.asDiagonal() * xm / n;
    return s;
}

FixedScorer::FixedScorer(const FitResult& wide_fit, const FitResult& cand_fit, CandidateSpec candidate,
                         SandwichMethod method)
    : wide_(&wide_fit), cand_(&cand_fit), candidate_(std::move(candidate))
{
    if (candidate_.indicator.empty()) {
        throw ConfigError("candidate indicator is empty");
    }
    wide_spec_.indicator.assign(candidate_.indicator.size(), 1);
    wide_spec_.family = wide_fit.family;
    is_wide_ = candidate_.is_full() && candidate_.family == wide_fit.family;
    sandwich_ = sandwich_matrices(wide_fit, cand_fit, method);
    j_solver_.emplace(sandwich_.J_hat, "wide information matrix J");
    if (!is_wide_) {
        jm_solver_.emplace(sandwich_.J_M_hat, "candidate information matrix J_M");
    }
}

FicRecord FixedScorer::score(const FocusSpec& focus, Index point) const
{
    const double n = static_cast<double>(wide_->n_obs());
    const FocusValue wide_focus = eval_focus(focus, point, *wide_, wide_spec_);
    const VectorXd& c = wide_focus.gradient;
    const VectorXd j_inv_c = j_solver_->solve(c);
    const double wide_var = c.dot(j_inv_c);

    FicRecord rec;
    rec.candidate = candidate_;
    if (is_wide_) {
        rec.mu_hat = wide_focus.mu_hat;
        rec.se = std::sqrt(wide_var / n);
        rec.bias_hat = 0.0;
        rec.kappa_sq_over_n = 0.0;
        finish_record(rec);
        return rec;
    }

    const FocusValue cand_focus = eval_focus(focus, point, *cand_, candidate_);
    const VectorXd jm_inv_cm = jm_solver_->solve(cand_focus.gradient);
    const double cand_var = jm_inv_cm.dot(sandwich_.K_M_hat * jm_inv_cm);
    const double cross = j_inv_c.dot(sandwich_.C_M_hat * jm_inv_cm);
    double kappa_sq = wide_var + cand_var - 2.0 * cross;
    if (kappa_sq < 0.0) {
        kappa_sq = 0.0;
        rec.kappa_clipped = true;
    }
    rec.mu_hat = cand_focus.mu_hat;
    rec.se = std::sqrt(std::max(cand_var, 0.0) / n);
    rec.bias_hat = cand_focus.mu_hat - wide_focus.mu_hat;
    rec.kappa_sq_over_n = kappa_sq / n;
    finish_record(rec);
    return rec;
}

FicRecord fic_fixed_score(const FitResult& wide_fit, const FitResult& cand_fit, const CandidateSpec& candidate,
                          const FocusSpec& focus, Index point, SandwichMethod method)
{
    return FixedScorer(wide_fit, cand_fit, candidate, method).score(focus, point);
}

} // namespace focusfic
