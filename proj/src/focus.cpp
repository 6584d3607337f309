#include "focusfic/focus.hpp"

#include "focusfic/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace focusfic {

std::string to_string(FocusKind kind)
{
    switch (kind) {
    case FocusKind::linear_predictor: return "linear-predictor";
    case FocusKind::mean_response: return "mean-response";
    case FocusKind::exceedance: return "exceedance";
    case FocusKind::coefficient_combination: return "coefficient-combination";
    }
    return "unknown";
}

FocusKind parse_focus_kind(std::string_view text)
{
    if (text == "linear-predictor") return FocusKind::linear_predictor;
    if (text == "mean-response") return FocusKind::mean_response;
    if (text == "exceedance") return FocusKind::exceedance;
    if (text == "coefficient-combination") return FocusKind::coefficient_combination;
    throw ConfigError(fmt::format("unknown focus kind '{}'", text));
}

void FocusSpec::validate(Index wide_width, Family family) const
{
    if (eval_points.rows() < 1) {
        throw ConfigError("focus needs at least one evaluation point");
    }
    if (eval_points.cols() != wide_width) {
        throw ConfigError(fmt::format("evaluation points have width {}, wide design has {}", eval_points.cols(),
                                      wide_width));
    }
    if (weights.size() != eval_points.rows()) {
        throw ConfigError("focus weight count does not match the number of evaluation points");
    }
    if ((weights.array() < 0.0).any() || !(weights.sum() > 0.0) || !weights.allFinite()) {
        throw ConfigError("focus weights must be nonnegative with a positive sum");
    }
    if (kind == FocusKind::exceedance && family == Family::gaussian_identity) {
        throw ConfigError("exceedance focus requires a count or binary family");
    }
    if (kind == FocusKind::coefficient_combination && coefficients.size() != wide_width) {
        throw ConfigError("coefficient-combination weights must have one entry per template slot");
    }
}

double poisson_upper_tail(double mean, double threshold)
{
    if (threshold < 0.0) {
        return 1.0;
    }
    if (mean <= 0.0) {
        return 0.0;
    }
    const auto last = static_cast<long>(std::floor(threshold));
    const auto log_pmf = [&](long k) {
        return static_cast<double>(k) * std::log(mean) - mean - std::lgamma(static_cast<double>(k) + 1.0);
    };
    std::vector<double> terms;
    if (static_cast<double>(last) < mean) {
        // lower tail 0..last is short and increasing towards the mode
        terms.reserve(static_cast<std::size_t>(last) + 1);
        for (long k = 0; k <= last; ++k) {
            terms.push_back(std::exp(log_pmf(k)));
        }
        std::sort(terms.begin(), terms.end());
        const double lower = std::accumulate(terms.begin(), terms.end(), 0.0);
        return std::max(0.0, 1.0 - lower);
    }
    // upper tail last+1.. is decreasing; stop once terms are negligible
    for (long k = last + 1;; ++k) {
        const double t = std::exp(log_pmf(k));
        terms.push_back(t);
        if (t < 1e-20 * terms.front() || t == 0.0) {
            break;
        }
    }
    std::sort(terms.begin(), terms.end());
    return std::min(1.0, std::accumulate(terms.begin(), terms.end(), 0.0));
}

namespace {

VectorXd candidate_row(const FocusSpec& spec, Index point, const CandidateSpec& candidate)
{
    const auto on = candidate.on_slots();
    VectorXd x(static_cast<Index>(on.size()));
    for (std::size_t k = 0; k < on.size(); ++k) {
        x(static_cast<Index>(k)) = spec.kind == FocusKind::coefficient_combination ? spec.coefficients(on[k])
                                                                                    : spec.eval_points(point, on[k]);
    }
    return x;
}

double inverse_link(double eta, Family family)
{
    switch (family) {
    case Family::poisson_log: return std::exp(eta);
    case Family::binomial_logit: return eta >= 0 ? 1.0 / (1.0 + std::exp(-eta)) : std::exp(eta) / (1.0 + std::exp(eta));
    case Family::gaussian_identity: return eta;
    }
    return eta;
}

double exceedance(double mean, double threshold, Family family)
{
    switch (family) {
    case Family::poisson_log: return poisson_upper_tail(mean, threshold);
    case Family::binomial_logit:
        if (threshold < 0.0) return 1.0;
        return threshold < 1.0 ? mean : 0.0;
    case Family::gaussian_identity: break;
    }
    throw ConfigError("exceedance focus requires a count or binary family");
}

double value_from_row(const FocusSpec& spec, const VectorXd& x, const VectorXd& beta, Family family)
{
    const double eta = x.dot(beta);
    switch (spec.kind) {
    case FocusKind::linear_predictor:
    case FocusKind::coefficient_combination: return eta;
    case FocusKind::mean_response: return inverse_link(eta, family);
    case FocusKind::exceedance: return exceedance(inverse_link(eta, family), spec.threshold, family);
    }
    return eta;
}

VectorXd central_difference(const FocusSpec& spec, const VectorXd& x, const VectorXd& beta, Family family,
                            double step_scale)
{
    VectorXd grad(beta.size());
    VectorXd probe = beta;
    for (Index j = 0; j < beta.size(); ++j) {
        // the step moves eta by at most step_scale * (1 + |beta_j|), whatever the covariate's scale
        const double h = step_scale * (1.0 + std::abs(beta(j))) / std::max(1.0, std::abs(x(j)));
        probe(j) = beta(j) + h;
        const double up = value_from_row(spec, x, probe, family);
        probe(j) = beta(j) - h;
        const double down = value_from_row(spec, x, probe, family);
        probe(j) = beta(j);
        grad(j) = (up - down) / (2.0 * h);
    }
    return grad;
}

// Exceedance depends on theta only through eta = x' beta, so the difference is
// taken along eta and mapped back by the chain rule.
VectorXd eta_difference(const FocusSpec& spec, const VectorXd& x, const VectorXd& beta, Family family,
                        double step_scale)
{
    const double eta = x.dot(beta);
    const double h = step_scale * (1.0 + std::abs(eta));
    const auto at = [&](double e) {
        return spec.kind == FocusKind::exceedance ? exceedance(inverse_link(e, family), spec.threshold, family)
                                                  : value_from_row(spec, VectorXd::Ones(1), VectorXd::Constant(1, e),
                                                                   family);
    };
    return (at(eta + h) - at(eta - h)) / (2.0 * h) * x;
}

} // namespace

double focus_at(const FocusSpec& spec, Index point, const VectorXd& coefficients, const CandidateSpec& candidate,
                Family family)
{
    return value_from_row(spec, candidate_row(spec, point, candidate), coefficients, family);
}

FocusValue eval_focus(const FocusSpec& spec, Index point, const FitResult& fit, const CandidateSpec& candidate)
{
    if (point < 0 || point >= spec.point_count()) {
        throw ConfigError(fmt::format("focus point {} out of range", point));
    }
    if (static_cast<Index>(candidate.indicator.size()) != spec.eval_points.cols()) {
        throw ConfigError("candidate indicator does not match the evaluation point width");
    }
    const VectorXd x = candidate_row(spec, point, candidate);
    if (x.size() != fit.coef_count()) {
        throw ConfigError("candidate indicator does not match the fitted model");
    }
    const VectorXd beta = fit.coefficients();
    FocusValue out;
    out.mu_hat = value_from_row(spec, x, beta, fit.family);
    out.gradient = VectorXd::Zero(fit.param_count());
    switch (spec.kind) {
    case FocusKind::linear_predictor:
    case FocusKind::coefficient_combination:
        out.gradient.head(x.size()) = x;
        break;
    case FocusKind::mean_response: {
        const double m = out.mu_hat;
        double dmu = 1.0;
        if (fit.family == Family::poisson_log) dmu = m;
        if (fit.family == Family::binomial_logit) dmu = m * (1.0 - m);
        out.gradient.head(x.size()) = dmu * x;
        break;
    }
    case FocusKind::exceedance:
        if (fit.family == Family::gaussian_identity) {
            throw ConfigError("exceedance focus requires a count or binary family");
        }
        out.gradient.head(x.size()) = eta_difference(spec, x, beta, fit.family, 1e-6);
        break;
    }
    if (!std::isfinite(out.mu_hat) || !out.gradient.allFinite()) {
        throw NumericalError("focus value or gradient is not finite");
    }
    return out;
}

double focus_gradient_check(const FocusSpec& spec, Index point, const FitResult& fit, const CandidateSpec& candidate)
{
    const VectorXd x = candidate_row(spec, point, candidate);
    const VectorXd beta = fit.coefficients();
    VectorXd reference;
    VectorXd numeric;
    if (spec.kind == FocusKind::exceedance) {
        reference = eta_difference(spec, x, beta, fit.family, 1e-6);
        numeric = eta_difference(spec, x, beta, fit.family, 2e-6);
    } else {
        reference = eval_focus(spec, point, fit, candidate).gradient.head(beta.size());
        numeric = central_difference(spec, x, beta, fit.family, 1e-6);
    }
    double worst = 0.0;
    for (Index j = 0; j < beta.size(); ++j) {
        worst = std::max(worst, std::abs(reference(j) - numeric(j)) / (1.0 + std::abs(reference(j))));
    }
    return worst;
}

} // namespace focusfic
