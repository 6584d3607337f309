#include "focusfic/model.hpp"

#include "focusfic/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

namespace focusfic {

namespace {

constexpr double kMaxEta = 700.0;

double inv_logit(double eta)
{
    if (eta >= 0) {
        return 1.0 / (1.0 + std::exp(-eta));
    }
    const double e = std::exp(eta);
    return e / (1.0 + e);
}

// log(1 + exp(eta)) without overflow
double log1pexp(double eta)
{
    return eta > 0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta));
}

} // namespace

// ---------------------------------------------------------------------------
// Dataset
// ---------------------------------------------------------------------------

Dataset::Dataset(VectorXd response, MatrixXd covariates, std::vector<std::string> names,
                 std::vector<std::string> row_ids)
    : response_(std::move(response)),
      covariates_(std::move(covariates)),
      names_(std::move(names)),
      row_ids_(std::move(row_ids))
{
    if (response_.size() < 2) {
        throw DataError("dataset needs at least 2 rows");
    }
    if (covariates_.rows() != response_.size()) {
        throw DataError(fmt::format("covariate matrix has {} rows but response has {}",
                                    covariates_.rows(), response_.size()));
    }
    if (static_cast<Index>(names_.size()) != covariates_.cols()) {
        throw DataError("covariate name count does not match column count");
    }
    std::set<std::string> seen;
    for (const auto& name : names_) {
        if (!seen.insert(name).second) {
            throw DataError(fmt::format("duplicate column name '{}'", name));
        }
    }
    if (!response_.allFinite() || !covariates_.allFinite()) {
        throw DataError("dataset contains missing or non-finite values");
    }
    if (row_ids_.empty()) {
        for (Index i = 0; i < response_.size(); ++i) {
            row_ids_.push_back(std::to_string(i + 1));
        }
    } else if (static_cast<Index>(row_ids_.size()) != response_.size()) {
        throw DataError("row label count does not match row count");
    }
}

std::optional<Index> Dataset::column_index(std::string_view name) const
{
    const auto it = std::find(names_.begin(), names_.end(), name);
    if (it == names_.end()) {
        return std::nullopt;
    }
    return static_cast<Index>(it - names_.begin());
}

std::optional<Index> Dataset::row_index(std::string_view label) const
{
    const auto it = std::find(row_ids_.begin(), row_ids_.end(), label);
    if (it == row_ids_.end()) {
        return std::nullopt;
    }
    return static_cast<Index>(it - row_ids_.begin());
}

Dataset Dataset::permuted(const std::vector<Index>& order) const
{
    if (static_cast<Index>(order.size()) != rows()) {
        throw ConfigError("permutation length does not match row count");
    }
    VectorXd y(rows());
    MatrixXd x(rows(), columns());
    std::vector<std::string> ids(order.size());
    for (std::size_t k = 0; k < order.size(); ++k) {
        y(static_cast<Index>(k)) = response_(order[k]);
        x.row(static_cast<Index>(k)) = covariates_.row(order[k]);
        ids[k] = row_ids_[static_cast<std::size_t>(order[k])];
    }
    return Dataset(std::move(y), std::move(x), names_, std::move(ids));
}

// ---------------------------------------------------------------------------
// Families
// ---------------------------------------------------------------------------

std::string to_string(Family family)
{
    switch (family) {
    case Family::poisson_log: return "poisson-log";
    case Family::binomial_logit: return "binomial-logit";
    case Family::gaussian_identity: return "gaussian-identity";
    }
    return "unknown";
}

Family parse_family(std::string_view text)
{
    if (text == "poisson-log" || text == "poisson") {
        return Family::poisson_log;
    }
    if (text == "binomial-logit" || text == "binomial" || text == "logistic") {
        return Family::binomial_logit;
    }
    if (text == "gaussian-identity" || text == "gaussian" || text == "normal") {
        return Family::gaussian_identity;
    }
    throw ConfigError(fmt::format("unknown family '{}'", text));
}

void check_response(const VectorXd& response, Family family)
{
    for (Index i = 0; i < response.size(); ++i) {
        const double y = response(i);
        if (!std::isfinite(y)) {
            throw DataError(fmt::format("response row {} is not finite", i + 1));
        }
        if (family == Family::poisson_log && (y < 0 || y != std::floor(y))) {
            throw DataError(fmt::format("poisson response row {} is not a nonnegative integer: {}", i + 1, y));
        }
        if (family == Family::binomial_logit && y != 0.0 && y != 1.0) {
            throw DataError(fmt::format("binomial response row {} is not 0 or 1: {}", i + 1, y));
        }
    }
}

// ---------------------------------------------------------------------------
// Template and candidates
// ---------------------------------------------------------------------------

DesignTemplate DesignTemplate::pairwise(const std::vector<std::string>& covariates, bool interactions)
{
    std::vector<Slot> slots;
    slots.push_back({SlotKind::intercept, "(Intercept)"});
    const auto r = static_cast<Index>(covariates.size());
    for (Index j = 0; j < r; ++j) {
        slots.push_back({SlotKind::main, covariates[static_cast<std::size_t>(j)], j});
    }
    if (interactions) {
        for (Index a = 0; a < r; ++a) {
            for (Index b = a + 1; b < r; ++b) {
                slots.push_back({SlotKind::interaction,
                                 covariates[static_cast<std::size_t>(a)] + ":" + covariates[static_cast<std::size_t>(b)],
                                 a + 1, b + 1});
            }
        }
    }
    return DesignTemplate(std::move(slots), covariates);
}

DesignTemplate::DesignTemplate(std::vector<Slot> slots, std::vector<std::string> covariates)
    : slots_(std::move(slots)), covariates_(std::move(covariates))
{
    if (slots_.empty() || slots_.front().kind != SlotKind::intercept) {
        throw ConfigError("design template must start with the intercept slot");
    }
    for (std::size_t i = 1; i < slots_.size(); ++i) {
        const Slot& s = slots_[i];
        switch (s.kind) {
        case SlotKind::intercept:
            throw ConfigError("design template has more than one intercept");
        case SlotKind::main:
            if (s.first < 0 || s.first >= static_cast<Index>(covariates_.size())) {
                throw ConfigError(fmt::format("main-effect slot '{}' has no covariate", s.name));
            }
            break;
        case SlotKind::interaction: {
            const auto valid_parent = [&](Index k) {
                return k > 0 && k < static_cast<Index>(slots_.size())
                    && slots_[static_cast<std::size_t>(k)].kind == SlotKind::main;
            };
            if (!valid_parent(s.first) || !valid_parent(s.second) || s.first == s.second) {
                throw ConfigError(fmt::format("interaction slot '{}' must name two distinct main effects", s.name));
            }
            break;
        }
        }
    }
}

Index DesignTemplate::main_count() const
{
    return static_cast<Index>(std::count_if(slots_.begin(), slots_.end(),
                                            [](const Slot& s) { return s.kind == SlotKind::main; }));
}

VectorXd DesignTemplate::expand(const VectorXd& raw) const
{
    if (raw.size() != static_cast<Index>(covariates_.size())) {
        throw ConfigError(fmt::format("covariate row has {} values, template expects {}", raw.size(),
                                      covariates_.size()));
    }
    VectorXd row(size());
    for (Index i = 0; i < size(); ++i) {
        const Slot& s = slot(i);
        switch (s.kind) {
        case SlotKind::intercept: row(i) = 1.0; break;
        case SlotKind::main: row(i) = raw(s.first); break;
        case SlotKind::interaction:
            row(i) = raw(slot(s.first).first) * raw(slot(s.second).first);
            break;
        }
    }
    return row;
}

MatrixXd DesignTemplate::wide_design(const Dataset& data) const
{
    std::vector<Index> cols;
    for (const auto& name : covariates_) {
        const auto idx = data.column_index(name);
        if (!idx) {
            throw DataError(fmt::format("dataset has no column '{}'", name));
        }
        cols.push_back(*idx);
    }
    MatrixXd wide(data.rows(), size());
    VectorXd raw(static_cast<Index>(cols.size()));
    for (Index i = 0; i < data.rows(); ++i) {
        for (std::size_t j = 0; j < cols.size(); ++j) {
            raw(static_cast<Index>(j)) = data.covariates()(i, cols[j]);
        }
        wide.row(i) = expand(raw).transpose();
    }
    return wide;
}

Index CandidateSpec::on_count() const
{
    return static_cast<Index>(std::count(indicator.begin(), indicator.end(), std::uint8_t{1}));
}

bool CandidateSpec::is_full() const
{
    return std::all_of(indicator.begin(), indicator.end(), [](std::uint8_t v) { return v == 1; });
}

std::vector<Index> CandidateSpec::on_slots() const
{
    std::vector<Index> out;
    for (std::size_t i = 0; i < indicator.size(); ++i) {
        if (indicator[i]) {
            out.push_back(static_cast<Index>(i));
        }
    }
    return out;
}

std::string indicator_string(const CandidateSpec& spec, const DesignTemplate& tmpl)
{
    std::string out;
    const Index split = 1 + tmpl.main_count();
    for (std::size_t i = 0; i < spec.indicator.size(); ++i) {
        if (static_cast<Index>(i) == split && tmpl.has_interactions()) {
            out.push_back(',');
        }
        out.push_back(spec.indicator[i] ? '1' : '0');
    }
    return out;
}

CandidateSpec parse_indicator(std::string_view text, const DesignTemplate& tmpl, Family family)
{
    CandidateSpec spec;
    spec.family = family;
    for (char ch : text) {
        if (ch == '0' || ch == '1') {
            spec.indicator.push_back(static_cast<std::uint8_t>(ch - '0'));
        } else if (ch != ',' && ch != ' ') {
            throw ConfigError(fmt::format("invalid indicator string '{}'", text));
        }
    }
    if (static_cast<Index>(spec.indicator.size()) != tmpl.size()) {
        throw ConfigError(fmt::format("indicator '{}' has {} slots, template has {}", text,
                                      spec.indicator.size(), tmpl.size()));
    }
    return spec;
}

bool satisfies_hierarchy(const CandidateSpec& spec, const DesignTemplate& tmpl)
{
    for (Index i = 0; i < tmpl.size(); ++i) {
        const Slot& s = tmpl.slot(i);
        if (s.kind == SlotKind::interaction && spec.indicator[static_cast<std::size_t>(i)]
            && (!spec.indicator[static_cast<std::size_t>(s.first)]
                || !spec.indicator[static_cast<std::size_t>(s.second)])) {
            return false;
        }
    }
    return true;
}

namespace {

void check_candidate(const CandidateSpec& spec, const DesignTemplate& tmpl)
{
    if (static_cast<Index>(spec.indicator.size()) != tmpl.size()) {
        throw ConfigError(fmt::format("indicator length {} does not match template size {}",
                                      spec.indicator.size(), tmpl.size()));
    }
    if (!spec.indicator[0]) {
        throw ConfigError("the intercept slot is protected and must be on");
    }
    if (!satisfies_hierarchy(spec, tmpl)) {
        throw ConfigError(fmt::format("candidate {} has an interaction without both main effects",
                                      indicator_string(spec, tmpl)));
    }
}

} // namespace

MatrixXd select_columns(const MatrixXd& wide, const CandidateSpec& spec)
{
    if (static_cast<Index>(spec.indicator.size()) != wide.cols()) {
        throw ConfigError("indicator length does not match design width");
    }
    const auto on = spec.on_slots();
    MatrixXd out(wide.rows(), static_cast<Index>(on.size()));
    for (std::size_t k = 0; k < on.size(); ++k) {
        out.col(static_cast<Index>(k)) = wide.col(on[k]);
    }
    return out;
}

MatrixXd build_design(const Dataset& data, const DesignTemplate& tmpl, const CandidateSpec& spec)
{
    check_candidate(spec, tmpl);
    return select_columns(tmpl.wide_design(data), spec);
}

// ---------------------------------------------------------------------------
// Likelihood
// ---------------------------------------------------------------------------

LikelihoodState evaluate_likelihood(const MatrixXd& design, const VectorXd& response, Family family,
                                    const VectorXd& theta)
{
    const Index n = design.rows();
    const Index k = design.cols();
    const double nd = static_cast<double>(n);
    LikelihoodState st;
    const VectorXd eta = design * theta.head(k);
    st.mean.resize(n);

    switch (family) {
    case Family::poisson_log: {
        double ll = 0.0;
        VectorXd w(n);
        for (Index i = 0; i < n; ++i) {
            const double m = std::exp(std::min(eta(i), kMaxEta));
            st.mean(i) = m;
            w(i) = m;
            ll += -m + response(i) * eta(i) - std::lgamma(response(i) + 1.0);
        }
        st.loglik = ll;
        st.score_contribs = design.array().colwise() * (response - st.mean).array();
        st.obs_info = design.transpose() * (design.array().colwise() * w.array()).matrix() / nd;
        break;
    }
    case Family::binomial_logit: {
        double ll = 0.0;
        VectorXd w(n);
        for (Index i = 0; i < n; ++i) {
            const double p = inv_logit(eta(i));
            st.mean(i) = p;
            w(i) = p * (1.0 - p);
            ll += response(i) * eta(i) - log1pexp(eta(i));
        }
        st.loglik = ll;
        st.score_contribs = design.array().colwise() * (response - st.mean).array();
        st.obs_info = design.transpose() * (design.array().colwise() * w.array()).matrix() / nd;
        break;
    }
    case Family::gaussian_identity: {
        const double sigma = theta(k);
        st.mean = eta;
        const VectorXd r = response - eta;
        const double rss = r.squaredNorm();
        const double s2 = sigma * sigma;
        st.loglik = -0.5 * nd * std::log(2.0 * std::numbers::pi * s2) - rss / (2.0 * s2);
        st.score_contribs.resize(n, k + 1);
        st.score_contribs.leftCols(k) = design.array().colwise() * (r.array() / s2);
        st.score_contribs.col(k) = (-1.0 / sigma + r.array().square() / (s2 * sigma)).matrix();
        st.obs_info.resize(k + 1, k + 1);
        st.obs_info.topLeftCorner(k, k) = design.transpose() * design / (s2 * nd);
        const VectorXd cross = design.transpose() * r * (2.0 / (s2 * sigma * nd));
        st.obs_info.topRightCorner(k, 1) = cross;
        st.obs_info.bottomLeftCorner(1, k) = cross.transpose();
        st.obs_info(k, k) = -1.0 / s2 + 3.0 * rss / (s2 * s2 * nd);
        break;
    }
    }
    return st;
}

namespace {

void check_rank(const MatrixXd& design, double tolerance)
{
    Eigen::JacobiSVD<MatrixXd> svd(design);
    const VectorXd& sv = svd.singularValues();
    if (sv.size() == 0 || sv(0) <= 0.0 || sv(sv.size() - 1) < tolerance * sv(0)) {
        throw NumericalError(fmt::format("design matrix is rank deficient ({} columns)", design.cols()));
    }
}

} // namespace

FitResult fit_mle(const MatrixXd& design, const VectorXd& response, Family family, const FitOptions& options)
{
    if (design.rows() != response.size()) {
        throw ConfigError("design and response lengths differ");
    }
    if (design.cols() == 0) {
        throw ConfigError("design has no columns");
    }
    check_response(response, family);
    check_rank(design, options.rank_tolerance);

    const Index k = design.cols();
    FitResult fit;
    fit.family = family;
    fit.design = design;
    fit.response = response;

    VectorXd theta;
    if (family == Family::gaussian_identity) {
        theta.resize(k + 1);
        theta.head(k) = design.householderQr().solve(response);
        const double rss = (response - design * theta.head(k)).squaredNorm();
        const double sigma = std::sqrt(rss / static_cast<double>(design.rows()));
        if (!(sigma > 0.0)) {
            throw NumericalError("gaussian fit has zero residual variance");
        }
        theta(k) = sigma;
    } else {
        // least-squares start on a working response, as glm does
        const VectorXd working = family == Family::poisson_log
            ? VectorXd((response.array() + 0.5).log())
            : VectorXd(((response.array() + 0.5) / (1.5 - response.array())).log());
        theta = design.householderQr().solve(working);
        if (!theta.allFinite() || !std::isfinite(evaluate_likelihood(design, response, family, theta).loglik)) {
            theta = VectorXd::Zero(k);
        }
    }

    LikelihoodState st = evaluate_likelihood(design, response, family, theta);
    bool converged = false;
    int iter = 0;
    for (; iter < options.max_iterations; ++iter) {
        const VectorXd score = st.score_contribs.colwise().sum().transpose();
        if (score.lpNorm<Eigen::Infinity>() < options.score_tolerance) {
            converged = true;
            break;
        }
        const MatrixXd hess = st.obs_info * static_cast<double>(design.rows());
        // solve in diagonally equilibrated form; covariate scales can differ by 1e6
        const VectorXd d = hess.diagonal().cwiseAbs().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
        const MatrixXd scaled = d.asDiagonal() * hess * d.asDiagonal();
        const Eigen::LDLT<MatrixXd> ldlt(scaled);
        VectorXd step = d.asDiagonal() * ldlt.solve(d.asDiagonal() * score);
        if (!step.allFinite()) {
            throw NumericalError("Newton step is not finite");
        }
        // half the Newton decrement estimates the remaining log-likelihood gain
        const double decrement = 0.5 * step.dot(score);
        if (decrement >= 0.0 && decrement < options.loglik_tolerance * (1.0 + std::abs(st.loglik))) {
            theta += step;
            st = evaluate_likelihood(design, response, family, theta);
            converged = true;
            ++iter;
            break;
        }
        double scale = 1.0;
        LikelihoodState trial;
        VectorXd next;
        bool accepted = false;
        for (int h = 0; h <= options.max_halvings; ++h) {
            next = theta + scale * step;
            if (family == Family::gaussian_identity && next(k) <= 0.0) {
                scale *= 0.5;
                continue;
            }
            trial = evaluate_likelihood(design, response, family, next);
            if (std::isfinite(trial.loglik) && trial.loglik >= st.loglik) {
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if (!accepted) {
            // no ascent direction left at machine precision
            const double sup = score.lpNorm<Eigen::Infinity>();
            if (sup < 1e-6 * (1.0 + theta.lpNorm<Eigen::Infinity>())) {
                converged = true;
                break;
            }
            throw NumericalError("step halving failed to increase the log-likelihood");
        }
        const double change = std::abs(trial.loglik - st.loglik) / (std::abs(st.loglik) + 1e-300);
        theta = next;
        st = std::move(trial);
        if (family == Family::binomial_logit && theta.lpNorm<Eigen::Infinity>() > options.separation_bound) {
            throw NumericalError("logistic fit diverges (separation)");
        }
        if (scale == 1.0 && change < options.loglik_tolerance) {
            ++iter;
            converged = true;
            break;
        }
    }
    if (!converged) {
        throw NumericalError(fmt::format("Newton-Raphson did not converge in {} iterations", options.max_iterations));
    }
    if (family == Family::binomial_logit &&
        (design * theta.head(k)).lpNorm<Eigen::Infinity>() > options.separation_eta) {
        throw NumericalError("logistic fit diverges (separation)");
    }

    fit.theta_hat = theta;
    fit.fitted_mean = st.mean;
    fit.loglik = st.loglik;
    fit.score_contribs = std::move(st.score_contribs);
    fit.obs_info = 0.5 * (st.obs_info + st.obs_info.transpose());
    fit.converged = true;
    fit.iterations = iter;
    return fit;
}

double aic(const FitResult& fit)
{
    return -2.0 * fit.loglik + 2.0 * static_cast<double>(fit.param_count());
}

double bic(const FitResult& fit)
{
    return -2.0 * fit.loglik + std::log(static_cast<double>(fit.n_obs())) * static_cast<double>(fit.param_count());
}

ScorePolynomial score_polynomial(const FitResult& fit, Index row)
{
    const Index k = fit.coef_count();
    const Index p = fit.param_count();
    const auto x = fit.design.row(row).transpose();
    const double m = fit.fitted_mean(row);
    ScorePolynomial poly{VectorXd::Zero(p), VectorXd::Zero(p), VectorXd::Zero(p)};
    if (fit.family == Family::gaussian_identity) {
        const double sigma = fit.theta_hat(k);
        const double s2 = sigma * sigma;
        poly.constant.head(k) = -m * x / s2;
        poly.linear.head(k) = x / s2;
        poly.constant(k) = -1.0 / sigma + m * m / (s2 * sigma);
        poly.linear(k) = -2.0 * m / (s2 * sigma);
        poly.quadratic(k) = 1.0 / (s2 * sigma);
    } else {
        poly.constant = -m * x;
        poly.linear = x;
    }
    return poly;
}

CentralMoments central_moments(const FitResult& fit, Index row)
{
    const double m = fit.fitted_mean(row);
    switch (fit.family) {
    case Family::poisson_log:
        return {m, m, m, m + 3.0 * m * m};
    case Family::binomial_logit: {
        const double pq = m * (1.0 - m);
        return {m, pq, pq * (1.0 - 2.0 * m), pq * (1.0 - 3.0 * pq)};
    }
    case Family::gaussian_identity: {
        const double s2 = fit.theta_hat(fit.coef_count()) * fit.theta_hat(fit.coef_count());
        return {m, s2, 0.0, 3.0 * s2 * s2};
    }
    }
    return {m, 0, 0, 0};
}

} // namespace focusfic
