#include "focusfic/fic_local.hpp"

#include "focusfic/error.hpp"
#include "focusfic/linalg.hpp"

#include <boost/math/special_functions/erf.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <thread>

namespace focusfic {

namespace {

MatrixXd take(const MatrixXd& m, const std::vector<Index>& rows, const std::vector<Index>& cols)
{
    MatrixXd out(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < cols.size(); ++j) {
            out(static_cast<Index>(i), static_cast<Index>(j)) = m(rows[i], cols[j]);
        }
    }
    return out;
}

VectorXd take(const VectorXd& v, const std::vector<Index>& idx)
{
    VectorXd out(static_cast<Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) {
        out(static_cast<Index>(i)) = v(idx[i]);
    }
    return out;
}

} // namespace

LocalFrame build_information_frame(const FitResult& wide_fit, const std::vector<Index>& protected_slots)
{
    const Index coefs = wide_fit.coef_count();
    const Index params = wide_fit.param_count();
    std::vector<std::uint8_t> is_protected(static_cast<std::size_t>(params), 0);
    for (Index s : protected_slots) {
        if (s < 0 || s >= coefs) {
            throw ConfigError(fmt::format("protected slot {} is out of range", s));
        }
        is_protected[static_cast<std::size_t>(s)] = 1;
    }
    if (!is_protected[0]) {
        throw ConfigError("the intercept must be protected");
    }
    for (Index j = coefs; j < params; ++j) {
        is_protected[static_cast<std::size_t>(j)] = 1;  // gaussian sigma
    }

    LocalFrame frame;
    frame.n = wide_fit.n_obs();
    for (Index j = 0; j < params; ++j) {
        (is_protected[static_cast<std::size_t>(j)] ? frame.protected_params : frame.open_params).push_back(j);
    }
    const MatrixXd& J = wide_fit.obs_info;
    frame.J00 = take(J, frame.protected_params, frame.protected_params);
    frame.J01 = take(J, frame.protected_params, frame.open_params);
    frame.J10 = take(J, frame.open_params, frame.protected_params);
    frame.J11 = take(J, frame.open_params, frame.open_params);

    const Index q = frame.open_count();
    if (q > 0) {
        const SpdSolver j00(frame.J00, "protected information block J00");
        frame.Q_inv = frame.J11 - frame.J10 * j00.solve(frame.J01);
        frame.Q_inv = 0.5 * (frame.Q_inv + frame.Q_inv.transpose());
        const SpdSolver schur(frame.Q_inv, "open information block Q^{-1}");
        frame.Q = schur.solve(MatrixXd(MatrixXd::Identity(q, q)));
        frame.Q = 0.5 * (frame.Q + frame.Q.transpose());
    } else {
        frame.Q_inv.resize(0, 0);
        frame.Q.resize(0, 0);
    }
    frame.D_n = std::sqrt(static_cast<double>(frame.n)) * take(VectorXd(wide_fit.theta_hat), frame.open_params);
    return frame;
}

void attach_focus(LocalFrame& frame, const FitResult& wide_fit, const FocusSpec& focus, Index point)
{
    CandidateSpec wide_spec;
    wide_spec.indicator.assign(static_cast<std::size_t>(wide_fit.coef_count()), 1);
    wide_spec.family = wide_fit.family;
    const FocusValue value = eval_focus(focus, point, wide_fit, wide_spec);
    const VectorXd d_theta = take(value.gradient, frame.protected_params);
    const VectorXd d_gamma = take(value.gradient, frame.open_params);
    const SpdSolver j00(frame.J00, "protected information block J00");
    const VectorXd j00_inv_d = j00.solve(d_theta);
    frame.tau0_sq = d_theta.dot(j00_inv_d);
    frame.omega = frame.J10 * j00_inv_d - d_gamma;
    frame.mu_wide = value.mu_hat;
}

LocalFrame build_local_frame(const FitResult& wide_fit, const FocusSpec& focus, Index point,
                             const std::vector<Index>& protected_slots)
{
    LocalFrame frame = build_information_frame(wide_fit, protected_slots);
    attach_focus(frame, wide_fit, focus, point);
    return frame;
}

ProjectionG projection_matrix(const LocalFrame& frame, const std::vector<Index>& subset)
{
    const Index q = frame.open_count();
    ProjectionG out;
    out.subset = subset;
    std::sort(out.subset.begin(), out.subset.end());
    if (std::adjacent_find(out.subset.begin(), out.subset.end()) != out.subset.end()) {
        throw ConfigError("projection subset has repeated entries");
    }
    for (Index j : out.subset) {
        if (j < 0 || j >= q) {
            throw ConfigError(fmt::format("projection subset entry {} is outside 0..{}", j, q - 1));
        }
    }
    if (out.subset.empty()) {
        out.G = MatrixXd::Zero(q, q);
        return out;
    }
    if (static_cast<Index>(out.subset.size()) == q) {
        out.G = MatrixXd::Identity(q, q);
        return out;
    }
    std::vector<Index> all(static_cast<std::size_t>(q));
    for (Index j = 0; j < q; ++j) {
        all[static_cast<std::size_t>(j)] = j;
    }
    const MatrixXd inner = take(frame.Q_inv, out.subset, out.subset);
    const MatrixXd rows = take(frame.Q_inv, out.subset, all);
    const SpdSolver solver(inner, "projected matrix pi_M Q^{-1} pi_M'");
    const MatrixXd block = solver.solve(rows);
    out.G = MatrixXd::Zero(q, q);
    for (std::size_t k = 0; k < out.subset.size(); ++k) {
        out.G.row(out.subset[k]) = block.row(static_cast<Index>(k));
    }
    // the subset columns of those rows are the identity in exact arithmetic
    for (Index a : out.subset) {
        for (Index b : out.subset) {
            out.G(a, b) = a == b ? 1.0 : 0.0;
        }
    }
    return out;
}

std::vector<Index> open_subset(const LocalFrame& frame, const CandidateSpec& candidate)
{
    for (Index j : frame.protected_params) {
        if (j < static_cast<Index>(candidate.indicator.size()) && !candidate.indicator[static_cast<std::size_t>(j)]) {
            throw ConfigError(fmt::format("candidate leaves protected slot {} off", j));
        }
    }
    std::vector<Index> subset;
    for (Index k = 0; k < frame.open_count(); ++k) {
        const Index slot = frame.open_params[static_cast<std::size_t>(k)];
        if (slot >= static_cast<Index>(candidate.indicator.size())) {
            throw ConfigError("candidate indicator is shorter than the wide model");
        }
        if (candidate.indicator[static_cast<std::size_t>(slot)]) {
            subset.push_back(k);
        }
    }
    return subset;
}

FicRecord fic_local_score(const LocalFrame& frame, const ProjectionG& projection, const CandidateSpec& candidate,
                          double mu_hat_candidate)
{
    if (frame.omega.size() != frame.open_count()) {
        throw ConfigError("local frame has no focus attached");
    }
    const double n = static_cast<double>(frame.n);
    const Index q = frame.open_count();
    const MatrixXd& G = projection.G;
    const VectorXd g_omega = G.transpose() * frame.omega;
    const VectorXd residual = frame.omega - g_omega;  // (I - G)' omega
    FicRecord rec;
    rec.candidate = candidate;
    rec.mu_hat = mu_hat_candidate;
    const double var = frame.tau0_sq + (q > 0 ? g_omega.dot(frame.Q * g_omega) : 0.0);
    rec.se = std::sqrt(std::max(var, 0.0) / n);
    rec.bias_hat = q > 0 ? residual.dot(frame.D_n) / std::sqrt(n) : 0.0;
    rec.kappa_sq_over_n = q > 0 ? residual.dot(frame.Q * residual) / n : 0.0;
    finish_record(rec);
    return rec;
}

// ---------------------------------------------------------------------------
// Simulation
// ---------------------------------------------------------------------------

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

double unit_open(std::uint64_t bits)
{
    return (static_cast<double>(bits >> 12) + 0.5) * 0x1.0p-52;
}

double normal_quantile(double u)
{
    return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * u);
}

WeightFunction fixed_model_weights(Index index, Index model_count)
{
    if (index < 0 || index >= model_count) {
        throw ConfigError("fixed model index out of range");
    }
    return [index, model_count](const VectorXd&) {
        VectorXd w = VectorXd::Zero(model_count);
        w(index) = 1.0;
        return w;
    };
}

namespace {

struct LimitFicTerms {
    std::vector<double> variance;   // tau0^2 + omega' G Q G' omega
    std::vector<double> kappa_sq;   // r' Q r
    std::vector<VectorXd> residual; // (I - G)' omega
};

LimitFicTerms limit_terms(const LocalFrame& frame, const std::vector<ProjectionG>& models)
{
    LimitFicTerms t;
    for (const auto& m : models) {
        const VectorXd g_omega = m.G.transpose() * frame.omega;
        const VectorXd r = frame.omega - g_omega;
        t.variance.push_back(frame.tau0_sq + g_omega.dot(frame.Q * g_omega));
        t.kappa_sq.push_back(r.dot(frame.Q * r));
        t.residual.push_back(r);
    }
    return t;
}

VectorXd limit_fic(const LimitFicTerms& t, const VectorXd& draw, bool adjusted)
{
    VectorXd out(static_cast<Index>(t.variance.size()));
    for (std::size_t m = 0; m < t.variance.size(); ++m) {
        const double b = t.residual[m].dot(draw);
        double sq = b * b - t.kappa_sq[m];
        if (adjusted) {
            sq = std::max(sq, 0.0);
        }
        out(static_cast<Index>(m)) = t.variance[m] + sq;
    }
    return out;
}

} // namespace

WeightFunction fic_argmin_weights(const LocalFrame& frame, const std::vector<ProjectionG>& models, bool adjusted)
{
    if (models.empty()) {
        throw ConfigError("argmin weights need at least one model");
    }
    return [terms = limit_terms(frame, models), adjusted](const VectorXd& draw) {
        const VectorXd fic = limit_fic(terms, draw, adjusted);
        Index best = 0;
        for (Index m = 1; m < fic.size(); ++m) {
            if (fic(m) < fic(best)) {
                best = m;
            }
        }
        VectorXd w = VectorXd::Zero(fic.size());
        w(best) = 1.0;
        return w;
    };
}

WeightFunction fic_exponential_weights(const LocalFrame& frame, const std::vector<ProjectionG>& models,
                                       double lambda, bool adjusted)
{
    if (models.empty()) {
        throw ConfigError("exponential weights need at least one model");
    }
    if (!(lambda >= 0.0)) {
        throw ConfigError("lambda must be nonnegative");
    }
    const double fic_wide = frame.tau0_sq + frame.omega.dot(frame.Q * frame.omega);
    if (!(fic_wide > 0.0)) {
        throw NumericalError("wide-model limit risk is not positive");
    }
    return [terms = limit_terms(frame, models), adjusted, lambda, fic_wide](const VectorXd& draw) {
        const VectorXd fic = limit_fic(terms, draw, adjusted);
        const double lo = fic.minCoeff();
        VectorXd w = (-lambda * (fic.array() - lo) / fic_wide).exp().matrix();
        return VectorXd(w / w.sum());
    };
}

std::vector<double> simulate_post_selection(const LocalFrame& frame, const std::vector<ProjectionG>& models,
                                            const WeightFunction& weights, const SimulationSpec& spec)
{
    const Index q = frame.open_count();
    if (spec.delta.size() != q) {
        throw ConfigError(fmt::format("delta has length {}, expected {}", spec.delta.size(), q));
    }
    if (frame.omega.size() != q) {
        throw ConfigError("local frame has no focus attached");
    }
    for (const auto& m : models) {
        if (m.G.rows() != q || m.G.cols() != q) {
            throw ConfigError("projection matrix has the wrong shape");
        }
    }
    const double tau0 = std::sqrt(std::max(frame.tau0_sq, 0.0));
    MatrixXd chol = MatrixXd::Zero(q, q);
    if (q > 0) {
        Eigen::LLT<MatrixXd> llt(frame.Q);
        if (llt.info() != Eigen::Success) {
            throw NumericalError("Q is not positive definite");
        }
        chol = llt.matrixL();
    }

    std::vector<double> out(spec.draws);
    const std::size_t blocks = (spec.draws + simulation_block_size - 1) / simulation_block_size;

    const auto run_block = [&](std::size_t b) {
        std::mt19937_64 rng(splitmix64(spec.seed + b));
        VectorXd z(q);
        const std::size_t begin = b * simulation_block_size;
        const std::size_t end = std::min(spec.draws, begin + simulation_block_size);
        for (std::size_t i = begin; i < end; ++i) {
            const double lambda0 = tau0 * normal_quantile(unit_open(rng()));
            for (Index j = 0; j < q; ++j) {
                z(j) = normal_quantile(unit_open(rng()));
            }
            const VectorXd draw = spec.delta + chol * z;
            const VectorXd w = weights(draw);
            if (w.size() != static_cast<Index>(models.size()) || (w.array() < 0.0).any()
                || std::abs(w.sum() - 1.0) > 1e-10 || !w.allFinite()) {
                throw ConfigError("weight scheme returned invalid weights (negative or not summing to 1)");
            }
            VectorXd estimate = VectorXd::Zero(q);
            for (std::size_t m = 0; m < models.size(); ++m) {
                if (w(static_cast<Index>(m)) != 0.0) {
                    estimate += w(static_cast<Index>(m)) * (models[m].G * draw);
                }
            }
            out[i] = lambda0 + frame.omega.dot(spec.delta - estimate);
        }
    };

    const unsigned threads = std::max(1u, std::min<unsigned>(spec.threads, static_cast<unsigned>(blocks)));
    if (threads <= 1) {
        for (std::size_t b = 0; b < blocks; ++b) {
            run_block(b);
        }
        return out;
    }
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
            try {
                for (std::size_t b = t; b < blocks; b += threads) {
                    run_block(b);
                }
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) {
        th.join();
    }
    for (const auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
    return out;
}

} // namespace focusfic
