#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "focusfic/error.hpp"
#include "focusfic/fic_local.hpp"
#include "focusfic/search.hpp"
#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <random>

using namespace focusfic;

namespace {

FocusSpec point_focus(FocusKind kind, const VectorXd& row)
{
    FocusSpec f;
    f.kind = kind;
    f.eval_points = row.transpose();
    f.weights = VectorXd::Ones(1);
    return f;
}

double ks_distance(std::vector<double> a, std::vector<double> b)
{
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::size_t i = 0;
    std::size_t j = 0;
    double worst = 0.0;
    while (i < a.size() && j < b.size()) {
        const double v = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= v) ++i;
        while (j < b.size() && b[j] <= v) ++j;
        worst = std::max(worst, std::abs(double(i) / a.size() - double(j) / b.size()));
    }
    return worst;
}

struct Small {
    Dataset data;
    FitResult wide;
    LocalFrame frame;
};

Small small_poisson()
{
    std::mt19937_64 rng(77);
    VectorXd beta(3);
    beta << 0.3, -0.2, 0.25;
    Dataset d = testdata::poisson_data(150, beta, 1.2, rng);
    const MatrixXd wide = DesignTemplate::pairwise(d.names(), false).wide_design(d);
    FitResult w = fit_mle(wide, d.response(), Family::poisson_log);
    VectorXd x0(4);
    x0 << 1.0, 0.5, -0.4, 0.2;
    LocalFrame frame = build_local_frame(w, point_focus(FocusKind::mean_response, x0), 0, {0});
    return {std::move(d), std::move(w), std::move(frame)};
}

} // namespace

TEST_CASE("information blocks and Q")
{
    const Small s = small_poisson();
    const MatrixXd Ji = s.wide.obs_info.inverse();
    CHECK((s.frame.Q - Ji.bottomRightCorner(3, 3)).norm() < 1e-10 * s.frame.Q.norm());
    CHECK((s.frame.Q_inv - s.frame.Q.inverse()).norm() < 1e-8 * s.frame.Q_inv.norm());
    CHECK((s.frame.D_n - std::sqrt(150.0) * s.wide.theta_hat.tail(3)).norm() < 1e-12);
}

TEST_CASE("G against explicit inversion on a three-parameter example")
{
    const Small s = small_poisson();
    const MatrixXd Qi = s.frame.Q.inverse();
    MatrixXd pi = MatrixXd::Zero(2, 3);
    pi(0, 0) = 1;
    pi(1, 2) = 1;
    const MatrixXd want = pi.transpose() * (pi * Qi * pi.transpose()).inverse() * pi * Qi;
    const ProjectionG g = projection_matrix(s.frame, {0, 2});
    CHECK((g.G - want).norm() < 1e-10);
    CHECK(g.G.trace() == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(projection_matrix(s.frame, {}).G.isZero(0.0));
    CHECK(projection_matrix(s.frame, {0, 1, 2}).G.isIdentity(0.0));
}

TEST_CASE("G invariants over all bird candidates")
{
    const Dataset d = testdata::birds();
    const auto tmpl = testdata::bird_template();
    const FitResult w = fit_mle(tmpl.wide_design(d), d.response(), Family::poisson_log);
    const LocalFrame frame = build_information_frame(w, {0});
    SearchConfig cfg;
    cfg.tmpl = tmpl;
    double idem = 0.0;
    double trace = 0.0;
    for (const auto& c : enumerate_candidates(cfg)) {
        const auto sub = open_subset(frame, c);
        const MatrixXd G = projection_matrix(frame, sub).G;
        idem = std::max(idem, (G * G - G).cwiseAbs().maxCoeff());
        trace = std::max(trace, std::abs(G.trace() - static_cast<double>(sub.size())));
    }
    CHECK(idem <= 1e-8);
    CHECK(trace <= 1e-8);
}

TEST_CASE("logistic local FIC equals the closed form")
{
    std::mt19937_64 rng(31);
    VectorXd beta(3);
    beta << 0.7, -0.5, 0.2;
    const Dataset d = testdata::binary_data(300, beta, -0.3, rng);
    const auto tmpl = DesignTemplate::pairwise(d.names(), false);
    const MatrixXd X = tmpl.wide_design(d);
    const FitResult w = fit_mle(X, d.response(), Family::binomial_logit);
    VectorXd x0(4);
    x0 << 1.0, 0.3, 0.8, -1.1;
    const FocusSpec f = point_focus(FocusKind::linear_predictor, x0);
    // protect the intercept and x1; x2 and x3 are open
    const LocalFrame frame = build_local_frame(w, f, 0, {0, 1});

    const double n = 300.0;
    const VectorXd p = w.fitted_mean;
    MatrixXd J = MatrixXd::Zero(4, 4);
    for (Index i = 0; i < X.rows(); ++i) {
        J += p(i) * (1 - p(i)) * X.row(i).transpose() * X.row(i);
    }
    J /= n;
    const MatrixXd J00 = J.topLeftCorner(2, 2);
    const MatrixXd J10 = J.bottomLeftCorner(2, 2);
    const MatrixXd Q = J.inverse().bottomRightCorner(2, 2);
    const VectorXd xz = x0.head(2);
    const VectorXd z0 = x0.tail(2);
    const VectorXd a = z0 - J10 * J00.inverse() * xz;  // = -omega
    const double tau0 = xz.dot(J00.inverse() * xz);
    const VectorXd gamma = w.theta_hat.tail(2);
    const MatrixXd I = MatrixXd::Identity(2, 2);

    for (const std::vector<Index>& sub : {std::vector<Index>{}, {0}, {1}, {0, 1}}) {
        MatrixXd G = MatrixXd::Zero(2, 2);
        if (!sub.empty()) {
            MatrixXd pi = MatrixXd::Zero(static_cast<Index>(sub.size()), 2);
            for (std::size_t k = 0; k < sub.size(); ++k) {
                pi(static_cast<Index>(k), sub[k]) = 1;
            }
            G = pi.transpose() * (pi * Q.inverse() * pi.transpose()).inverse() * pi * Q.inverse();
        }
        const double want = (tau0 + a.dot(G * Q * G.transpose() * a) +
                             n * a.dot((I - G) * (gamma * gamma.transpose() - Q / n) * (I - G).transpose() * a)) /
            n;
        CandidateSpec c;
        c.family = Family::binomial_logit;
        c.indicator = {1, 1, 0, 0};
        for (Index k : sub) {
            c.indicator[static_cast<std::size_t>(k) + 2] = 1;
        }
        const FicRecord r = fic_local_score(frame, projection_matrix(frame, sub), c, 0.0);
        CHECK(r.fic_u == doctest::Approx(want).epsilon(1e-8));
    }
}

TEST_CASE("intercept must be protected")
{
    const Small s = small_poisson();
    CHECK_THROWS_AS(build_information_frame(s.wide, {1}), ConfigError);
}

TEST_CASE("normal quantile and uniform mapping")
{
    CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-14));
    CHECK(normal_quantile(0.5) == doctest::Approx(0.0).scale(1.0).epsilon(1e-15));
    CHECK(unit_open(0) > 0.0);
    CHECK(unit_open(~std::uint64_t{0}) < 1.0);
}

TEST_CASE("fixed-model limit law moments")
{
    const Small s = small_poisson();
    std::vector<ProjectionG> models = {projection_matrix(s.frame, {}), projection_matrix(s.frame, {1}),
                                       projection_matrix(s.frame, {0, 2})};
    SimulationSpec spec;
    spec.delta = VectorXd(3);
    spec.delta << 1.5, -0.8, 0.6;
    spec.draws = 100000;
    spec.seed = 42;
    const VectorXd& om = s.frame.omega;
    for (Index m = 0; m < 3; ++m) {
        const auto draws = simulate_post_selection(s.frame, models, fixed_model_weights(m, 3), spec);
        const MatrixXd& G = models[static_cast<std::size_t>(m)].G;
        const double mean = om.dot((MatrixXd::Identity(3, 3) - G) * spec.delta);
        const double var = s.frame.tau0_sq + om.dot(G * s.frame.Q * G.transpose() * om);
        double sum = 0;
        double sq = 0;
        for (double v : draws) {
            sum += v;
        }
        const double m1 = sum / draws.size();
        for (double v : draws) {
            sq += (v - m1) * (v - m1);
        }
        const double v1 = sq / (draws.size() - 1);
        const double nd = static_cast<double>(draws.size());
        CHECK(std::abs(m1 - mean) <= 4 * std::sqrt(var / nd));
        // normal draws: var of the sample variance is 2 sigma^4 / (N - 1)
        CHECK(std::abs(v1 - var) <= 4 * var * std::sqrt(2.0 / (nd - 1)));
    }
}

TEST_CASE("simulation is reproducible and independent of threads")
{
    const Small s = small_poisson();
    std::vector<ProjectionG> models = {projection_matrix(s.frame, {}), projection_matrix(s.frame, {0}),
                                       projection_matrix(s.frame, {0, 1, 2})};
    SimulationSpec spec;
    spec.delta = s.frame.D_n;
    spec.draws = 20000;
    spec.seed = 9;
    const auto w = fic_argmin_weights(s.frame, models, true);
    const auto a = simulate_post_selection(s.frame, models, w, spec);
    const auto b = simulate_post_selection(s.frame, models, w, spec);
    spec.threads = 3;
    const auto c = simulate_post_selection(s.frame, models, w, spec);
    CHECK(a == b);
    CHECK(a == c);
    spec.seed = 10;
    CHECK(simulate_post_selection(s.frame, models, w, spec) != a);
}

TEST_CASE("post-selection law converges in distribution")
{
    const Small s = small_poisson();
    std::vector<ProjectionG> models = {projection_matrix(s.frame, {}), projection_matrix(s.frame, {2}),
                                       projection_matrix(s.frame, {0, 1, 2})};
    SimulationSpec spec;
    spec.delta = s.frame.D_n;
    spec.draws = 100000;
    spec.seed = 5;
    const auto w = fic_exponential_weights(s.frame, models, 1.0, true);
    const auto a = simulate_post_selection(s.frame, models, w, spec);
    spec.draws = 1000000;
    spec.seed = 6;
    const auto b = simulate_post_selection(s.frame, models, w, spec);
    CHECK(ks_distance(a, b) < 0.01);
}

TEST_CASE("weight functions return probability vectors")
{
    const Small s = small_poisson();
    std::vector<ProjectionG> models = {projection_matrix(s.frame, {}), projection_matrix(s.frame, {1}),
                                       projection_matrix(s.frame, {0, 1, 2})};
    const VectorXd draw = s.frame.D_n;
    for (const auto& w : {fic_argmin_weights(s.frame, models, true), fic_argmin_weights(s.frame, models, false),
                          fic_exponential_weights(s.frame, models, 2.0, true)}) {
        const VectorXd p = w(draw);
        CHECK(p.size() == 3);
        CHECK(p.sum() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(p.minCoeff() >= 0.0);
    }
    const VectorXd f = fixed_model_weights(1, 3)(draw);
    CHECK(f(1) == 1.0);
    CHECK(f.sum() == 1.0);
}
