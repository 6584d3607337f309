#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "focusfic/error.hpp"
#include "focusfic/fic_fixed.hpp"
#include "focusfic/search.hpp"
#include "support.hpp"

#include <cmath>
#include <random>

using namespace focusfic;

namespace {

FocusSpec mean_at(const MatrixXd& wide, Index row)
{
    FocusSpec f;
    f.kind = FocusKind::mean_response;
    f.eval_points = wide.row(row);
    f.weights = VectorXd::Ones(1);
    return f;
}

struct Pair {
    FitResult wide;
    FitResult cand;
    CandidateSpec spec;
};

Pair fit_pair(const Dataset& d, const DesignTemplate& tmpl, const std::string& indicator, Family fam)
{
    const MatrixXd wide = tmpl.wide_design(d);
    Pair p;
    p.spec = parse_indicator(indicator, tmpl, fam);
    p.wide = fit_mle(wide, d.response(), fam);
    p.cand = fit_mle(select_columns(wide, p.spec), d.response(), fam);
    return p;
}

} // namespace

TEST_CASE("poisson closed-form sandwich equals the generic model-based one")
{
    const Dataset d = testdata::birds();
    const auto tmpl = testdata::bird_template();
    for (const char* ind : {"10000,000000", "10010,000000", "11101,001000", "11111,100000"}) {
        const Pair p = fit_pair(d, tmpl, ind, Family::poisson_log);
        const SandwichSet a = sandwich_matrices(p.wide, p.cand, SandwichMethod::model_based);
        const SandwichSet b = poisson_sandwich_closed_form(p.wide, p.cand);
        CHECK((a.J_hat - b.J_hat).norm() <= 1e-8 * b.J_hat.norm());
        CHECK((a.J_M_hat - b.J_M_hat).norm() <= 1e-8 * b.J_M_hat.norm());
        CHECK((a.K_M_hat - b.K_M_hat).norm() <= 1e-8 * b.K_M_hat.norm());
        CHECK((a.C_M_hat - b.C_M_hat).norm() <= 1e-8 * b.C_M_hat.norm());
    }
}

TEST_CASE("fixed FIC against a direct evaluation")
{
    const Dataset d = testdata::birds();
    const auto tmpl = testdata::bird_template();
    const MatrixXd wide = tmpl.wide_design(d);
    const Pair p = fit_pair(d, tmpl, "11101,001000", Family::poisson_log);
    const FocusSpec f = mean_at(wide, 0);
    const FicRecord r = fic_fixed_score(p.wide, p.cand, p.spec, f, 0, SandwichMethod::model_based);

    const double n = 14.0;
    const MatrixXd xm = select_columns(wide, p.spec);
    const VectorXd mw = (wide * p.wide.theta_hat).array().exp();
    const VectorXd mm = (xm * p.cand.theta_hat).array().exp();
    const MatrixXd J = wide.transpose() * mw.asDiagonal() * wide / n;
    const MatrixXd JM = xm.transpose() * mm.asDiagonal() * xm / n;
    const MatrixXd KM = xm.transpose() * mw.asDiagonal() * xm / n;
    const MatrixXd CM = wide.transpose() * mw.asDiagonal() * xm / n;
    const VectorXd x0 = wide.row(0).transpose();
    const VectorXd x0m = xm.row(0).transpose();
    const double muw = std::exp(x0.dot(p.wide.theta_hat));
    const double mum = std::exp(x0m.dot(p.cand.theta_hat));
    const VectorXd c = muw * x0;
    const VectorXd cm = mum * x0m;
    const MatrixXd Ji = J.inverse();
    const MatrixXd JMi = JM.inverse();
    const double var_m = cm.dot(JMi * KM * JMi * cm) / n;
    const double kappa = (c.dot(Ji * c) + var_m * n - 2 * c.dot(Ji * CM * JMi * cm)) / n;
    const double b = mum - muw;

    CHECK(r.mu_hat == doctest::Approx(mum).epsilon(1e-12));
    CHECK(r.bias_hat == doctest::Approx(b).epsilon(1e-10));
    CHECK(r.se * r.se == doctest::Approx(var_m).epsilon(1e-7));
    CHECK(r.kappa_sq_over_n == doctest::Approx(kappa).epsilon(1e-6));
    CHECK(r.fic_u == doctest::Approx(var_m + b * b - kappa).epsilon(1e-7));
    CHECK(r.fic_adj == doctest::Approx(var_m + std::max(b * b - kappa, 0.0)).epsilon(1e-7));
}

TEST_CASE("the wide model has zero bias and the inverse-information variance")
{
    const Dataset d = testdata::birds();
    const auto tmpl = testdata::bird_template();
    const MatrixXd wide = tmpl.wide_design(d);
    const Pair p = fit_pair(d, tmpl, "11111,111111", Family::poisson_log);
    const FocusSpec f = mean_at(wide, 2);
    const FicRecord r = fic_fixed_score(p.wide, p.cand, p.spec, f, 0);
    const VectorXd c = std::exp(wide.row(2).dot(p.wide.theta_hat)) * wide.row(2).transpose();
    CHECK(r.bias_hat == 0.0);
    CHECK(r.kappa_sq_over_n == 0.0);
    CHECK(r.se * r.se == doctest::Approx(c.dot(p.wide.obs_info.inverse() * c) / 14.0).epsilon(1e-6));
    CHECK(r.fic_adj == doctest::Approx(r.se * r.se).epsilon(1e-12));
}

TEST_CASE("unbiased fixed FIC depends on the sandwich only through C")
{
    const Dataset d = testdata::birds();
    const auto tmpl = testdata::bird_template();
    const MatrixXd wide = tmpl.wide_design(d);
    const CandidateSpec full = parse_indicator("11111,111111", tmpl, Family::poisson_log);
    for (const char* ind : {"10000,000000", "11010,000000", "11111,010110"}) {
        const Pair p = fit_pair(d, tmpl, ind, Family::poisson_log);
        for (auto method : {SandwichMethod::empirical, SandwichMethod::model_based}) {
            const FixedScorer scorer(p.wide, p.cand, p.spec, method);
            const auto& s = scorer.sandwich();
            for (Index row : {0, 7, 13}) {
                const FocusSpec f = mean_at(wide, row);
                const FicRecord r = scorer.score(f, 0);
                const FocusValue w = eval_focus(f, 0, p.wide, full);
                const FocusValue m = eval_focus(f, 0, p.cand, p.spec);
                const double b = m.mu_hat - w.mu_hat;
                const double want = b * b - w.gradient.dot(s.J_hat.inverse() * w.gradient) / 14.0 +
                    2.0 * w.gradient.dot(s.J_hat.inverse() * s.C_M_hat * s.J_M_hat.inverse() * m.gradient) / 14.0;
                if (!r.kappa_clipped) {
                    CHECK(r.fic_u == doctest::Approx(want).epsilon(1e-7));
                }
            }
        }
    }
}

TEST_CASE("kappa estimate matches the parametric-bootstrap variance of the bias estimator")
{
    std::mt19937_64 rng(2024);
    VectorXd beta(3);
    beta << 0.5, -0.4, 0.3;
    const Dataset d = testdata::poisson_data(200, beta, 1.0, rng);
    const auto tmpl = DesignTemplate::pairwise(d.names(), false);
    const MatrixXd wide = tmpl.wide_design(d);
    const Pair p = fit_pair(d, tmpl, "1100", Family::poisson_log);
    FocusSpec f = mean_at(wide, 0);
    f.eval_points(0, 1) = 0.4;
    f.eval_points(0, 2) = -0.3;
    f.eval_points(0, 3) = 0.5;
    const FicRecord r = fic_fixed_score(p.wide, p.cand, p.spec, f, 0, SandwichMethod::model_based);

    const int reps = 2000;
    const MatrixXd xm = select_columns(wide, p.spec);
    double sb = 0;
    double sbb = 0;
    double sm = 0;
    double smm = 0;
    VectorXd y(200);
    for (int b = 0; b < reps; ++b) {
        for (Index i = 0; i < 200; ++i) {
            std::poisson_distribution<int> pois(p.wide.fitted_mean(i));
            y(i) = pois(rng);
        }
        const FitResult w = fit_mle(wide, y, Family::poisson_log);
        const FitResult m = fit_mle(xm, y, Family::poisson_log);
        const double mu_w = std::exp(f.eval_points.row(0).dot(w.theta_hat));
        const double mu_m = std::exp(f.eval_points.row(0).head(2).dot(m.theta_hat));
        sb += mu_m - mu_w;
        sbb += (mu_m - mu_w) * (mu_m - mu_w);
        sm += mu_m;
        smm += mu_m * mu_m;
    }
    const double var_b = (sbb - sb * sb / reps) / (reps - 1);
    const double var_m = (smm - sm * sm / reps) / (reps - 1);
    CHECK(r.kappa_sq_over_n == doctest::Approx(var_b).epsilon(0.15));
    CHECK(r.se * r.se == doctest::Approx(var_m).epsilon(0.15));
}

TEST_CASE("fixed framework across families")
{
    std::mt19937_64 rng(3);
    VectorXd beta(2);
    beta << 0.8, -0.5;
    const Dataset d = testdata::binary_data(150, beta, 0.1, rng);
    const auto tmpl = DesignTemplate::pairwise(d.names(), false);
    const MatrixXd wide = tmpl.wide_design(d);
    const Pair p = fit_pair(d, tmpl, "110", Family::binomial_logit);
    const FocusSpec f = mean_at(wide, 4);
    const FicRecord r = fic_fixed_score(p.wide, p.cand, p.spec, f, 0, SandwichMethod::model_based);
    CHECK(r.se > 0.0);
    CHECK(std::isfinite(r.fic_u));
    CHECK(r.fic_adj >= r.se * r.se);
    CHECK_THROWS_AS(parse_sandwich_method("bootstrap"), ConfigError);
}
