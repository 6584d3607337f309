#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "focusfic/error.hpp"
#include "focusfic/search.hpp"
#include "support.hpp"

#include <cmath>
#include <random>

using namespace focusfic;

namespace {

FocusSpec first_row_mean(const MatrixXd& wide)
{
    FocusSpec f;
    f.kind = FocusKind::mean_response;
    f.eval_points = wide.row(0);
    f.weights = VectorXd::Ones(1);
    return f;
}

} // namespace

TEST_CASE("enumeration counts")
{
    SearchConfig cfg;
    cfg.tmpl = testdata::bird_template();
    CHECK(enumerate_candidates(cfg).size() == 113);
    cfg.hierarchy = false;
    CHECK(enumerate_candidates(cfg).size() == 1024);
    cfg.tmpl = DesignTemplate::pairwise({"x1"}, false);
    CHECK(enumerate_candidates(cfg).size() == 2);
}

TEST_CASE("enumeration order gives the bird model ids")
{
    SearchConfig cfg;
    cfg.tmpl = testdata::bird_template();
    const auto all = enumerate_candidates(cfg);
    const auto id = [&](std::size_t k) { return indicator_string(all[k - 1], cfg.tmpl); };
    CHECK(id(1) == "10000,000000");
    CHECK(id(5) == "10010,000000");
    CHECK(id(20) == "11111,100000");
    CHECK(id(28) == "11101,001000");
    CHECK(id(67) == "11111,010110");
    CHECK(id(113) == "11111,111111");
}

TEST_CASE("protected slots and limits")
{
    SearchConfig cfg;
    cfg.tmpl = testdata::bird_template();
    cfg.protected_mask.assign(11, 0);
    cfg.protected_mask[0] = 1;
    cfg.protected_mask[3] = 1;
    const auto all = enumerate_candidates(cfg);
    for (const auto& c : all) {
        CHECK(c.indicator[3] == 1);
    }
    // main-effect sets containing x3 with any subset of their own interactions: 1 + 3*2 + 3*8 + 64
    CHECK(all.size() == 95);
    cfg.protected_mask[0] = 0;
    CHECK_THROWS_AS(enumerate_candidates(cfg), ConfigError);

    SearchConfig big;
    big.tmpl = DesignTemplate::pairwise(testdata::covariate_names(20), false);
    CHECK_THROWS_AS(enumerate_candidates(big), ConfigError);
}

TEST_CASE("bird search selections")
{
    const Dataset d = testdata::birds();
    SearchConfig cfg;
    cfg.tmpl = testdata::bird_template();
    const RankingResult r = run_search(d, cfg, first_row_mean(cfg.tmpl.wide_design(d)));
    CHECK(r.candidates.size() == 113);
    CHECK(r.failures.empty());
    CHECK(r.selected_outcome().indicator == "10010,000000");
    CHECK(r.candidates[static_cast<std::size_t>(r.aic_best)].model_id == 67);
    CHECK(r.candidates[static_cast<std::size_t>(r.bic_best)].model_id == 20);
    CHECK(r.wide == 112);
    // the selected model minimizes the criterion
    for (const auto& c : r.candidates) {
        CHECK(c.criterion_value >= r.selected_outcome().criterion_value);
    }
    CHECK(r.find("11111,100000").value() == 19);
}

TEST_CASE("ranking does not depend on threads")
{
    const Dataset d = testdata::birds();
    SearchConfig cfg;
    cfg.tmpl = testdata::bird_template();
    const FocusSpec f = first_row_mean(cfg.tmpl.wide_design(d));
    const RankingResult a = run_search(d, cfg, f);
    cfg.threads = 4;
    const RankingResult b = run_search(d, cfg, f);
    REQUIRE(a.candidates.size() == b.candidates.size());
    CHECK(a.order == b.order);
    for (std::size_t i = 0; i < a.candidates.size(); ++i) {
        CHECK(a.candidates[i].criterion_value == b.candidates[i].criterion_value);
        CHECK(a.candidates[i].aic == b.candidates[i].aic);
    }
}

TEST_CASE("failed candidates are reported and left unranked")
{
    const Dataset d = testdata::birds();
    SearchConfig cfg;
    cfg.tmpl = testdata::bird_template();
    cfg.explicit_candidates = {parse_indicator("10010,000000", cfg.tmpl, Family::poisson_log),
                               parse_indicator("10010,000000", cfg.tmpl, Family::binomial_logit),
                               parse_indicator("11111,111111", cfg.tmpl, Family::poisson_log)};
    const RankingResult r = run_search(d, cfg, first_row_mean(cfg.tmpl.wide_design(d)));
    REQUIRE(r.failures.size() == 1);
    CHECK(r.failures[0] == 1);
    CHECK_FALSE(r.candidates[1].failure.empty());
    CHECK(r.candidates[1].rank_fic == 0);
    CHECK(r.order.size() == 2);
}

TEST_CASE("ties go to the smaller model")
{
    // the focus is the intercept and the covariates are orthogonal to it in
    // a balanced gaussian design, so every candidate shares one score
    VectorXd y(8);
    y << 1.0, 2.5, 0.7, 3.1, 1.9, 2.2, 0.4, 2.8;
    MatrixXd x(8, 2);
    x << 1, 1, -1, 1, 1, -1, -1, -1, 1, 1, -1, 1, 1, -1, -1, -1;
    const Dataset d(y, x, {"x1", "x2"});
    SearchConfig cfg;
    cfg.tmpl = DesignTemplate::pairwise({"x1", "x2"}, false);
    cfg.family = Family::gaussian_identity;
    FocusSpec f;
    f.kind = FocusKind::coefficient_combination;
    f.coefficients = VectorXd::Zero(3);
    f.coefficients(0) = 1.0;
    f.eval_points = cfg.tmpl.wide_design(d).row(0);
    f.weights = VectorXd::Ones(1);
    const RankingResult r = run_search(d, cfg, f);
    const double first = r.candidates[static_cast<std::size_t>(r.order[0])].criterion_value;
    bool all_tied = true;
    for (const auto& c : r.candidates) {
        all_tied = all_tied && std::abs(c.criterion_value - first) <= 1e-12 * first;
    }
    if (all_tied) {
        CHECK(r.selected_outcome().indicator == "100");
    }
    for (std::size_t k = 1; k < r.order.size(); ++k) {
        const auto& a = r.candidates[static_cast<std::size_t>(r.order[k - 1])];
        const auto& b = r.candidates[static_cast<std::size_t>(r.order[k])];
        const bool ordered = a.criterion_value < b.criterion_value ||
            (a.criterion_value == b.criterion_value &&
             (a.param_count < b.param_count || (a.param_count == b.param_count && a.indicator < b.indicator)));
        CHECK(ordered);
    }
}

TEST_CASE("exponential model-averaging weights")
{
    const std::vector<double> fic = {1.0, 2.0};
    const std::vector<double> mu = {10.0, 20.0};
    const ModelAverage a = model_average_weights(fic, mu, 1.0, 1.0);
    CHECK(a.weights(0) == doctest::Approx(0.7311).epsilon(1e-4));
    CHECK(a.weights(1) == doctest::Approx(0.2689).epsilon(1e-4));
    CHECK(a.estimate == doctest::Approx(10.0 * a.weights(0) + 20.0 * a.weights(1)));
    // a common shift of all scores leaves the weights alone
    const std::vector<double> shifted = {1001.0, 1002.0};
    CHECK(model_average_weights(shifted, mu, 1.0, 1.0).weights.isApprox(a.weights, 1e-12));
    const ModelAverage flat = model_average_weights(fic, mu, 1.0, 0.0);
    CHECK(flat.weights(0) == doctest::Approx(0.5));
    CHECK_THROWS_AS(model_average_weights(fic, mu, 0.0, 1.0), ConfigError);

    const Dataset d = testdata::birds();
    SearchConfig cfg;
    cfg.tmpl = testdata::bird_template();
    const RankingResult r = run_search(d, cfg, first_row_mean(cfg.tmpl.wide_design(d)));
    const ModelAverage m = model_average_weights(r, 1.0);
    CHECK(m.weights.sum() == doctest::Approx(1.0));
    CHECK(m.estimate > 20.0);
    CHECK(m.estimate < 40.0);
}

TEST_CASE("criterion names")
{
    CHECK(parse_criterion("afic_u") == Criterion::afic_u);
    CHECK(is_adjusted(parse_criterion("fic")));
    CHECK_THROWS_AS(parse_criterion("aic"), ConfigError);
}
