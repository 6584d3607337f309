#include "focusfic/search.hpp"

#include "focusfic/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <thread>

namespace focusfic {

std::string to_string(Criterion criterion)
{
    switch (criterion) {
    case Criterion::fic_adj: return "fic_adj";
    case Criterion::fic_u: return "fic_u";
    case Criterion::afic_adj: return "afic_adj";
    case Criterion::afic_u: return "afic_u";
    }
    return "unknown";
}

Criterion parse_criterion(std::string_view text)
{
    if (text == "fic_adj" || text == "fic") return Criterion::fic_adj;
    if (text == "fic_u") return Criterion::fic_u;
    if (text == "afic_adj" || text == "afic") return Criterion::afic_adj;
    if (text == "afic_u") return Criterion::afic_u;
    throw ConfigError(fmt::format("unknown criterion '{}'", text));
}

bool is_adjusted(Criterion criterion)
{
    return criterion == Criterion::fic_adj || criterion == Criterion::afic_adj;
}

std::vector<Index> protected_slots(const SearchConfig& config)
{
    std::vector<Index> out;
    if (config.protected_mask.empty()) {
        out.push_back(0);
        return out;
    }
    if (static_cast<Index>(config.protected_mask.size()) != config.tmpl.size()) {
        throw ConfigError("protected mask length does not match the template");
    }
    if (!config.protected_mask[0]) {
        throw ConfigError("the intercept must be protected");
    }
    for (std::size_t i = 0; i < config.protected_mask.size(); ++i) {
        if (config.protected_mask[i]) {
            out.push_back(static_cast<Index>(i));
        }
    }
    return out;
}

std::vector<CandidateSpec> enumerate_candidates(const SearchConfig& config)
{
    const auto prot = protected_slots(config);
    std::vector<std::uint8_t> is_prot(static_cast<std::size_t>(config.tmpl.size()), 0);
    for (Index s : prot) {
        is_prot[static_cast<std::size_t>(s)] = 1;
    }
    if (!config.explicit_candidates.empty()) {
        for (const auto& c : config.explicit_candidates) {
            if (static_cast<Index>(c.indicator.size()) != config.tmpl.size()) {
                throw ConfigError("explicit candidate has the wrong indicator length");
            }
            for (Index s : prot) {
                if (!c.indicator[static_cast<std::size_t>(s)]) {
                    throw ConfigError(fmt::format("explicit candidate {} leaves a protected slot off",
                                                  indicator_string(c, config.tmpl)));
                }
            }
        }
        return config.explicit_candidates;
    }

    std::vector<Index> open;
    for (Index s = 0; s < config.tmpl.size(); ++s) {
        if (!is_prot[static_cast<std::size_t>(s)]) {
            open.push_back(s);
        }
    }
    if (open.size() >= 63) {
        throw ConfigError("too many open slots to enumerate");
    }
    const std::uint64_t total = std::uint64_t{1} << open.size();
    if (total > max_candidates_without_override && !config.allow_large) {
        throw ConfigError(fmt::format("{} candidate models exceed the limit of {}; set allow_large to proceed", total,
                                      max_candidates_without_override));
    }
    std::vector<CandidateSpec> out;
    for (std::uint64_t code = 0; code < total; ++code) {
        CandidateSpec c;
        c.family = config.family;
        c.indicator = is_prot;
        for (std::size_t j = 0; j < open.size(); ++j) {
            c.indicator[static_cast<std::size_t>(open[j])] = static_cast<std::uint8_t>((code >> j) & 1U);
        }
        if (config.hierarchy && !satisfies_hierarchy(c, config.tmpl)) {
            continue;
        }
        out.push_back(std::move(c));
    }
    return out;
}

std::optional<Index> RankingResult::find(std::string_view indicator) const
{
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (candidates[i].indicator == indicator) {
            return static_cast<Index>(i);
        }
    }
    return std::nullopt;
}

namespace {

void rank_by(std::vector<CandidateOutcome>& all, const std::vector<Index>& ok, double CandidateOutcome::*key,
             Index CandidateOutcome::*rank, std::vector<Index>* order_out)
{
    std::vector<Index> order = ok;
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
        const auto& x = all[static_cast<std::size_t>(a)];
        const auto& y = all[static_cast<std::size_t>(b)];
        if (x.*key != y.*key) return x.*key < y.*key;
        if (x.param_count != y.param_count) return x.param_count < y.param_count;
        return x.indicator < y.indicator;
    });
    for (std::size_t r = 0; r < order.size(); ++r) {
        all[static_cast<std::size_t>(order[r])].*rank = static_cast<Index>(r + 1);
    }
    if (order_out) {
        *order_out = std::move(order);
    }
}

} // namespace

RankingResult run_search(const Dataset& data, const SearchConfig& config, const FocusSpec& focus)
{
    check_response(data.response(), config.family);
    const auto candidates = enumerate_candidates(config);
    const MatrixXd wide_design = config.tmpl.wide_design(data);

    RankingResult result;
    result.wide_fit = fit_mle(wide_design, data.response(), config.family, config.fit_options);

    ScoringOptions options;
    options.framework = config.framework;
    options.sandwich = config.sandwich;
    options.protected_slots = protected_slots(config);
    const FocusScorer scorer(result.wide_fit, focus, options);

    result.candidates.resize(candidates.size());
    const auto evaluate = [&](std::size_t i) {
        CandidateOutcome& out = result.candidates[i];
        out.model_id = static_cast<Index>(i + 1);
        out.candidate = candidates[i];
        out.indicator = indicator_string(out.candidate, config.tmpl);
        try {
            if (config.hierarchy && !satisfies_hierarchy(out.candidate, config.tmpl)) {
                throw ConfigError("interaction without both main effects");
            }
            const MatrixXd design = select_columns(wide_design, out.candidate);
            const FitResult fit = out.candidate.is_full() && out.candidate.family == config.family
                ? result.wide_fit
                : fit_mle(design, data.response(), out.candidate.family, config.fit_options);
            out.param_count = fit.param_count();
            out.loglik = fit.loglik;
            out.aic = aic(fit);
            out.bic = bic(fit);
            out.record = scorer.score(out.candidate, fit);
            out.criterion_value = is_adjusted(config.criterion) ? out.record.afic_adj : out.record.afic_u;
            out.ok = true;
        } catch (const Error& e) {
            out.ok = false;
            out.failure = e.what();
        }
    };

    const unsigned threads = std::max(1u, std::min<unsigned>(config.threads, static_cast<unsigned>(candidates.size())));
    if (threads <= 1) {
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            evaluate(i);
        }
    } else {
        std::vector<std::exception_ptr> errors(threads);
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t) {
            pool.emplace_back([&, t] {
                try {
                    for (std::size_t i = t; i < candidates.size(); i += threads) {
                        evaluate(i);
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
    }

    std::vector<Index> ok;
    for (std::size_t i = 0; i < result.candidates.size(); ++i) {
        const auto& c = result.candidates[i];
        if (c.ok) {
            ok.push_back(static_cast<Index>(i));
        } else {
            result.failures.push_back(static_cast<Index>(i));
        }
        if (c.candidate.is_full() && c.candidate.family == config.family) {
            result.wide = static_cast<Index>(i);
        }
    }
    if (ok.empty()) {
        throw NumericalError("no candidate model could be fitted");
    }
    std::vector<Index> aic_order;
    std::vector<Index> bic_order;
    rank_by(result.candidates, ok, &CandidateOutcome::criterion_value, &CandidateOutcome::rank_fic, &result.order);
    rank_by(result.candidates, ok, &CandidateOutcome::aic, &CandidateOutcome::rank_aic, &aic_order);
    rank_by(result.candidates, ok, &CandidateOutcome::bic, &CandidateOutcome::rank_bic, &bic_order);
    result.selected = result.order.front();
    result.aic_best = aic_order.front();
    result.bic_best = bic_order.front();

    CandidateSpec wide_spec;
    wide_spec.indicator.assign(static_cast<std::size_t>(config.tmpl.size()), 1);
    wide_spec.family = config.family;
    const VectorXd w = focus.weights / focus.weights.sum();
    for (Index v = 0; v < focus.point_count(); ++v) {
        result.wide_avg_focus += w(v) * eval_focus(focus, v, result.wide_fit, wide_spec).mu_hat;
    }
    return result;
}

ModelAverage model_average_weights(std::span<const double> fic, std::span<const double> focus_estimates,
                                   double fic_wide, double lambda)
{
    if (!(lambda >= 0.0)) {
        throw ConfigError("lambda must be nonnegative");
    }
    if (!(fic_wide > 0.0)) {
        throw ConfigError("model averaging needs a positive wide-model FIC");
    }
    if (fic.empty() || fic.size() != focus_estimates.size()) {
        throw ConfigError("model averaging needs one focus estimate per FIC value");
    }
    const double lo = *std::min_element(fic.begin(), fic.end());
    ModelAverage out;
    out.weights.resize(static_cast<Index>(fic.size()));
    for (std::size_t m = 0; m < fic.size(); ++m) {
        out.weights(static_cast<Index>(m)) = std::exp(-lambda * (fic[m] - lo) / fic_wide);
    }
    out.weights /= out.weights.sum();
    for (std::size_t m = 0; m < fic.size(); ++m) {
        out.estimate += out.weights(static_cast<Index>(m)) * focus_estimates[m];
    }
    return out;
}

ModelAverage model_average_weights(const RankingResult& result, double lambda)
{
    if (result.wide < 0 || !result.candidates[static_cast<std::size_t>(result.wide)].ok) {
        throw ConfigError("model averaging needs the wide model among the ranked candidates");
    }
    std::vector<double> fic;
    std::vector<double> mu;
    for (Index i : result.order) {
        const auto& c = result.candidates[static_cast<std::size_t>(i)];
        fic.push_back(c.criterion_value);
        mu.push_back(c.record.avg_focus);
    }
    return model_average_weights(fic, mu, result.candidates[static_cast<std::size_t>(result.wide)].criterion_value,
                                 lambda);
}

} // namespace focusfic
