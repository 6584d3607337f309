#include "focusfic/afic.hpp"

#include "focusfic/error.hpp"

#include <cmath>

namespace focusfic {

AficRecord aggregate(std::vector<FicRecord> points, const VectorXd& weights)
{
    if (points.empty() || weights.size() != static_cast<Index>(points.size())) {
        throw ConfigError("AFIC needs one weight per focus point");
    }
    const double total = weights.sum();
    if (!(total > 0.0) || (weights.array() < 0.0).any()) {
        throw ConfigError("AFIC weights must be nonnegative with a positive sum");
    }
    AficRecord out;
    out.candidate = points.front().candidate;
    for (std::size_t v = 0; v < points.size(); ++v) {
        const double w = weights(static_cast<Index>(v)) / total;
        const FicRecord& p = points[v];
        out.avg_variance += w * p.se * p.se;
        out.avg_sqbias_raw += w * p.sqbias_u;
        out.avg_focus += w * p.mu_hat;
        out.avg_bias += w * p.bias_hat;
    }
    if (points.size() == 1) {
        // a point mass reproduces the single-point record exactly
        const FicRecord& p = points.front();
        out.avg_variance = p.se * p.se;
        out.avg_sqbias_raw = p.sqbias_u;
        out.avg_focus = p.mu_hat;
        out.avg_bias = p.bias_hat;
        out.afic_u = p.fic_u;
        out.afic_adj = p.fic_adj;
        out.bias_adj = p.bias_adj;
    } else {
        const double kept = std::max(out.avg_sqbias_raw, 0.0);
        out.afic_u = out.avg_variance + out.avg_sqbias_raw;
        out.afic_adj = out.avg_variance + kept;
        out.bias_adj = kept == 0.0 ? 0.0 : std::copysign(std::sqrt(kept), out.avg_bias);
    }
    out.points = std::move(points);
    return out;
}

FocusScorer::FocusScorer(const FitResult& wide_fit, FocusSpec focus, ScoringOptions options)
    : wide_(&wide_fit), focus_(std::move(focus)), options_(std::move(options))
{
    focus_.validate(wide_fit.coef_count(), wide_fit.family);
    if (options_.framework == Framework::local) {
        const LocalFrame info = build_information_frame(wide_fit, options_.protected_slots);
        for (Index v = 0; v < focus_.point_count(); ++v) {
            LocalFrame frame = info;
            attach_focus(frame, wide_fit, focus_, v);
            frames_.push_back(std::move(frame));
        }
    }
}

AficRecord FocusScorer::score(const CandidateSpec& candidate, const FitResult& cand_fit) const
{
    std::vector<FicRecord> points;
    points.reserve(static_cast<std::size_t>(focus_.point_count()));
    if (options_.framework == Framework::fixed) {
        const FixedScorer scorer(*wide_, cand_fit, candidate, options_.sandwich);
        for (Index v = 0; v < focus_.point_count(); ++v) {
            points.push_back(scorer.score(focus_, v));
        }
    } else {
        if (candidate.family != wide_->family) {
            throw ConfigError("the local framework needs candidates from the wide model's family");
        }
        const ProjectionG g = projection_matrix(frames_.front(), open_subset(frames_.front(), candidate));
        for (Index v = 0; v < focus_.point_count(); ++v) {
            const double mu = eval_focus(focus_, v, cand_fit, candidate).mu_hat;
            points.push_back(fic_local_score(frames_[static_cast<std::size_t>(v)], g, candidate, mu));
        }
    }
    return aggregate(std::move(points), focus_.weights);
}

std::vector<AficRecord> afic_scores(const FitResult& wide_fit, std::span<const CandidateFit> candidates,
                                    const FocusSpec& focus, const ScoringOptions& options)
{
    const FocusScorer scorer(wide_fit, focus, options);
    std::vector<AficRecord> out;
    out.reserve(candidates.size());
    for (const auto& c : candidates) {
        out.push_back(scorer.score(c.candidate, c.fit));
    }
    return out;
}

} // namespace focusfic
