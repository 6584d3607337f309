#pragma once

#include "focusfic/fic_fixed.hpp"
#include "focusfic/fic_local.hpp"
#include "focusfic/fic_record.hpp"
#include "focusfic/focus.hpp"
#include "focusfic/model.hpp"

#include <span>
#include <vector>

namespace focusfic {

/// Weighted aggregate of per-point FIC ingredients. The truncation at zero
/// is applied to the aggregated squared bias, not point by point.
struct AficRecord {
    CandidateSpec candidate;
    double avg_variance = 0.0;
    double avg_sqbias_raw = 0.0;
    double afic_u = 0.0;
    double afic_adj = 0.0;
    double avg_focus = 0.0;
    /// Weighted mean of the raw bias estimates.
    double avg_bias = 0.0;
    /// sign(avg_bias) * sqrt(max(avg_sqbias_raw, 0)); equals the point's
    /// bias_adj when there is a single point.
    double bias_adj = 0.0;
    std::vector<FicRecord> points;

    double rmse() const { return std::sqrt(afic_adj); }
    double rmse_u() const { return std::sqrt(std::max(afic_u, 0.0)); }
    double se() const { return std::sqrt(avg_variance); }
};

/// Aggregates per-point records with weights normalized to sum 1.
AficRecord aggregate(std::vector<FicRecord> points, const VectorXd& weights);

struct ScoringOptions {
    Framework framework = Framework::local;
    SandwichMethod sandwich = SandwichMethod::empirical;
    /// Template slots protected in the local framework (intercept at least).
    std::vector<Index> protected_slots{0};
};

/// Scores candidates against a fixed wide fit and focus. Per-point local
/// frames are built once. The wide fit must outlive the scorer.
class FocusScorer {
public:
    FocusScorer(const FitResult& wide_fit, FocusSpec focus, ScoringOptions options);

    AficRecord score(const CandidateSpec& candidate, const FitResult& cand_fit) const;

    const FocusSpec& focus() const { return focus_; }
    const ScoringOptions& options() const { return options_; }
    const std::vector<LocalFrame>& frames() const { return frames_; }

private:
    const FitResult* wide_;
    FocusSpec focus_;
    ScoringOptions options_;
    std::vector<LocalFrame> frames_;
};

struct CandidateFit {
    CandidateSpec candidate;
    FitResult fit;
};

std::vector<AficRecord> afic_scores(const FitResult& wide_fit, std::span<const CandidateFit> candidates,
                                    const FocusSpec& focus, const ScoringOptions& options);

} // namespace focusfic
