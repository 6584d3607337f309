#pragma once

#include "focusfic/afic.hpp"
#include "focusfic/fic_fixed.hpp"
#include "focusfic/focus.hpp"
#include "focusfic/model.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace focusfic {

/// fic_* and afic_* coincide for a single focus point; with several points the
/// aggregate is always what gets ranked.
enum class Criterion { fic_adj, fic_u, afic_adj, afic_u };

std::string to_string(Criterion criterion);
Criterion parse_criterion(std::string_view text);
bool is_adjusted(Criterion criterion);

struct SearchConfig {
    DesignTemplate tmpl = DesignTemplate::pairwise({}, false);
    /// Protected template slots; empty means intercept only.
    std::vector<std::uint8_t> protected_mask;
    bool hierarchy = true;
    Framework framework = Framework::local;
    Criterion criterion = Criterion::fic_adj;
    Family family = Family::poisson_log;
    SandwichMethod sandwich = SandwichMethod::empirical;
    /// Overrides enumeration when nonempty.
    std::vector<CandidateSpec> explicit_candidates;
    bool allow_large = false;
    unsigned threads = 1;
    FitOptions fit_options;
};

inline constexpr std::uint64_t max_candidates_without_override = 1000000;

/// Every indicator that contains the protected mask (and, with hierarchy on,
/// has no interaction without both parents). Order: binary counting over the
/// open slots with the first open slot as the least significant digit, so the
/// narrow model comes first and the wide model last.
std::vector<CandidateSpec> enumerate_candidates(const SearchConfig& config);

std::vector<Index> protected_slots(const SearchConfig& config);

struct CandidateOutcome {
    Index model_id = 0;  // 1-based position in the candidate list
    CandidateSpec candidate;
    std::string indicator;
    bool ok = false;
    std::string failure;
    AficRecord record;
    Index param_count = 0;
    double loglik = 0.0;
    double aic = 0.0;
    double bic = 0.0;
    double criterion_value = 0.0;
    Index rank_fic = 0;  // 1-based, 0 for failed fits
    Index rank_aic = 0;
    Index rank_bic = 0;
};

struct RankingResult {
    std::vector<CandidateOutcome> candidates;  // candidate-list order
    std::vector<Index> order;                  // positions of ranked candidates, best first
    Index selected = -1;
    Index aic_best = -1;
    Index bic_best = -1;
    Index wide = -1;                           // position of the full model, if listed
    std::vector<Index> failures;
    FitResult wide_fit;
    double wide_avg_focus = 0.0;

    const CandidateOutcome& selected_outcome() const { return candidates.at(static_cast<std::size_t>(selected)); }
    std::optional<Index> find(std::string_view indicator) const;
};

/// Fits and scores every candidate. A wide-model failure throws; candidate
/// failures are recorded and left out of the ranking. Ties go to fewer
/// parameters, then to the lexicographically smaller indicator string.
RankingResult run_search(const Dataset& data, const SearchConfig& config, const FocusSpec& focus);

struct ModelAverage {
    VectorXd weights;
    double estimate = 0.0;
};

/// Weights proportional to exp(-lambda * fic_M / fic_wide), normalized.
ModelAverage model_average_weights(std::span<const double> fic, std::span<const double> focus_estimates,
                                   double fic_wide, double lambda);

/// Same over the ranked candidates of a search, using the configured criterion.
ModelAverage model_average_weights(const RankingResult& result, double lambda);

} // namespace focusfic
