#pragma once

#include "focusfic/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <string_view>

namespace focusfic {

enum class Framework { fixed, local };

std::string to_string(Framework framework);
Framework parse_framework(std::string_view text);

/// Scoring of one candidate for one focus point.
///
/// `sqbias_u` is the unbiased squared-bias estimate b^2 - kappa^2/n and may be
/// negative; `bias_adj` is sign(b) * sqrt(max(sqbias_u, 0)), the bias implied
/// by the adjusted score, so that fic_adj = se^2 + bias_adj^2.
struct FicRecord {
    CandidateSpec candidate;
    double mu_hat = 0.0;
    double bias_hat = 0.0;
    double bias_adj = 0.0;
    double se = 0.0;
    double kappa_sq_over_n = 0.0;
    double sqbias_u = 0.0;
    double fic_u = 0.0;
    double fic_adj = 0.0;
    bool kappa_clipped = false;

    double rmse() const { return std::sqrt(fic_adj); }
    double rmse_u() const { return std::sqrt(std::max(fic_u, 0.0)); }
};

/// Fills fic_u, fic_adj and bias_adj from se, bias_hat and kappa_sq_over_n.
void finish_record(FicRecord& record);

} // namespace focusfic
