#pragma once

#include "focusfic/fic_record.hpp"
#include "focusfic/focus.hpp"
#include "focusfic/model.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace focusfic {

/// Partition of the wide parameter vector into protected (theta) and open
/// (gamma, with null value 0) parts, with everything the local-asymptotics
/// FIC needs for one focus point. Information and derivatives are taken at
/// the wide-model MLE.
struct LocalFrame {
    Index n = 0;
    std::vector<Index> protected_params;  // indices into the wide parameter vector
    std::vector<Index> open_params;
    MatrixXd J00, J01, J10, J11;
    MatrixXd Q;       // lower-right q x q block of J^{-1}
    MatrixXd Q_inv;   // J11 - J10 J00^{-1} J01
    VectorXd D_n;     // sqrt(n) * gamma_hat_wide
    VectorXd omega;   // J10 J00^{-1} dmu/dtheta - dmu/dgamma
    double tau0_sq = 0.0;
    double mu_wide = 0.0;

    Index protected_count() const { return static_cast<Index>(protected_params.size()); }
    Index open_count() const { return static_cast<Index>(open_params.size()); }
};

/// `protected_slots` are template slot indices (must include the intercept,
/// slot 0). For a gaussian wide fit the variance parameter is always protected.
LocalFrame build_local_frame(const FitResult& wide_fit, const FocusSpec& focus, Index point,
                             const std::vector<Index>& protected_slots);

/// Frame of the information blocks only (no focus): omega and tau0 are left empty.
LocalFrame build_information_frame(const FitResult& wide_fit, const std::vector<Index>& protected_slots);

/// Fills omega, tau0_sq and mu_wide of an information frame for one focus point.
void attach_focus(LocalFrame& frame, const FitResult& wide_fit, const FocusSpec& focus, Index point);

struct ProjectionG {
    std::vector<Index> subset;  // positions 0..q-1 of the open parameters in M
    MatrixXd G;
};

/// G_M = pi_M' (pi_M Q^{-1} pi_M')^{-1} pi_M Q^{-1}.
ProjectionG projection_matrix(const LocalFrame& frame, const std::vector<Index>& subset);

/// Open-parameter positions that a candidate switches on. Throws ConfigError
/// when a protected slot is off.
std::vector<Index> open_subset(const LocalFrame& frame, const CandidateSpec& candidate);

/// Local FIC. `mu_hat_candidate` is the candidate's own focus estimate, which
/// is only reported, not used in the score.
FicRecord fic_local_score(const LocalFrame& frame, const ProjectionG& projection, const CandidateSpec& candidate,
                          double mu_hat_candidate);

// ---------------------------------------------------------------------------
// Post-selection limit law
// ---------------------------------------------------------------------------

/// Maps a draw of D to model weights over a fixed list of projections.
using WeightFunction = std::function<VectorXd(const VectorXd& draw)>;

/// All weight on model `index`.
WeightFunction fixed_model_weights(Index index, Index model_count);

/// Indicator of the model minimizing the limit-experiment FIC at D
/// (adjusted or unbiased); ties go to the first model.
WeightFunction fic_argmin_weights(const LocalFrame& frame, const std::vector<ProjectionG>& models, bool adjusted);

/// Weights proportional to exp(-lambda * fic_M(D) / fic_wide), fic_wide = tau0^2 + omega' Q omega.
WeightFunction fic_exponential_weights(const LocalFrame& frame, const std::vector<ProjectionG>& models,
                                       double lambda, bool adjusted);

struct SimulationSpec {
    VectorXd delta;
    std::size_t draws = 100000;
    std::uint64_t seed = 1;
    unsigned threads = 1;
};

/// Draws Lambda_0 ~ N(0, tau0^2) and D ~ N_q(delta, Q) independently and
/// returns Lambda_0 + omega' (delta - sum_M w(M|D) G_M D) per draw.
///
/// Normals come from std::mt19937_64 through the inverse normal CDF. Draws are
/// split in blocks of `simulation_block_size`; block b uses the generator seeded
/// with splitmix64(seed + b), so the output does not depend on `threads`.
std::vector<double> simulate_post_selection(const LocalFrame& frame, const std::vector<ProjectionG>& models,
                                            const WeightFunction& weights, const SimulationSpec& spec);

inline constexpr std::size_t simulation_block_size = 4096;

std::uint64_t splitmix64(std::uint64_t x);

/// Uniform on (0,1) from the top 52 bits of a 64-bit word; both ends stay excluded.
double unit_open(std::uint64_t bits);

/// Inverse standard normal CDF.
double normal_quantile(double u);

} // namespace focusfic
