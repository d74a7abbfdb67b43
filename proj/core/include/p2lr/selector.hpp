#pragma once

#include <span>
#include <vector>

#include "p2lr/types.hpp"

namespace p2lr::selector {

/// Fraction of samples admitted at step t of T: starts at p0, reaches 1 at T,
/// grows fast early and slowly late (rescaled log of a linear ramp through
/// the exponential). T = 0 is treated as the final step and returns 1.
double schedule_p(Index t, Index T, double p0, double h);

struct Threshold {
    double beta = 0.0;
    Index count = 0;
};

/// count = clamp(round(N * p_t), 1, N); beta is the count-th smallest
/// uncertainty, ranking ties by ascending sample index.
Threshold compute_beta(std::span<const double> uncertainties, double p_t);

/// Sample indices sorted by (uncertainty, index).
std::vector<Index> rank_order(std::span<const double> uncertainties);

/// Selects the `count` lowest-ranked samples. Throws contract_error unless
/// those samples all satisfy u <= beta and the rest satisfy u >= beta.
Mask vstep(std::span<const double> uncertainties, double beta, Index count);

/// sum_i v_i * u_i - beta * sum_i v_i.
double objective_value(std::span<const double> uncertainties, const Mask& indicators, double beta);

/// Largest N accepted by brute_force_vstep.
inline constexpr Index kBruteForceMaxN = 20;

/// Exhaustive minimizer of objective_value over all 2^N indicator vectors.
/// Among exact ties prefers more selected samples, then the lexicographically
/// smallest vector. Test oracle only.
Mask brute_force_vstep(std::span<const double> uncertainties, double beta);

/// Soft weights exp(-u_i / temperature) in (0, 1].
std::vector<double> reweight_indicators(std::span<const double> uncertainties, double temperature);

/// Number of set entries.
Index count_selected(const Mask& indicators);

} // namespace p2lr::selector
