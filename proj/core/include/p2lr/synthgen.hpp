#pragma once

#include <cstdint>

#include "p2lr/types.hpp"

namespace p2lr::synthgen {

/// Unit-norm identity prototypes, one per row.
struct IdentityPrototypes {
    Matrix prototypes;

    [[nodiscard]] Index count() const { return prototypes.rows(); }
    [[nodiscard]] Index dim() const { return prototypes.cols(); }
};

/// Samples of the shifted target domain. `hidden_labels` is ground truth for
/// evaluation only; clustering, scoring and selection never receive it.
struct TargetDomain {
    Matrix raw_features;
    Labels hidden_labels;
    Matrix shift;
    double noise_sigma = 0.0;
};

/// Upper bound on rejection-sampling draws in generate_prototypes.
inline constexpr int kMaxPrototypeAttempts = 10'000;

/// Draws `count` unit vectors uniformly on the sphere in R^dim, rejecting any
/// candidate closer than `min_separation` to an accepted one. Throws
/// config_error when the attempt budget runs out.
IdentityPrototypes generate_prototypes(Index count, Index dim, double min_separation,
                                       std::uint64_t seed);

/// `n_per_id` samples per identity: A * prototype + N(0, noise_sigma^2 I) with
/// A = I + shift_scale * R, R standard normal. Samples are ordered by identity.
TargetDomain sample_target(const IdentityPrototypes& prototypes, Index n_per_id,
                           double noise_sigma, double shift_scale, std::uint64_t seed);

struct Corruption {
    Labels labels;
    Mask mask;
};

/// Replaces exactly round(fraction * N) labels with a uniformly drawn
/// different label in [0, num_labels).
Corruption corrupt_labels(const Labels& labels, double fraction, Index num_labels,
                          std::uint64_t seed);

} // namespace p2lr::synthgen
