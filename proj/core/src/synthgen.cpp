#include "p2lr/synthgen.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "p2lr/error.hpp"
#include "p2lr/rng.hpp"

namespace p2lr::synthgen {

IdentityPrototypes generate_prototypes(Index count, Index dim, double min_separation,
                                       std::uint64_t seed) {
    if (count < 2) {
        fail(ErrorCode::config_error, "c_true must be >= 2");
    }
    if (dim < 2) {
        fail(ErrorCode::config_error, "d must be >= 2");
    }
    if (!(min_separation >= 0.0 && min_separation < 2.0)) {
        fail(ErrorCode::config_error, "min_separation must lie in [0, 2)");
    }

    Rng rng(seed);
    Matrix accepted(count, dim);
    Index filled = 0;
    Vector candidate(dim);
    for (int attempt = 0; attempt < kMaxPrototypeAttempts && filled < count; ++attempt) {
        double norm = 0.0;
        while (norm < 1e-12) {
            for (Index j = 0; j < dim; ++j) {
                candidate[j] = rng.normal();
            }
            norm = candidate.norm();
        }
        candidate /= norm;

        bool ok = true;
        for (Index r = 0; r < filled && ok; ++r) {
            ok = (accepted.row(r).transpose() - candidate).norm() >= min_separation;
        }
        if (ok) {
            accepted.row(filled++) = candidate.transpose();
        }
    }
    if (filled < count) {
        std::ostringstream msg;
        msg << "could not place " << count << " prototypes in d=" << dim
            << " with min_separation=" << min_separation << " within "
            << kMaxPrototypeAttempts << " attempts";
        fail(ErrorCode::config_error, msg.str());
    }
    return {std::move(accepted)};
}

TargetDomain sample_target(const IdentityPrototypes& prototypes, Index n_per_id,
                           double noise_sigma, double shift_scale, std::uint64_t seed) {
    if (n_per_id < 1) {
        fail(ErrorCode::config_error, "n_per_id must be >= 1");
    }
    if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) {
        fail(ErrorCode::config_error, "noise_sigma must be finite and >= 0");
    }
    if (!(shift_scale >= 0.0) || !std::isfinite(shift_scale)) {
        fail(ErrorCode::config_error, "shift_scale must be finite and >= 0");
    }

    const Index c = prototypes.count();
    const Index d = prototypes.dim();
    Rng rng(seed);

    Matrix shift = Matrix::Identity(d, d);
    if (shift_scale > 0.0) {
        for (Index r = 0; r < d; ++r) {
            for (Index col = 0; col < d; ++col) {
                shift(r, col) += shift_scale * rng.normal();
            }
        }
    }
    // Shifted prototypes; rows are A * p.
    const Matrix centers = prototypes.prototypes * shift.transpose();

    TargetDomain domain;
    domain.raw_features.resize(c * n_per_id, d);
    domain.hidden_labels.resize(static_cast<std::size_t>(c * n_per_id));
    domain.noise_sigma = noise_sigma;
    Index row = 0;
    for (Index id = 0; id < c; ++id) {
        for (Index s = 0; s < n_per_id; ++s, ++row) {
            for (Index j = 0; j < d; ++j) {
                const double eps = noise_sigma > 0.0 ? noise_sigma * rng.normal() : 0.0;
                domain.raw_features(row, j) = centers(id, j) + eps;
            }
            domain.hidden_labels[static_cast<std::size_t>(row)] = static_cast<std::int32_t>(id);
        }
    }
    domain.shift = std::move(shift);
    return domain;
}

Corruption corrupt_labels(const Labels& labels, double fraction, Index num_labels,
                          std::uint64_t seed) {
    if (!(fraction >= 0.0 && fraction <= 1.0)) {
        fail(ErrorCode::config_error, "corrupt fraction must lie in [0, 1]");
    }
    const std::size_t n = labels.size();
    const auto n_corrupt = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
    Corruption out{labels, Mask(n, 0)};
    if (n_corrupt == 0) {
        return out;
    }
    if (num_labels < 2) {
        fail(ErrorCode::config_error, "corrupting labels needs at least 2 distinct labels");
    }

    Rng rng(seed);
    // Partial Fisher-Yates: the first n_corrupt entries are a uniform subset.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = 0; i < n_corrupt; ++i) {
        const std::size_t j = i + rng.uniform_index(n - i);
        std::swap(order[i], order[j]);
    }
    for (std::size_t i = 0; i < n_corrupt; ++i) {
        const std::size_t pos = order[i];
        const auto original = labels[pos];
        if (original < 0 || original >= num_labels) {
            fail(ErrorCode::input_error, "label out of range at index " + std::to_string(pos));
        }
        auto replacement =
            static_cast<std::int32_t>(rng.uniform_index(static_cast<std::uint64_t>(num_labels - 1)));
        if (replacement >= original) {
            ++replacement;
        }
        out.labels[pos] = replacement;
        out.mask[pos] = 1;
    }
    return out;
}

} // namespace p2lr::synthgen
