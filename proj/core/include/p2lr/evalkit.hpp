#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "p2lr/types.hpp"

namespace p2lr::evalkit {

/// Wrong-label detection quality of an uncertainty score.
///
/// The top round(N * top_fraction) scores are flagged as wrong. Precision is
/// undefined when nothing is flagged, recall and AUROC are undefined when
/// the mask has no wrong (or, for AUROC, no clean) samples; undefined values
/// are empty and `degenerate` is set.
struct DetectionOutcome {
    std::optional<double> precision;
    std::optional<double> recall;
    std::optional<double> auroc;
    double top_fraction = 0.0;
    Index flagged = 0;
    bool degenerate = false;
};

DetectionOutcome detection_metrics(std::span<const double> scores, const Mask& wrong_mask,
                                   double top_fraction);

/// Rank-sum AUROC with midranks for ties; positives are the `wrong_mask`
/// samples, which should score high. Empty when either class is absent.
std::optional<double> auroc(std::span<const double> scores, const Mask& wrong_mask);

struct RetrievalResult {
    double map = 0.0;
    /// Rank -> fraction of queries with a correct match in the top `rank`.
    std::map<int, double> cmc;
    /// 1-based rank of the first correct gallery match, per query.
    std::vector<Index> first_hit_rank;
    Index num_queries = 0;
    Index gallery_size = 0;

    /// CMC at an arbitrary rank from `first_hit_rank`.
    [[nodiscard]] double cmc_at(Index rank) const;
};

/// Seeded per-identity query/gallery split (every identity on both sides),
/// cosine-distance ranking with ties broken by gallery index.
RetrievalResult retrieval_eval(const Matrix& embeddings, const Labels& identities,
                               double query_fraction, std::uint64_t seed);

/// Average precision for one ranked relevance list (1 = relevant).
double average_precision(const std::vector<std::uint8_t>& ranked_relevance);

} // namespace p2lr::evalkit
