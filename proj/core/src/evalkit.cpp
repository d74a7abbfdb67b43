#include "p2lr/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "p2lr/error.hpp"
#include "p2lr/parallel.hpp"
#include "p2lr/rng.hpp"

namespace p2lr::evalkit {

std::optional<double> auroc(std::span<const double> scores, const Mask& wrong_mask) {
    if (scores.size() != wrong_mask.size()) {
        fail(ErrorCode::input_error, "scores and mask differ in length");
    }
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    double positive_rank_sum = 0.0;
    double positives = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) {
            ++j;
        }
        const double midrank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) {
            if (wrong_mask[order[k]]) {
                positive_rank_sum += midrank;
                positives += 1.0;
            }
        }
        i = j + 1;
    }
    const double negatives = static_cast<double>(n) - positives;
    if (positives == 0.0 || negatives == 0.0) {
        return std::nullopt;
    }
    return (positive_rank_sum - positives * (positives + 1.0) / 2.0) / (positives * negatives);
}

DetectionOutcome detection_metrics(std::span<const double> scores, const Mask& wrong_mask,
                                   double top_fraction) {
    if (!(top_fraction > 0.0 && top_fraction <= 1.0)) {
        fail(ErrorCode::config_error, "top_fraction must lie in (0, 1]");
    }
    if (scores.size() != wrong_mask.size()) {
        fail(ErrorCode::input_error, "scores and mask differ in length");
    }
    DetectionOutcome out;
    out.top_fraction = top_fraction;
    const std::size_t n = scores.size();
    out.flagged = std::llround(top_fraction * static_cast<double>(n));

    // Highest score first; equal scores keep ascending index order.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    Index hits = 0;
    for (Index r = 0; r < out.flagged; ++r) {
        hits += wrong_mask[order[static_cast<std::size_t>(r)]] ? 1 : 0;
    }
    const auto wrong = static_cast<Index>(std::count_if(wrong_mask.begin(), wrong_mask.end(),
                                                        [](auto v) { return v != 0; }));
    if (out.flagged > 0) {
        out.precision = static_cast<double>(hits) / static_cast<double>(out.flagged);
    }
    if (wrong > 0) {
        out.recall = static_cast<double>(hits) / static_cast<double>(wrong);
    }
    out.auroc = auroc(scores, wrong_mask);
    out.degenerate = !out.precision || !out.recall || !out.auroc;
    return out;
}

double average_precision(const std::vector<std::uint8_t>& ranked_relevance) {
    double hits = 0.0;
    double precision_sum = 0.0;
    for (std::size_t r = 0; r < ranked_relevance.size(); ++r) {
        if (ranked_relevance[r]) {
            hits += 1.0;
            precision_sum += hits / static_cast<double>(r + 1);
        }
    }
    return hits > 0.0 ? precision_sum / hits : 0.0;
}

double RetrievalResult::cmc_at(Index rank) const {
    if (first_hit_rank.empty()) {
        return 0.0;
    }
    const auto hits = std::count_if(first_hit_rank.begin(), first_hit_rank.end(),
                                    [rank](Index r) { return r > 0 && r <= rank; });
    return static_cast<double>(hits) / static_cast<double>(first_hit_rank.size());
}

RetrievalResult retrieval_eval(const Matrix& embeddings, const Labels& identities,
                               double query_fraction, std::uint64_t seed) {
    if (static_cast<Index>(identities.size()) != embeddings.rows()) {
        fail(ErrorCode::input_error, "identities are not aligned with embeddings");
    }
    if (!(query_fraction > 0.0 && query_fraction < 1.0)) {
        fail(ErrorCode::config_error, "query_fraction must lie in (0, 1)");
    }

    std::map<std::int32_t, std::vector<Index>> members;
    for (std::size_t i = 0; i < identities.size(); ++i) {
        members[identities[i]].push_back(static_cast<Index>(i));
    }
    Rng rng(seed);
    std::vector<Index> queries;
    std::vector<Index> gallery;
    for (auto& [identity, samples] : members) {
        if (samples.size() < 2) {
            fail(ErrorCode::split_error,
                 "identity " + std::to_string(identity) + " has a single sample");
        }
        for (std::size_t i = samples.size() - 1; i > 0; --i) {
            std::swap(samples[i], samples[rng.uniform_index(i + 1)]);
        }
        const auto size = static_cast<Index>(samples.size());
        const Index n_query = std::clamp<Index>(
            std::llround(query_fraction * static_cast<double>(size)), Index{1}, size - 1);
        queries.insert(queries.end(), samples.begin(), samples.begin() + n_query);
        gallery.insert(gallery.end(), samples.begin() + n_query, samples.end());
    }
    std::sort(queries.begin(), queries.end());
    std::sort(gallery.begin(), gallery.end());

    // Normalized rows; a zero row stays zero (cosine similarity 0 to everything).
    Matrix unit = embeddings;
    for (Index r = 0; r < unit.rows(); ++r) {
        const double norm = unit.row(r).norm();
        if (norm > 0.0) {
            unit.row(r) /= norm;
        }
    }

    RetrievalResult result;
    result.num_queries = static_cast<Index>(queries.size());
    result.gallery_size = static_cast<Index>(gallery.size());
    result.first_hit_rank.assign(queries.size(), 0);
    std::vector<double> ap(queries.size(), 0.0);
    parallel_for(queries.size(), [&](std::size_t qi) {
        const Index q = queries[qi];
        std::vector<double> distance(gallery.size());
        for (std::size_t g = 0; g < gallery.size(); ++g) {
            distance[g] = 1.0 - unit.row(q).dot(unit.row(gallery[g]));
        }
        std::vector<std::size_t> order(gallery.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return distance[a] < distance[b]; });
        std::vector<std::uint8_t> relevance(gallery.size());
        for (std::size_t r = 0; r < order.size(); ++r) {
            relevance[r] = identities[static_cast<std::size_t>(gallery[order[r]])] ==
                                   identities[static_cast<std::size_t>(q)]
                               ? 1
                               : 0;
            if (relevance[r] && result.first_hit_rank[qi] == 0) {
                result.first_hit_rank[qi] = static_cast<Index>(r + 1);
            }
        }
        ap[qi] = average_precision(relevance);
    });
    double total = 0.0;
    for (const double v : ap) {
        total += v;
    }
    result.map = queries.empty() ? 0.0 : total / static_cast<double>(queries.size());
    for (const int rank : {1, 5, 10}) {
        result.cmc[rank] = result.cmc_at(rank);
    }
    return result;
}

} // namespace p2lr::evalkit
