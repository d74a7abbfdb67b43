#include "p2lr/uncertainty.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "p2lr/error.hpp"
#include "p2lr/parallel.hpp"

namespace p2lr::uncertainty {
namespace {

std::span<const double> row_span(const Matrix& m, Index row) {
    return {m.data() + row * m.cols(), static_cast<std::size_t>(m.cols())};
}

double norm_of(std::span<const double> v) {
    double sum = 0.0;
    for (const double x : v) {
        sum += x * x;
    }
    return std::sqrt(sum);
}

// Prefixes error messages from per-sample work with the sample index.
template <typename Fn>
auto with_sample_index(Index i, Fn&& fn) {
    try {
        return fn();
    } catch (const Error& e) {
        throw Error(e.code(), "sample " + std::to_string(i) + ": " + e.what());
    }
}

} // namespace

std::string_view to_string(Criterion criterion) noexcept {
    switch (criterion) {
    case Criterion::kl_ideal: return "kl_ideal";
    case Criterion::l2_centroid: return "l2_centroid";
    case Criterion::consistency: return "consistency";
    }
    return "unknown";
}

ProbDistribution centroid_classifier_probs(std::span<const double> f, const Matrix& weights,
                                           double alpha) {
    if (static_cast<Index>(f.size()) != weights.cols()) {
        fail(ErrorCode::input_error, "feature dimension does not match classifier weights");
    }
    if (!(alpha > 0.0) || !std::isfinite(alpha)) {
        fail(ErrorCode::config_error, "alpha must be finite and > 0");
    }
    const double f_norm = norm_of(f);
    if (!(f_norm > 0.0) || !std::isfinite(f_norm)) {
        fail(ErrorCode::singular_normalization, "feature vector has zero or non-finite norm");
    }

    const Index c = weights.rows();
    ProbDistribution logits(static_cast<std::size_t>(c));
    for (Index j = 0; j < c; ++j) {
        const auto w = row_span(weights, j);
        const double w_norm = norm_of(w);
        if (!(w_norm > 0.0) || !std::isfinite(w_norm)) {
            fail(ErrorCode::singular_normalization,
                 "classifier weight " + std::to_string(j) + " has zero or non-finite norm");
        }
        double dot = 0.0;
        for (std::size_t k = 0; k < f.size(); ++k) {
            dot += (w[k] / w_norm) * (f[k] / f_norm);
        }
        logits[static_cast<std::size_t>(j)] = alpha * dot;
    }
    const double max_logit = *std::max_element(logits.begin(), logits.end());
    double total = 0.0;
    for (auto& v : logits) {
        v = std::exp(v - max_logit);
        total += v;
    }
    for (auto& v : logits) {
        v /= total;
    }
    return logits;
}

ProbDistribution ideal_distribution(Index c, Index label, double epsilon) {
    if (c < 2) {
        fail(ErrorCode::config_error, "ideal distribution needs c >= 2");
    }
    if (label < 0 || label >= c) {
        fail(ErrorCode::input_error, "label " + std::to_string(label) + " outside [0, c)");
    }
    if (!(epsilon > 1.0 / static_cast<double>(c) && epsilon <= 1.0)) {
        fail(ErrorCode::config_error, "epsilon must lie in (1/c, 1]");
    }
    ProbDistribution q(static_cast<std::size_t>(c), (1.0 - epsilon) / static_cast<double>(c - 1));
    q[static_cast<std::size_t>(label)] = epsilon;
    return q;
}

double kl_uncertainty(std::span<const double> q, std::span<const double> p) {
    if (q.size() != p.size()) {
        fail(ErrorCode::input_error, "distributions differ in length");
    }
    double sum = 0.0;
    for (std::size_t j = 0; j < q.size(); ++j) {
        if (q[j] <= 0.0) {
            continue;
        }
        if (p[j] <= 0.0) {
            fail(ErrorCode::infinite_divergence,
                 "q[" + std::to_string(j) + "] > 0 while p[" + std::to_string(j) + "] = 0");
        }
        sum += q[j] * (std::log(q[j]) - std::log(p[j]));
    }
    // Rounding can leave a tiny negative residue when q == p.
    return std::max(sum, 0.0);
}

std::vector<UncertaintyRecord> score_all(const Matrix& features, const Matrix& weights,
                                         const Labels& pseudo_labels, double alpha,
                                         double epsilon) {
    if (static_cast<Index>(pseudo_labels.size()) != features.rows()) {
        fail(ErrorCode::input_error, "pseudo labels are not aligned with features");
    }
    const Index c = weights.rows();
    std::vector<UncertaintyRecord> records(pseudo_labels.size());
    parallel_for(records.size(), [&](std::size_t i) {
        const auto row = static_cast<Index>(i);
        records[i] = with_sample_index(row, [&] {
            const auto q = ideal_distribution(c, pseudo_labels[i], epsilon);
            const auto p = centroid_classifier_probs(row_span(features, row), weights, alpha);
            return UncertaintyRecord{row, kl_uncertainty(q, p), Criterion::kl_ideal};
        });
    });
    return records;
}

std::vector<UncertaintyRecord> score_all(const Matrix& features,
                                         const clusterer::ClusterModel& cluster, double alpha,
                                         double epsilon) {
    return score_all(features, cluster.centroids, cluster.assignments, alpha, epsilon);
}

std::vector<UncertaintyRecord> l2_uncertainty(const Matrix& features,
                                              const clusterer::ClusterModel& cluster) {
    if (static_cast<Index>(cluster.assignments.size()) != features.rows()) {
        fail(ErrorCode::input_error, "assignments are not aligned with features");
    }
    if (features.cols() != cluster.centroids.cols()) {
        fail(ErrorCode::input_error, "feature and centroid dimensions differ");
    }
    std::vector<UncertaintyRecord> records(cluster.assignments.size());
    parallel_for(records.size(), [&](std::size_t i) {
        const auto row = static_cast<Index>(i);
        const Index label = cluster.assignments[i];
        double sum = 0.0;
        for (Index j = 0; j < features.cols(); ++j) {
            const double diff = features(row, j) - cluster.centroids(label, j);
            sum += diff * diff;
        }
        records[i] = {row, std::sqrt(sum), Criterion::l2_centroid};
    });
    return records;
}

std::vector<UncertaintyRecord> consistency_uncertainty(const Matrix& teacher_features,
                                                       const Matrix& student_features,
                                                       const clusterer::ClusterModel& cluster,
                                                       double alpha) {
    if (teacher_features.rows() != student_features.rows() ||
        teacher_features.cols() != student_features.cols()) {
        fail(ErrorCode::input_error, "teacher and student features are not aligned");
    }
    std::vector<UncertaintyRecord> records(static_cast<std::size_t>(teacher_features.rows()));
    parallel_for(records.size(), [&](std::size_t i) {
        const auto row = static_cast<Index>(i);
        records[i] = with_sample_index(row, [&] {
            const auto pt = centroid_classifier_probs(row_span(teacher_features, row),
                                                      cluster.centroids, alpha);
            const auto ps = centroid_classifier_probs(row_span(student_features, row),
                                                      cluster.centroids, alpha);
            const double score = 0.5 * (kl_uncertainty(pt, ps) + kl_uncertainty(ps, pt));
            return UncertaintyRecord{row, score, Criterion::consistency};
        });
    });
    return records;
}

std::vector<double> scores_of(const std::vector<UncertaintyRecord>& records) {
    std::vector<double> scores;
    scores.reserve(records.size());
    for (const auto& r : records) {
        scores.push_back(r.score);
    }
    return scores;
}

} // namespace p2lr::uncertainty
