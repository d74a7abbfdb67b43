#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "p2lr/clusterer.hpp"
#include "p2lr/types.hpp"

namespace p2lr::uncertainty {

/// Nonnegative weights over c classes summing to one.
using ProbDistribution = std::vector<double>;

enum class Criterion { kl_ideal, l2_centroid, consistency };

std::string_view to_string(Criterion criterion) noexcept;

struct UncertaintyRecord {
    Index sample_index = 0;
    double score = 0.0;
    Criterion criterion = Criterion::kl_ideal;
};

/// Softmax(alpha * cos(w_j, f)) over the rows w_j of `weights`. Both sides are
/// L2-normalized; the softmax subtracts the max logit before exponentiating.
ProbDistribution centroid_classifier_probs(std::span<const double> f, const Matrix& weights,
                                           double alpha);

/// Smoothed delta: `epsilon` on `label`, (1 - epsilon) / (c - 1) elsewhere.
ProbDistribution ideal_distribution(Index c, Index label, double epsilon);

/// KL(q || p) in nats with 0 * ln(0 / p) = 0.
double kl_uncertainty(std::span<const double> q, std::span<const double> p);

/// Per-sample KL between the smoothed-delta target for the pseudo label and
/// the cosine-classifier prediction. `weights` are usually the centroids.
std::vector<UncertaintyRecord> score_all(const Matrix& features, const Matrix& weights,
                                         const Labels& pseudo_labels, double alpha,
                                         double epsilon);

std::vector<UncertaintyRecord> score_all(const Matrix& features,
                                         const clusterer::ClusterModel& cluster, double alpha,
                                         double epsilon);

/// Euclidean distance from each sample to its assigned centroid.
std::vector<UncertaintyRecord> l2_uncertainty(const Matrix& features,
                                              const clusterer::ClusterModel& cluster);

/// Symmetrized KL between teacher and student classifier predictions.
std::vector<UncertaintyRecord> consistency_uncertainty(const Matrix& teacher_features,
                                                       const Matrix& student_features,
                                                       const clusterer::ClusterModel& cluster,
                                                       double alpha);

/// Convenience: the `score` column of a record list.
std::vector<double> scores_of(const std::vector<UncertaintyRecord>& records);

} // namespace p2lr::uncertainty
