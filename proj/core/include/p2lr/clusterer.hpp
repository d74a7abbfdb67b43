#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "p2lr/types.hpp"

namespace p2lr::clusterer {

/// k-means result. The centroids double as the weights of the external
/// cosine classifier used for uncertainty scoring.
struct ClusterModel {
    Matrix centroids;
    Labels assignments;
    double inertia = 0.0;
    /// Inertia after each assignment pass, in iteration order.
    std::vector<double> inertia_history;
    int iterations = 0;

    [[nodiscard]] Index num_clusters() const { return centroids.rows(); }
};

struct KMeansOptions {
    Index k = 0;
    int max_iters = 100;
    double tol = 1e-10;
    std::uint64_t seed = 0;
    /// Skip k-means++ and start Lloyd from these centroids (warm start).
    std::optional<Matrix> initial_centroids;
};

/// Lloyd's algorithm with k-means++ seeding. Empty clusters are repaired by
/// moving the sample farthest from its centroid into them.
ClusterModel kmeans(const Matrix& features, const KMeansOptions& options);

/// Nearest centroid by squared Euclidean distance; ties go to the lower index.
Labels assign(const Matrix& features, const Matrix& centroids);

/// Fraction of samples whose identity equals their cluster's majority identity.
double cluster_purity(const Labels& assignments, const Labels& hidden_labels);

/// 1 where a sample's identity differs from its cluster's majority identity
/// (majority ties go to the smaller identity index).
Mask majority_wrong_mask(const Labels& assignments, const Labels& hidden_labels);

/// Per-cluster means of `features` under `assignments`; clusters without
/// members keep the corresponding row of `fallback`.
Matrix cluster_means(const Matrix& features, const Labels& assignments, const Matrix& fallback);

} // namespace p2lr::clusterer
