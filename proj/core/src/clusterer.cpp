#include "p2lr/clusterer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

#include "p2lr/error.hpp"
#include "p2lr/parallel.hpp"
#include "p2lr/rng.hpp"

namespace p2lr::clusterer {
namespace {

void require_finite(const Matrix& m, const char* what) {
    for (Index r = 0; r < m.rows(); ++r) {
        for (Index c = 0; c < m.cols(); ++c) {
            if (!std::isfinite(m(r, c))) {
                fail(ErrorCode::input_error, std::string("non-finite value in ") + what +
                                                 " at row " + std::to_string(r));
            }
        }
    }
}

double squared_distance(const Matrix& a, Index ra, const Matrix& b, Index rb) {
    double sum = 0.0;
    for (Index j = 0; j < a.cols(); ++j) {
        const double diff = a(ra, j) - b(rb, j);
        sum += diff * diff;
    }
    return sum;
}

struct Assignment {
    Labels labels;
    std::vector<double> distances;  // squared distance to assigned centroid
};

Assignment assign_with_distances(const Matrix& features, const Matrix& centroids) {
    const auto n = static_cast<std::size_t>(features.rows());
    Assignment out{Labels(n), std::vector<double>(n)};
    parallel_for(n, [&](std::size_t i) {
        const auto row = static_cast<Index>(i);
        Index best = 0;
        double best_dist = squared_distance(features, row, centroids, 0);
        for (Index c = 1; c < centroids.rows(); ++c) {
            const double dist = squared_distance(features, row, centroids, c);
            if (dist < best_dist) {
                best_dist = dist;
                best = c;
            }
        }
        out.labels[i] = static_cast<std::int32_t>(best);
        out.distances[i] = best_dist;
    });
    return out;
}

Matrix kmeans_plus_plus(const Matrix& features, Index k, Rng& rng) {
    const Index n = features.rows();
    Matrix centroids(k, features.cols());
    const auto first = static_cast<Index>(rng.uniform_index(static_cast<std::uint64_t>(n)));
    centroids.row(0) = features.row(first);

    std::vector<double> nearest(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) {
        nearest[static_cast<std::size_t>(i)] = squared_distance(features, i, centroids, 0);
    }
    for (Index c = 1; c < k; ++c) {
        double total = 0.0;
        for (const double v : nearest) {
            total += v;
        }
        Index chosen = 0;
        if (total > 0.0) {
            const double target = rng.uniform() * total;
            double running = 0.0;
            chosen = n - 1;
            for (Index i = 0; i < n; ++i) {
                running += nearest[static_cast<std::size_t>(i)];
                if (running > target) {
                    chosen = i;
                    break;
                }
            }
        } else {
            // All samples coincide with existing centers; any pick is equivalent.
            chosen = static_cast<Index>(rng.uniform_index(static_cast<std::uint64_t>(n)));
        }
        centroids.row(c) = features.row(chosen);
        for (Index i = 0; i < n; ++i) {
            auto& slot = nearest[static_cast<std::size_t>(i)];
            slot = std::min(slot, squared_distance(features, i, centroids, c));
        }
    }
    return centroids;
}

// Moves the farthest sample (from a cluster with >1 member) into each empty
// cluster. Never increases inertia.
void repair_empty(Assignment& state, Index k, Matrix& centroids, const Matrix& features) {
    std::vector<Index> counts(static_cast<std::size_t>(k), 0);
    for (const auto label : state.labels) {
        ++counts[static_cast<std::size_t>(label)];
    }
    for (Index c = 0; c < k; ++c) {
        if (counts[static_cast<std::size_t>(c)] > 0) {
            continue;
        }
        std::size_t far = state.labels.size();
        double far_dist = -1.0;
        for (std::size_t i = 0; i < state.labels.size(); ++i) {
            if (counts[static_cast<std::size_t>(state.labels[i])] > 1 && state.distances[i] > far_dist) {
                far_dist = state.distances[i];
                far = i;
            }
        }
        if (far == state.labels.size()) {
            fail(ErrorCode::contract_error, "empty-cluster repair found no donor sample");
        }
        --counts[static_cast<std::size_t>(state.labels[far])];
        ++counts[static_cast<std::size_t>(c)];
        state.labels[far] = static_cast<std::int32_t>(c);
        state.distances[far] = 0.0;
        centroids.row(c) = features.row(static_cast<Index>(far));
    }
}

double total(const std::vector<double>& values) {
    double sum = 0.0;
    for (const double v : values) {
        sum += v;
    }
    return sum;
}

} // namespace

Matrix cluster_means(const Matrix& features, const Labels& assignments, const Matrix& fallback) {
    const Index k = fallback.rows();
    Matrix sums = Matrix::Zero(k, features.cols());
    std::vector<Index> counts(static_cast<std::size_t>(k), 0);
    for (std::size_t i = 0; i < assignments.size(); ++i) {
        const auto c = assignments[i];
        if (c < 0 || c >= k) {
            fail(ErrorCode::input_error, "assignment out of range at index " + std::to_string(i));
        }
        sums.row(c) += features.row(static_cast<Index>(i));
        ++counts[static_cast<std::size_t>(c)];
    }
    Matrix means = fallback;
    for (Index c = 0; c < k; ++c) {
        if (counts[static_cast<std::size_t>(c)] > 0) {
            means.row(c) = sums.row(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
        }
    }
    return means;
}

Labels assign(const Matrix& features, const Matrix& centroids) {
    if (features.cols() != centroids.cols()) {
        fail(ErrorCode::input_error, "feature and centroid dimensions differ");
    }
    if (centroids.rows() == 0) {
        fail(ErrorCode::input_error, "no centroids");
    }
    require_finite(features, "features");
    require_finite(centroids, "centroids");
    return assign_with_distances(features, centroids).labels;
}

ClusterModel kmeans(const Matrix& features, const KMeansOptions& options) {
    const Index n = features.rows();
    const Index k = options.k;
    if (k < 1 || k > n) {
        fail(ErrorCode::input_error, "k must lie in [1, N]; got k=" + std::to_string(k) +
                                         ", N=" + std::to_string(n));
    }
    if (options.max_iters < 1) {
        fail(ErrorCode::config_error, "max_iters must be >= 1");
    }
    if (!(options.tol >= 0.0)) {
        fail(ErrorCode::config_error, "tol must be >= 0");
    }
    require_finite(features, "features");

    Matrix centroids;
    if (options.initial_centroids) {
        centroids = *options.initial_centroids;
        if (centroids.rows() != k || centroids.cols() != features.cols()) {
            fail(ErrorCode::input_error, "warm-start centroids have the wrong shape");
        }
        require_finite(centroids, "warm-start centroids");
    } else {
        Rng rng(options.seed);
        centroids = kmeans_plus_plus(features, k, rng);
    }

    ClusterModel model;
    Assignment state;
    double previous = std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < options.max_iters; ++iter) {
        state = assign_with_distances(features, centroids);
        repair_empty(state, k, centroids, features);
        const double inertia = total(state.distances);
        model.inertia_history.push_back(inertia);
        model.iterations = iter + 1;
        centroids = cluster_means(features, state.labels, centroids);
        if (previous - inertia < options.tol) {
            break;
        }
        previous = inertia;
    }

    // Final pass so assignments are nearest-centroid and centroids are means.
    state = assign_with_distances(features, centroids);
    repair_empty(state, k, centroids, features);
    centroids = cluster_means(features, state.labels, centroids);
    model.centroids = std::move(centroids);
    model.assignments = std::move(state.labels);
    double inertia = 0.0;
    for (Index i = 0; i < n; ++i) {
        inertia += squared_distance(features, i, model.centroids,
                                    model.assignments[static_cast<std::size_t>(i)]);
    }
    model.inertia = inertia;
    model.inertia_history.push_back(inertia);
    return model;
}

namespace {

std::map<std::int32_t, std::int32_t> majority_identity(const Labels& assignments,
                                                       const Labels& hidden_labels) {
    if (assignments.size() != hidden_labels.size()) {
        fail(ErrorCode::input_error, "assignments and hidden labels differ in length");
    }
    std::map<std::int32_t, std::map<std::int32_t, Index>> counts;
    for (std::size_t i = 0; i < assignments.size(); ++i) {
        ++counts[assignments[i]][hidden_labels[i]];
    }
    std::map<std::int32_t, std::int32_t> majority;
    for (const auto& [cluster, per_identity] : counts) {
        std::int32_t best = 0;
        Index best_count = -1;
        // std::map iterates identities ascending, so strict > keeps the smaller on ties.
        for (const auto& [identity, count] : per_identity) {
            if (count > best_count) {
                best_count = count;
                best = identity;
            }
        }
        majority[cluster] = best;
    }
    return majority;
}

} // namespace

double cluster_purity(const Labels& assignments, const Labels& hidden_labels) {
    if (assignments.empty()) {
        if (!hidden_labels.empty()) {
            fail(ErrorCode::input_error, "assignments and hidden labels differ in length");
        }
        return 1.0;
    }
    const Mask wrong = majority_wrong_mask(assignments, hidden_labels);
    Index correct = 0;
    for (const auto w : wrong) {
        correct += w ? 0 : 1;
    }
    return static_cast<double>(correct) / static_cast<double>(assignments.size());
}

Mask majority_wrong_mask(const Labels& assignments, const Labels& hidden_labels) {
    const auto majority = majority_identity(assignments, hidden_labels);
    Mask wrong(assignments.size(), 0);
    for (std::size_t i = 0; i < assignments.size(); ++i) {
        wrong[i] = hidden_labels[i] != majority.at(assignments[i]) ? 1 : 0;
    }
    return wrong;
}

} // namespace p2lr::clusterer
