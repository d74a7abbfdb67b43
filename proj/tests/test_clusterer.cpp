#include <doctest.h>

#include <cmath>
#include <map>

#include "p2lr/clusterer.hpp"
#include "p2lr/error.hpp"
#include "p2lr/rng.hpp"
#include "p2lr/synthgen.hpp"

using namespace p2lr;
using namespace p2lr::clusterer;

namespace {

Matrix random_matrix(Index rows, Index cols, std::uint64_t seed, double scale = 1.0) {
    Rng rng(seed);
    Matrix m(rows, cols);
    for (Index i = 0; i < m.size(); ++i) {
        m.data()[i] = scale * rng.normal();
    }
    return m;
}

// Direct per-cluster majority count.
double naive_purity(const Labels& a, const Labels& h) {
    std::map<int, std::map<int, int>> table;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ++table[a[i]][h[i]];
    }
    int correct = 0;
    for (const auto& [cluster, counts] : table) {
        int best = 0;
        for (const auto& [id, n] : counts) {
            best = std::max(best, n);
        }
        correct += best;
    }
    return static_cast<double>(correct) / static_cast<double>(a.size());
}

void check_means(const Matrix& x, const ClusterModel& m) {
    for (Index c = 0; c < m.num_clusters(); ++c) {
        Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(x.cols());
        int count = 0;
        for (Index i = 0; i < x.rows(); ++i) {
            if (m.assignments[static_cast<std::size_t>(i)] == c) {
                sum += x.row(i);
                ++count;
            }
        }
        REQUIRE(count > 0);
        CHECK((m.centroids.row(c) - sum / count).cwiseAbs().maxCoeff() <= 1e-9);
    }
}

} // namespace

TEST_CASE("N = k puts every sample in its own cluster") {
    const Matrix x = random_matrix(6, 3, 1);
    const auto m = kmeans(x, {.k = 6, .max_iters = 50, .tol = 0.0, .seed = 3});
    CHECK(m.inertia == doctest::Approx(0.0));
    std::vector<int> seen(6, 0);
    for (const auto a : m.assignments) {
        ++seen[static_cast<std::size_t>(a)];
    }
    for (const auto s : seen) {
        CHECK(s == 1);
    }
}

TEST_CASE("two separated blobs are recovered exactly") {
    Rng rng(1);
    const double sigma = 0.1;
    Matrix x(100, 2);
    Labels blob(100);
    for (Index i = 0; i < 100; ++i) {
        const int b = i < 50 ? 0 : 1;
        x(i, 0) = (b ? 5.0 : -5.0) + sigma * rng.normal();
        x(i, 1) = sigma * rng.normal();
        blob[static_cast<std::size_t>(i)] = b;
    }
    const auto m = kmeans(x, {.k = 2, .max_iters = 100, .tol = 1e-12, .seed = 1});
    CHECK(cluster_purity(m.assignments, blob) == 1.0);
    CHECK(m.assignments[0] != m.assignments[50]);
    for (int b = 0; b < 2; ++b) {
        const auto c = m.assignments[static_cast<std::size_t>(b * 50)];
        const Eigen::RowVectorXd blob_mean = x.middleRows(b * 50, 50).colwise().mean();
        CHECK((m.centroids.row(c) - blob_mean).norm() <= 3.0 * sigma / std::sqrt(50.0));
    }
}

TEST_CASE("inertia never increases and centroids are member means") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Matrix x = random_matrix(80, 4, seed);
        const auto m = kmeans(x, {.k = 6, .max_iters = 200, .tol = 0.0, .seed = seed});
        for (std::size_t i = 1; i < m.inertia_history.size(); ++i) {
            CHECK(m.inertia_history[i] <= m.inertia_history[i - 1]);
        }
        CHECK(m.inertia >= 0.0);
        check_means(x, m);
    }
}

TEST_CASE("empty-cluster repair keeps every cluster populated") {
    // Many duplicate points force k-means++ to pick coincident seeds.
    Matrix x = Matrix::Zero(30, 2);
    x.row(29) << 10.0, 10.0;
    x.row(28) << -10.0, 10.0;
    const auto m = kmeans(x, {.k = 5, .max_iters = 20, .tol = 0.0, .seed = 2});
    std::vector<int> counts(5, 0);
    for (const auto a : m.assignments) {
        ++counts[static_cast<std::size_t>(a)];
    }
    for (const auto c : counts) {
        CHECK(c >= 1);
    }
    const auto again = kmeans(x, {.k = 5, .max_iters = 20, .tol = 0.0, .seed = 2});
    CHECK(again.assignments == m.assignments);
    CHECK(again.centroids == m.centroids);
}

TEST_CASE("warm start begins from the given centroids") {
    const Matrix x = random_matrix(40, 3, 8);
    const auto cold = kmeans(x, {.k = 4, .max_iters = 100, .tol = 0.0, .seed = 1});
    KMeansOptions warm{.k = 4, .max_iters = 100, .tol = 0.0, .seed = 99};
    warm.initial_centroids = cold.centroids;
    const auto m = kmeans(x, warm);
    CHECK(m.assignments == cold.assignments);
}

TEST_CASE("kmeans rejects bad inputs") {
    const Matrix x = random_matrix(5, 2, 0);
    CHECK_THROWS_AS(kmeans(x, {.k = 6}), Error);
    Matrix bad = x;
    bad(2, 1) = std::nan("");
    try {
        kmeans(bad, {.k = 2});
        FAIL("non-finite input accepted");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::input_error);
    }
}

TEST_CASE("assign picks the nearest centroid with lowest-index ties") {
    Matrix centroids(5, 2);
    centroids << 0, 0, 1, 0, 3, 3, 5, 5, -1, 0;
    Matrix x(2, 2);
    x << 5, 5,   // equals centroid 3
        0, 0;    // equals centroid 0
    CHECK(assign(x, centroids) == Labels{3, 0});

    Matrix tie(1, 2);
    tie << 0, 0;
    Matrix c2(5, 2);
    c2 << 9, 9, 1, 0, 7, 7, 8, 8, -1, 0;  // centroids 1 and 4 equidistant
    CHECK(assign(tie, c2) == Labels{1});
}

TEST_CASE("assign agrees with a brute-force scan and is idempotent") {
    const Matrix x = random_matrix(10, 4, 21);
    const Matrix c = random_matrix(3, 4, 22);
    const auto labels = assign(x, c);
    for (Index i = 0; i < 10; ++i) {
        int best = 0;
        double best_d = 1e300;
        for (int j = 0; j < 3; ++j) {
            const double d = (x.row(i) - c.row(j)).squaredNorm();
            if (d < best_d) {
                best_d = d;
                best = j;
            }
        }
        CHECK(labels[static_cast<std::size_t>(i)] == best);
    }
    CHECK(assign(x, c) == labels);
    CHECK_THROWS_AS(assign(x, random_matrix(3, 5, 1)), Error);
}

TEST_CASE("cluster purity follows the majority rule") {
    const Labels same{0, 1, 2, 3};
    CHECK(cluster_purity(same, same) == 1.0);

    const Labels one_cluster{0, 0, 0, 0};
    const Labels ids{0, 0, 0, 1};
    CHECK(cluster_purity(one_cluster, ids) == doctest::Approx(0.75));
    CHECK(majority_wrong_mask(one_cluster, ids) == Mask{0, 0, 0, 1});

    // majority tie goes to the smaller identity
    CHECK(majority_wrong_mask(Labels{2, 2}, Labels{5, 3}) == Mask{1, 0});

    Rng rng(50);
    Labels a(50), h(50);
    for (std::size_t i = 0; i < 50; ++i) {
        a[i] = static_cast<std::int32_t>(rng.uniform_index(5));
        h[i] = static_cast<std::int32_t>(rng.uniform_index(7));
    }
    CHECK(cluster_purity(a, h) == doctest::Approx(naive_purity(a, h)).epsilon(1e-15));
}

TEST_CASE("zero-noise data clusters perfectly") {
    const auto p = synthgen::generate_prototypes(6, 5, 0.8, 4);
    const auto target = synthgen::sample_target(p, 8, 0.0, 0.0, 0);
    const auto m = kmeans(target.raw_features, {.k = 6, .max_iters = 100, .tol = 0.0, .seed = 0});
    CHECK(cluster_purity(m.assignments, target.hidden_labels) == 1.0);
}
