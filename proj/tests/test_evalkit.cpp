#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "oracles.hpp"
#include "p2lr/error.hpp"
#include "p2lr/evalkit.hpp"
#include "p2lr/rng.hpp"

using namespace p2lr;
using namespace p2lr::evalkit;

TEST_CASE("perfect separation") {
    const std::vector<double> scores{0.1, 0.9, 0.2, 0.8, 0.3};
    const Mask wrong{0, 1, 0, 1, 0};
    const auto d = detection_metrics(scores, wrong, 0.4);
    CHECK(d.flagged == 2);
    CHECK(*d.precision == 1.0);
    CHECK(*d.recall == 1.0);
    CHECK(*d.auroc == 1.0);
    CHECK_FALSE(d.degenerate);
}

TEST_CASE("constant scores give AUROC one half") {
    const std::vector<double> scores(20, 0.7);
    Mask wrong(20, 0);
    wrong[3] = wrong[11] = wrong[17] = 1;
    CHECK(*auroc(scores, wrong) == 0.5);
}

TEST_CASE("AUROC matches the all-pairs oracle") {
    Rng rng(3);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t n = 2 + rng.uniform_index(80);
        std::vector<double> scores(n);
        Mask wrong(n);
        for (std::size_t i = 0; i < n; ++i) {
            // coarse values to exercise ties
            scores[i] = static_cast<double>(rng.uniform_index(10)) / 4.0;
            wrong[i] = rng.uniform() < 0.3;
        }
        const auto got = auroc(scores, wrong);
        const auto wrongs = std::count(wrong.begin(), wrong.end(), 1);
        if (wrongs == 0 || wrongs == static_cast<long>(n)) {
            CHECK_FALSE(got.has_value());
            continue;
        }
        CHECK(std::abs(*got - oracle::pairwise_auroc(scores, wrong)) <= 1e-12);

        // invariant under strictly increasing transforms
        std::vector<double> t(n);
        std::transform(scores.begin(), scores.end(), t.begin(),
                       [](double x) { return std::atan(x) * 5.0 + 1.0; });
        CHECK(*auroc(t, wrong) == *got);
    }
}

TEST_CASE("degenerate masks are flagged") {
    const std::vector<double> scores{0.1, 0.2, 0.3};
    const auto d = detection_metrics(scores, Mask{0, 0, 0}, 0.5);
    CHECK(d.degenerate);
    CHECK(d.precision.has_value());
    CHECK(*d.precision == 0.0);
    CHECK_FALSE(d.recall.has_value());
    CHECK_FALSE(d.auroc.has_value());
    CHECK_THROWS_AS(detection_metrics(scores, Mask{0, 0, 0}, 0.0), Error);
}

TEST_CASE("average precision by hand") {
    // hits at ranks 1, 3, 6: (1/1 + 2/3 + 3/6) / 3
    CHECK(average_precision({1, 0, 1, 0, 0, 1}) == doctest::Approx((1.0 + 2.0 / 3.0 + 0.5) / 3.0));
    CHECK(average_precision({0, 0, 0}) == 0.0);
}

TEST_CASE("one-hot identity codes retrieve perfectly") {
    const int ids = 6;
    Matrix emb = Matrix::Zero(ids * 5, ids);
    Labels labels;
    for (int i = 0; i < ids * 5; ++i) {
        emb(i, i % ids) = 1.0;
        labels.push_back(i % ids);
    }
    const auto r = retrieval_eval(emb, labels, 0.4, 3);
    CHECK(r.map == 1.0);
    CHECK(r.cmc.at(1) == 1.0);
    CHECK(r.num_queries == ids * 2);
    CHECK(r.gallery_size == ids * 3);
}

TEST_CASE("one gallery match per identity gives AP = 1 / rank") {
    // Two samples per identity, so each identity has one query and one
    // gallery entry whichever way the split falls.
    Matrix emb(6, 2);
    emb << 1, 0, 0.1, 0.9, 0, 1, 0.2, 1, 0.95, -0.2, 0.7, 0.7;
    const Labels ids{0, 0, 1, 1, 2, 2};
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        const auto r = retrieval_eval(emb, ids, 0.5, seed);
        REQUIRE(r.num_queries == 3);
        REQUIRE(r.gallery_size == 3);
        double expected = 0.0;
        double top1 = 0.0;
        for (const auto rank : r.first_hit_rank) {
            REQUIRE(rank >= 1);
            REQUIRE(rank <= 3);
            expected += 1.0 / static_cast<double>(rank);
            top1 += rank == 1 ? 1.0 : 0.0;
        }
        CHECK(r.map == doctest::Approx(expected / 3.0).epsilon(1e-15));
        CHECK(r.cmc.at(1) == doctest::Approx(top1 / 3.0).epsilon(1e-15));
        CHECK(r.cmc_at(3) == 1.0);
    }
}

TEST_CASE("retrieval is invariant to a global rotation") {
    Rng rng(8);
    Matrix emb(40, 3);
    Labels ids;
    for (Index i = 0; i < 40; ++i) {
        ids.push_back(static_cast<std::int32_t>(i % 8));
        for (Index j = 0; j < 3; ++j) {
            emb(i, j) = rng.normal() + (j == i % 3 ? 2.0 : 0.0);
        }
    }
    Matrix rot(3, 3);
    const double a = 0.7;
    rot << std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a), 0, 0, 0, 1;
    const auto r1 = retrieval_eval(emb, ids, 0.4, 1);
    const auto r2 = retrieval_eval(emb * rot.transpose(), ids, 0.4, 1);
    CHECK(r1.map == doctest::Approx(r2.map).epsilon(1e-12));
    CHECK(r1.first_hit_rank == r2.first_hit_rank);
    for (Index rank = 1; rank < r1.gallery_size; ++rank) {
        CHECK(r1.cmc_at(rank) <= r1.cmc_at(rank + 1));
    }
    CHECK(r1.cmc_at(r1.gallery_size) == 1.0);
}

TEST_CASE("random embeddings score near the chance level") {
    // Monte-Carlo oracle: AP of uniformly random rankings with the same
    // relevant/gallery counts, computed without the library.
    const int c = 10, per_id = 6;
    Rng emb_rng(99), perm_rng(1234);
    double library_total = 0.0;
    double oracle_total = 0.0;
    const int trials = 40;
    for (int t = 0; t < trials; ++t) {
        Matrix emb(c * per_id, 8);
        Labels ids;
        for (Index i = 0; i < emb.rows(); ++i) {
            ids.push_back(static_cast<std::int32_t>(i % c));
            for (Index j = 0; j < 8; ++j) {
                emb(i, j) = emb_rng.normal();
            }
        }
        const auto r = retrieval_eval(emb, ids, 0.34, static_cast<std::uint64_t>(t));
        library_total += r.map;

        // each identity: 2 queries, 4 gallery samples; gallery of 40
        double ap_sum = 0.0;
        const int queries = 200;
        for (int q = 0; q < queries; ++q) {
            std::vector<int> rel(40, 0);
            std::fill(rel.begin(), rel.begin() + 4, 1);
            for (std::size_t i = rel.size() - 1; i > 0; --i) {
                std::swap(rel[i], rel[perm_rng.uniform_index(i + 1)]);
            }
            double hits = 0, prec = 0;
            for (std::size_t k = 0; k < rel.size(); ++k) {
                if (rel[k]) {
                    hits += 1;
                    prec += hits / static_cast<double>(k + 1);
                }
            }
            ap_sum += prec / hits;
        }
        oracle_total += ap_sum / queries;
    }
    const double lib = library_total / trials;
    const double ref = oracle_total / trials;
    CHECK(std::abs(lib - ref) <= 0.03);
    CHECK(lib < 0.3);
}

TEST_CASE("single-sample identities cannot be split") {
    Matrix emb = Matrix::Identity(3, 3);
    try {
        retrieval_eval(emb, Labels{0, 0, 1}, 0.5, 0);
        FAIL("expected split error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::split_error);
        CHECK(std::string(e.what()).find("identity 1") != std::string::npos);
    }
}
