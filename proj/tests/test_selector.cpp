#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "p2lr/error.hpp"
#include "p2lr/rng.hpp"
#include "p2lr/selector.hpp"

using namespace p2lr;
using namespace p2lr::selector;

namespace {

std::vector<double> random_u(std::size_t n, Rng& rng) {
    std::vector<double> u(n);
    for (auto& v : u) {
        v = rng.uniform() * 3.0;
    }
    return u;
}

std::vector<Index> selected_indices(const Mask& v) {
    std::vector<Index> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (v[i]) {
            out.push_back(static_cast<Index>(i));
        }
    }
    return out;
}

} // namespace

TEST_CASE("schedule endpoints and midpoint") {
    CHECK(schedule_p(0, 30, 0.3, 1.5) == 0.3);
    CHECK(std::abs(schedule_p(30, 30, 0.3, 1.5) - 1.0) <= 1e-12);
    // 0.3 + ln(1 + (e^1.05 - 1) / 2) / 1.5, frozen from a 40-digit evaluation
    CHECK(std::abs(schedule_p(50, 100, 0.3, 1.5) - 0.73794086603846526) <= 1e-12);
    CHECK(std::abs(schedule_p(50, 100, 0.3, 1.5) -
                   static_cast<double>(oracle::schedule(50, 100, 0.3L, 1.5L))) <= 1e-12);
    CHECK(schedule_p(0, 0, 0.3, 1.5) == 1.0);
}

TEST_CASE("schedule is strictly increasing and concave") {
    Rng rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        const double p0 = 0.01 + 0.98 * rng.uniform();
        const double h = 0.05 + 5.0 * rng.uniform();
        const Index T = 1 + static_cast<Index>(rng.uniform_index(150));
        double prev = schedule_p(0, T, p0, h);
        double prev_gap = 2.0;
        for (Index t = 1; t <= T; ++t) {
            const double now = schedule_p(t, T, p0, h);
            CHECK(now > prev);
            const double gap = now - prev;
            CHECK(gap <= prev_gap + 1e-12);
            prev_gap = gap;
            prev = now;
        }
    }
    CHECK_THROWS_AS(schedule_p(5, 4, 0.3, 1.5), Error);
    CHECK_THROWS_AS(schedule_p(1, 4, 1.0, 1.5), Error);
    CHECK_THROWS_AS(schedule_p(1, 4, 0.3, 0.0), Error);
}

TEST_CASE("compute_beta picks the count-th smallest uncertainty") {
    const std::vector<double> u{0.5, 0.1, 0.9, 0.3};
    auto th = compute_beta(u, 0.5);
    CHECK(th.count == 2);
    CHECK(th.beta == 0.3);
    th = compute_beta(u, 1.0);
    CHECK(th.count == 4);
    CHECK(th.beta == 0.9);
    th = compute_beta(u, 0.01);
    CHECK(th.count == 1);
    CHECK(th.beta == 0.1);

    const std::vector<double> bad{0.1, std::nan(""), 0.2, INFINITY};
    try {
        compute_beta(bad, 0.5);
        FAIL("non-finite input accepted");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::input_error);
        CHECK(std::string(e.what()).find("1,3") != std::string::npos);
    }
}

TEST_CASE("vstep selects the lowest ranks with index tie-breaks") {
    const std::vector<double> u{0.5, 0.1, 0.9, 0.3};
    CHECK(vstep(u, 0.3, 2) == Mask{0, 1, 0, 1});

    const std::vector<double> ties(10, 0.4);
    const auto th = compute_beta(ties, 0.5);
    CHECK(th.count == 5);
    const auto v = vstep(ties, th.beta, th.count);
    CHECK(selected_indices(v) == std::vector<Index>{0, 1, 2, 3, 4});

    CHECK_THROWS_AS(vstep(u, 0.2, 2), Error);  // 0.3 > beta would be selected
    CHECK_THROWS_AS(vstep(u, 0.3, 0), Error);
}

TEST_CASE("objective value") {
    const std::vector<double> u{0.2, 0.8};
    CHECK(objective_value(u, Mask{0, 0}, 0.5) == 0.0);
    CHECK(objective_value(u, Mask{1, 0}, 0.5) == doctest::Approx(-0.3).epsilon(1e-15));

    Rng rng(3);
    const auto r = random_u(40, rng);
    Mask v(40);
    for (auto& x : v) {
        x = rng.uniform() < 0.5;
    }
    long double weighted = 0, count = 0;
    for (std::size_t i = 0; i < 40; ++i) {
        weighted += v[i] * static_cast<long double>(r[i]);
        count += v[i];
    }
    CHECK(std::abs(objective_value(r, v, 1.1) - static_cast<double>(weighted - 1.1L * count)) <= 1e-12);
}

TEST_CASE("brute-force oracle basics") {
    CHECK(brute_force_vstep(std::vector<double>{0.3}, 0.5) == Mask{1});
    CHECK(brute_force_vstep(std::vector<double>{0.7}, 0.5) == Mask{0});
    // u == beta contributes zero; the oracle prefers selecting it
    CHECK(brute_force_vstep(std::vector<double>{0.5, 0.2}, 0.5) == Mask{1, 1});
    CHECK_THROWS_AS(brute_force_vstep(std::vector<double>(21, 0.1), 0.5), Error);
}

TEST_CASE("vstep is globally optimal against exhaustive enumeration") {
    Rng rng(11);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 1 + rng.uniform_index(15);
        const auto u = random_u(n, rng);
        auto sorted = u;
        std::sort(sorted.begin(), sorted.end());
        // beta strictly between two adjacent sorted values (or beyond the ends)
        const std::size_t gap = rng.uniform_index(n + 1);
        const double lo = gap == 0 ? sorted.front() - 1.0 : sorted[gap - 1];
        const double hi = gap == n ? sorted.back() + 1.0 : sorted[gap];
        if (!(lo < hi)) {
            continue;
        }
        const double beta = 0.5 * (lo + hi);
        const auto count = static_cast<Index>(gap);
        const auto oracle_v = brute_force_vstep(u, beta);
        if (count == 0) {
            CHECK(objective_value(u, oracle_v, beta) == 0.0);
            continue;
        }
        const auto v = vstep(u, beta, count);
        CHECK(objective_value(u, v, beta) == objective_value(u, oracle_v, beta));
        CHECK(v == oracle_v);
    }
}

TEST_CASE("exact cardinality including heavy ties") {
    Rng rng(5);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = 1 + rng.uniform_index(200);
        std::vector<double> u(n);
        const bool ties = trial % 3 == 0;
        for (auto& x : u) {
            x = ties ? static_cast<double>(rng.uniform_index(3)) : rng.uniform();
        }
        const double p = 1e-3 + (1.0 - 1e-3) * rng.uniform();
        const auto th = compute_beta(u, p);
        const auto expected =
            std::clamp<Index>(std::llround(static_cast<double>(n) * p), 1, static_cast<Index>(n));
        CHECK(th.count == expected);
        const auto v = vstep(u, th.beta, th.count);
        CHECK(count_selected(v) == expected);
        for (std::size_t i = 0; i < n; ++i) {
            if (v[i]) {
                CHECK(u[i] <= th.beta);
            } else {
                CHECK(u[i] >= th.beta);
            }
        }
    }
}

TEST_CASE("selection depends only on ranks") {
    Rng rng(6);
    const auto u = random_u(50, rng);
    std::vector<double> transformed(u.size());
    std::transform(u.begin(), u.end(), transformed.begin(),
                   [](double x) { return std::exp(3.0 * x) - 7.0; });
    for (const double p : {0.1, 0.3, 0.77, 1.0}) {
        const auto a = compute_beta(u, p);
        const auto b = compute_beta(transformed, p);
        CHECK(vstep(u, a.beta, a.count) == vstep(transformed, b.beta, b.count));
    }
}

TEST_CASE("reweighting is exp(-u / temperature)") {
    const std::vector<double> u{0.0, 0.5, 1.0, 2.0};
    const double temp = (0.0 + 0.5 + 1.0 + 2.0) / 4.0;
    const auto w = reweight_indicators(u, temp);
    CHECK(w[0] == 1.0);
    for (std::size_t i = 0; i < u.size(); ++i) {
        CHECK(w[i] == doctest::Approx(std::exp(-u[i] / temp)).epsilon(1e-15));
        CHECK(w[i] > 0.0);
        CHECK(w[i] <= 1.0);
        if (i > 0) {
            CHECK(w[i] < w[i - 1]);
        }
    }
    CHECK_THROWS_AS(reweight_indicators(u, 0.0), Error);
}
