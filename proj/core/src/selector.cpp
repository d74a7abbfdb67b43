#include "p2lr/selector.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "p2lr/error.hpp"

namespace p2lr::selector {

double schedule_p(Index t, Index T, double p0, double h) {
    if (T < 0 || t < 0 || t > T) {
        fail(ErrorCode::config_error, "schedule needs 0 <= t <= T");
    }
    if (!(p0 > 0.0 && p0 < 1.0)) {
        fail(ErrorCode::config_error, "p0 must lie in (0, 1)");
    }
    if (!(h > 0.0) || !std::isfinite(h)) {
        fail(ErrorCode::config_error, "h must be finite and > 0");
    }
    if (T == 0) {
        return 1.0;
    }
    if (t == T) {
        // log1p(expm1(x)) / h can be off by an ulp from 1 - p0.
        return 1.0;
    }
    const double ramp = static_cast<double>(t) / static_cast<double>(T);
    return p0 + std::log1p(std::expm1(h * (1.0 - p0)) * ramp) / h;
}

std::vector<Index> rank_order(std::span<const double> uncertainties) {
    std::vector<Index> order(uncertainties.size());
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
        return uncertainties[static_cast<std::size_t>(a)] < uncertainties[static_cast<std::size_t>(b)];
    });
    return order;
}

Threshold compute_beta(std::span<const double> uncertainties, double p_t) {
    const auto n = static_cast<Index>(uncertainties.size());
    if (n < 1) {
        fail(ErrorCode::input_error, "compute_beta needs at least one sample");
    }
    if (!(p_t > 0.0 && p_t <= 1.0)) {
        fail(ErrorCode::config_error, "p_t must lie in (0, 1]");
    }
    std::string bad;
    for (Index i = 0; i < n; ++i) {
        if (!std::isfinite(uncertainties[static_cast<std::size_t>(i)])) {
            bad += (bad.empty() ? "" : ",") + std::to_string(i);
        }
    }
    if (!bad.empty()) {
        fail(ErrorCode::input_error, "non-finite uncertainties at indices " + bad);
    }
    const Index count =
        std::clamp<Index>(std::llround(static_cast<double>(n) * p_t), Index{1}, n);
    const auto order = rank_order(uncertainties);
    return {uncertainties[static_cast<std::size_t>(order[static_cast<std::size_t>(count - 1)])], count};
}

Mask vstep(std::span<const double> uncertainties, double beta, Index count) {
    const auto n = static_cast<Index>(uncertainties.size());
    if (count < 1 || count > n) {
        fail(ErrorCode::contract_error, "selection count " + std::to_string(count) +
                                            " outside [1, N]");
    }
    const auto order = rank_order(uncertainties);
    Mask v(uncertainties.size(), 0);
    for (Index r = 0; r < n; ++r) {
        const auto i = static_cast<std::size_t>(order[static_cast<std::size_t>(r)]);
        const bool take = r < count;
        const bool consistent = take ? uncertainties[i] <= beta : uncertainties[i] >= beta;
        if (!consistent) {
            fail(ErrorCode::contract_error, "beta and count disagree at sample " + std::to_string(i));
        }
        v[i] = take ? 1 : 0;
    }
    return v;
}

double objective_value(std::span<const double> uncertainties, const Mask& indicators, double beta) {
    if (indicators.size() != uncertainties.size()) {
        fail(ErrorCode::input_error, "indicators and uncertainties differ in length");
    }
    double weighted = 0.0;
    double selected = 0.0;
    for (std::size_t i = 0; i < indicators.size(); ++i) {
        if (indicators[i]) {
            weighted += uncertainties[i];
            selected += 1.0;
        }
    }
    return weighted - beta * selected;
}

Mask brute_force_vstep(std::span<const double> uncertainties, double beta) {
    const auto n = static_cast<Index>(uncertainties.size());
    if (n > kBruteForceMaxN) {
        fail(ErrorCode::oracle_size, "brute force limited to N <= " + std::to_string(kBruteForceMaxN));
    }
    Mask best(uncertainties.size(), 0);
    double best_value = objective_value(uncertainties, best, beta);
    Index best_count = 0;
    Mask candidate(uncertainties.size(), 0);
    const std::uint64_t total = std::uint64_t{1} << n;
    for (std::uint64_t bits = 1; bits < total; ++bits) {
        Index selected = 0;
        // Bit (n-1-i) maps to v_i so that increasing `bits` walks vectors in
        // lexicographic order; the first minimizer seen is lexicographically smallest.
        for (Index i = 0; i < n; ++i) {
            const bool on = (bits >> (n - 1 - i)) & 1U;
            candidate[static_cast<std::size_t>(i)] = on ? 1 : 0;
            selected += on ? 1 : 0;
        }
        const double value = objective_value(uncertainties, candidate, beta);
        if (value < best_value || (value == best_value && selected > best_count)) {
            best = candidate;
            best_value = value;
            best_count = selected;
        }
    }
    return best;
}

std::vector<double> reweight_indicators(std::span<const double> uncertainties, double temperature) {
    if (!(temperature > 0.0) || !std::isfinite(temperature)) {
        fail(ErrorCode::config_error, "temperature must be finite and > 0");
    }
    std::vector<double> weights(uncertainties.size());
    for (std::size_t i = 0; i < weights.size(); ++i) {
        weights[i] = std::exp(-uncertainties[i] / temperature);
    }
    return weights;
}

Index count_selected(const Mask& indicators) {
    return std::count_if(indicators.begin(), indicators.end(), [](auto v) { return v != 0; });
}

} // namespace p2lr::selector
