#pragma once

// Independent reference computations for the unit and acceptance suites.
// Everything here uses long double and naive loops, and never calls into
// the library code it is used to check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

namespace oracle {

using Real = long double;

inline Real kl(const std::vector<double>& q, const std::vector<double>& p) {
    Real sum = 0.0L;
    for (std::size_t j = 0; j < q.size(); ++j) {
        if (q[j] > 0.0) {
            sum += static_cast<Real>(q[j]) *
                   std::log(static_cast<Real>(q[j]) / static_cast<Real>(p[j]));
        }
    }
    return sum;
}

/// Softmax(alpha * cos(w_j, f)) in extended precision.
inline std::vector<Real> cosine_softmax(const std::vector<double>& f,
                                        const std::vector<std::vector<double>>& weights,
                                        double alpha) {
    Real fn = 0.0L;
    for (const double x : f) {
        fn += static_cast<Real>(x) * x;
    }
    fn = std::sqrt(fn);
    std::vector<Real> z;
    for (const auto& w : weights) {
        Real wn = 0.0L;
        Real dot = 0.0L;
        for (std::size_t k = 0; k < f.size(); ++k) {
            wn += static_cast<Real>(w[k]) * w[k];
            dot += static_cast<Real>(w[k]) * f[k];
        }
        z.push_back(static_cast<Real>(alpha) * dot / (std::sqrt(wn) * fn));
    }
    const Real mx = *std::max_element(z.begin(), z.end());
    Real total = 0.0L;
    for (auto& v : z) {
        v = std::exp(v - mx);
        total += v;
    }
    for (auto& v : z) {
        v /= total;
    }
    return z;
}

inline Real schedule(Real t, Real T, Real p0, Real h) {
    return p0 + std::log(1.0L + (std::exp(h * (1.0L - p0)) - 1.0L) * t / T) / h;
}

/// AUROC as the fraction of (wrong, clean) pairs ordered correctly, ties 1/2.
inline double pairwise_auroc(const std::vector<double>& scores, const std::vector<std::uint8_t>& wrong) {
    Real good = 0.0L;
    Real pairs = 0.0L;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!wrong[i]) {
            continue;
        }
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (wrong[j]) {
                continue;
            }
            pairs += 1.0L;
            if (scores[i] > scores[j]) {
                good += 1.0L;
            } else if (scores[i] == scores[j]) {
                good += 0.5L;
            }
        }
    }
    return static_cast<double>(good / pairs);
}

} // namespace oracle
