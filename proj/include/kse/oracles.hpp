#pragma once

/**
 * @file oracles.hpp
 *
 * Reference values computed by naive high-count summation. Nothing here uses
 * quadrature.hpp or the energy pipelines; the point is independence.
 */

#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <vector>

#include "kse/error.hpp"

namespace kse::oracles {

struct LinearDensity {
    /// Average of |A nu|^p over the unit sphere by dense angle summation.
    double brute_force = 0.0;
    /// |A|_F^2 / n, only for p = 2.
    std::optional<double> trace_formula;
};

/**
 * Average over S^{n-1} of |A nu|^p for A given row-major (m x n), n in {1, 2, 3}.
 * n = 2 uses `nodes` midpoint angles; n = 3 a sqrt(nodes) x sqrt(nodes)
 * midpoint grid in (cos polar, azimuth), which is area-uniform.
 */
inline LinearDensity linear_euclidean_density(const std::vector<double>& a, std::size_t m, std::size_t n, double p,
                                              std::size_t nodes = 1'000'000) {
    if (a.size() != m * n) throw Error(ErrorCode::invalid_config, "matrix size does not match m x n");
    if (!(p >= 1.0)) throw Error(ErrorCode::invalid_config, "p must be >= 1");
    auto value = [&](const double* nu) {
        long double s = 0.0L;
        for (std::size_t r = 0; r < m; ++r) {
            long double row = 0.0L;
            for (std::size_t c = 0; c < n; ++c) row += static_cast<long double>(a[r * n + c]) * nu[c];
            s += row * row;
        }
        return std::pow(static_cast<double>(std::sqrt(s)), p);
    };
    LinearDensity out;
    long double acc = 0.0L;
    if (n == 1) {
        const double plus = 1.0, minus = -1.0;
        acc = 0.5L * (value(&plus) + value(&minus));
    } else if (n == 2) {
        for (std::size_t k = 0; k < nodes; ++k) {
            const double t = 2.0 * std::numbers::pi * (static_cast<double>(k) + 0.5) / static_cast<double>(nodes);
            const double nu[2] = {std::cos(t), std::sin(t)};
            acc += value(nu);
        }
        acc /= static_cast<long double>(nodes);
    } else if (n == 3) {
        const auto side = static_cast<std::size_t>(std::sqrt(static_cast<double>(nodes)));
        for (std::size_t i = 0; i < side; ++i) {
            const double z = -1.0 + 2.0 * (static_cast<double>(i) + 0.5) / static_cast<double>(side);
            const double s = std::sqrt(1.0 - z * z);
            for (std::size_t j = 0; j < side; ++j) {
                const double t = 2.0 * std::numbers::pi * (static_cast<double>(j) + 0.5) / static_cast<double>(side);
                const double nu[3] = {s * std::cos(t), s * std::sin(t), z};
                acc += value(nu);
            }
        }
        acc /= static_cast<long double>(side * side);
    } else {
        throw Error(ErrorCode::unsupported_dimension, "linear density oracle supports n in {1, 2, 3}");
    }
    out.brute_force = static_cast<double>(acc);
    if (p == 2.0) {
        double frob = 0.0;
        for (double v : a) frob += v * v;
        out.trace_formula = frob / static_cast<double>(n);
    }
    return out;
}

struct MaxNormConstants {
    /// |d_{e1} u|^p + |d_{e2} u|^p.
    double frame_sum = 0.0;
    /// Average over S^1 of max(|nu_1|, |nu_2|)^p by the periodic trapezoid rule.
    double sphere_average = 0.0;
    /// (2 + pi) / (2 pi) scaled, only for p = 2.
    std::optional<double> closed_form;
};

/**
 * Densities for u = s * identity into the max-norm plane; s = 1 is the
 * classical example, s = 0 the constant map.
 */
inline MaxNormConstants maxnorm_counterexample_constants(double p, double scale = 1.0,
                                                         std::size_t nodes = 10'000'000) {
    if (!(p >= 1.0)) throw Error(ErrorCode::invalid_config, "p must be >= 1");
    MaxNormConstants out;
    const double sp = std::pow(std::abs(scale), p);
    out.frame_sum = 2.0 * sp;
    long double acc = 0.0L;
    for (std::size_t k = 0; k < nodes; ++k) {
        const double t = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(nodes);
        acc += std::pow(std::max(std::abs(std::cos(t)), std::abs(std::sin(t))), p);
    }
    out.sphere_average = sp * static_cast<double>(acc / static_cast<long double>(nodes));
    if (p == 2.0) out.closed_form = sp * (2.0 + std::numbers::pi) / (2.0 * std::numbers::pi);
    return out;
}

}  // namespace kse::oracles
