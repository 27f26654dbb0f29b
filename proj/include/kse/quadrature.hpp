#pragma once

/**
 * @file quadrature.hpp
 *
 * Deterministic sphere and ball rules, the unit-ball volume, the energy
 * normalization constant and the h -> 0 extrapolation used by the
 * difference-quotient side.
 *
 * Sphere rules are normalized to total weight 1 (they compute averages over
 * S^{n-1}); ball rules carry total weight omega_n.
 */

#include <boost/math/special_functions/erf.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <ostream>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "kse/error.hpp"
#include "kse/point.hpp"

namespace kse {

/// Volume of the unit ball in R^n: pi^{n/2} / Gamma(n/2 + 1).
inline double unit_ball_volume(std::size_t n) {
    const double half = 0.5 * static_cast<double>(n);
    return std::pow(std::numbers::pi, half) / std::tgamma(half + 1.0);
}

/// c_{n,p} = (n + p) / (n omega_n).
inline double energy_constant(std::size_t n, double p) {
    return (static_cast<double>(n) + p) / (static_cast<double>(n) * unit_ball_volume(n));
}

/// Gauss-Legendre nodes and weights on [-1, 1] (Newton on P_n).
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre(std::size_t order) {
    if (order == 0) throw Error(ErrorCode::invalid_config, "Gauss-Legendre order must be positive");
    std::vector<double> x(order), w(order);
    const std::size_t half = (order + 1) / 2;
    for (std::size_t i = 0; i < half; ++i) {
        double z = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (static_cast<double>(order) + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (std::size_t k = 1; k <= order; ++k) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * static_cast<double>(k) - 1.0) * z * p1 - (static_cast<double>(k) - 1.0) * p2) /
                     static_cast<double>(k);
            }
            dp = static_cast<double>(order) * (z * p0 - p1) / (z * z - 1.0);
            const double dz = p0 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        // recompute derivative at the converged node
        double p0 = 1.0, p1 = 0.0;
        for (std::size_t k = 1; k <= order; ++k) {
            const double p2 = p1;
            p1 = p0;
            p0 = ((2.0 * static_cast<double>(k) - 1.0) * z * p1 - (static_cast<double>(k) - 1.0) * p2) /
                 static_cast<double>(k);
        }
        dp = static_cast<double>(order) * (z * p0 - p1) / (z * z - 1.0);
        const double weight = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[order - 1 - i] = z;
        w[i] = weight;
        w[order - 1 - i] = weight;
    }
    if (order % 2 == 1) x[order / 2] = 0.0;
    return {x, w};
}

enum class RuleKind { sphere, ball };

struct QuadratureRule {
    RuleKind kind = RuleKind::sphere;
    std::size_t dim = 0;
    std::vector<Point> nodes;
    std::vector<double> weights;
    /// Declared total weight: 1 for sphere rules, omega_n for ball rules.
    double normalization = 1.0;
    /// Ball rules built on a sphere rule: index of the direction of each node.
    std::vector<std::size_t> direction;
    /// Ball rules: |v| of each node.
    std::vector<double> radius;

    std::size_t size() const noexcept { return nodes.size(); }

    template <typename F>
    double integrate(F&& f) const {
        double s = 0.0;
        for (std::size_t i = 0; i < nodes.size(); ++i) s += weights[i] * f(nodes[i]);
        return s;
    }
};

namespace detail {

inline double radical_inverse(std::uint64_t index, std::uint64_t base) {
    double inv = 1.0 / static_cast<double>(base), f = inv, r = 0.0;
    while (index > 0) {
        r += f * static_cast<double>(index % base);
        index /= base;
        f *= inv;
    }
    return r;
}

inline constexpr std::uint64_t kHaltonPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19};

}  // namespace detail

/**
 * Halton points on S^{n-1} with a seeded Cranley-Patterson shift: each
 * coordinate of the shifted Halton point is mapped through the standard
 * normal quantile and the resulting Gaussian vector is normalized.
 */
inline std::vector<Point> halton_sphere_points(std::size_t n, std::size_t count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<double> shift(n);
    for (auto& s : shift) s = unif(rng);
    std::vector<Point> out;
    out.reserve(count);
    for (std::size_t k = 0; out.size() < count; ++k) {
        Point g(n);
        for (std::size_t i = 0; i < n; ++i) {
            double u = detail::radical_inverse(k + 1, detail::kHaltonPrimes[i]) + shift[i];
            u -= std::floor(u);
            u = std::clamp(u, 1e-15, 1.0 - 1e-15);
            g[i] = std::numbers::sqrt2 * boost::math::erf_inv(2.0 * u - 1.0);
        }
        const double len = norm(g.coords());
        if (len < 1e-12) continue;
        for (std::size_t i = 0; i < n; ++i) g[i] /= len;
        out.push_back(g);
    }
    return out;
}

/// Default sphere orders: 256 angles (n=2), 16 x 32 (n=3), 4096 QMC points otherwise.
inline std::vector<std::size_t> default_sphere_order(std::size_t n) {
    if (n == 2) return {256};
    if (n == 3) return {16, 32};
    return {4096};
}

/**
 * Normalized sphere rule.
 *  - n = 2: uniform angles 2 pi j / N; for even N node j + N/2 is the exact
 *    negation of node j.
 *  - n = 3: Gauss-Legendre in the cosine of the polar angle (order[0]) times
 *    uniform azimuth (order[1]); antipodal nodes are exact negations.
 *  - n > 3: seeded Halton points (order[0] of them), equal weights.
 */
inline QuadratureRule sphere_nodes(std::size_t n, std::vector<std::size_t> order = {}, std::uint64_t seed = 0) {
    if (n < 2) throw Error(ErrorCode::unsupported_dimension, "sphere rules need n >= 2");
    if (n > kMaxDim) throw Error(ErrorCode::unsupported_dimension, "dimension exceeds 8");
    if (order.empty()) order = default_sphere_order(n);
    for (auto o : order)
        if (o == 0) throw Error(ErrorCode::invalid_config, "sphere order must be positive");

    QuadratureRule rule;
    rule.kind = RuleKind::sphere;
    rule.dim = n;
    rule.normalization = 1.0;

    auto circle = [](std::size_t count) {
        std::vector<std::pair<double, double>> cs(count);
        const std::size_t half = count % 2 == 0 ? count / 2 : count;
        for (std::size_t j = 0; j < half; ++j) {
            const double t = 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(count);
            cs[j] = {std::cos(t), std::sin(t)};
        }
        for (std::size_t j = half; j < count; ++j) cs[j] = {-cs[j - half].first, -cs[j - half].second};
        return cs;
    };

    if (n == 2) {
        const std::size_t count = order[0];
        for (const auto& [c, s] : circle(count)) {
            rule.nodes.push_back(Point{c, s});
            rule.weights.push_back(1.0 / static_cast<double>(count));
        }
    } else if (n == 3) {
        if (order.size() != 2) throw Error(ErrorCode::invalid_config, "n=3 sphere order is {polar, azimuth}");
        const auto [t, w] = gauss_legendre(order[0]);
        const auto az = circle(order[1]);
        for (std::size_t i = 0; i < t.size(); ++i) {
            const double s = std::sqrt(std::max(0.0, 1.0 - t[i] * t[i]));
            for (const auto& [c, sn] : az) {
                rule.nodes.push_back(Point{s * c, s * sn, t[i]});
                rule.weights.push_back(0.5 * w[i] / static_cast<double>(az.size()));
            }
        }
    } else {
        rule.nodes = halton_sphere_points(n, order[0], seed);
        rule.weights.assign(rule.nodes.size(), 1.0 / static_cast<double>(rule.nodes.size()));
    }
    return rule;
}

/**
 * Ball rule with total weight omega_n. For n >= 2: Gauss-Legendre in the
 * radius on [0, 1] with the Jacobian r^{n-1} folded into the weights, times
 * the sphere rule scaled by the surface area n omega_n. For n = 1 the ball is
 * [-1, 1] and plain Gauss-Legendre is used.
 */
inline QuadratureRule ball_nodes(std::size_t n, std::size_t radial_order, std::vector<std::size_t> sphere_order = {},
                                 std::uint64_t seed = 0) {
    if (n == 0 || n > kMaxDim) throw Error(ErrorCode::unsupported_dimension, "ball rules need 1 <= n <= 8");
    QuadratureRule rule;
    rule.kind = RuleKind::ball;
    rule.dim = n;
    rule.normalization = unit_ball_volume(n);
    const auto [t, w] = gauss_legendre(radial_order);
    if (n == 1) {
        for (std::size_t i = 0; i < t.size(); ++i) {
            rule.nodes.push_back(Point{t[i]});
            rule.weights.push_back(w[i]);
            rule.direction.push_back(t[i] < 0.0 ? 0 : 1);
            rule.radius.push_back(std::abs(t[i]));
        }
        return rule;
    }
    const QuadratureRule sphere = sphere_nodes(n, std::move(sphere_order), seed);
    const double area = static_cast<double>(n) * unit_ball_volume(n);
    for (std::size_t k = 0; k < t.size(); ++k) {
        const double r = 0.5 * (t[k] + 1.0);
        const double wr = 0.5 * w[k] * std::pow(r, static_cast<double>(n - 1));
        for (std::size_t j = 0; j < sphere.size(); ++j) {
            Point v(n);
            for (std::size_t i = 0; i < n; ++i) v[i] = r * sphere.nodes[j][i];
            rule.nodes.push_back(v);
            rule.weights.push_back(wr * area * sphere.weights[j]);
            rule.direction.push_back(j);
            rule.radius.push_back(r);
        }
    }
    return rule;
}

/// Writes one line per node: index, weight, coordinates.
inline void write_rule_csv(std::ostream& os, const QuadratureRule& rule) {
    os << "index,weight";
    for (std::size_t i = 0; i < rule.dim; ++i) os << ",x" << i + 1;
    os << '\n';
    os.precision(17);
    for (std::size_t k = 0; k < rule.size(); ++k) {
        os << k << ',' << rule.weights[k];
        for (std::size_t i = 0; i < rule.dim; ++i) os << ',' << rule.nodes[k][i];
        os << '\n';
    }
}

struct Extrapolation {
    double limit = 0.0;
    double order = 1.0;
    double error = 0.0;
    /// The power-law solve was ill-conditioned and a linear fit was used.
    bool fallback = false;
};

/**
 * Fits value = L + c h^q through the last three (h, value) pairs, h strictly
 * decreasing. When the three values are flat to rounding, the increments
 * change sign, or q leaves [0.05, 12], falls back to a least-squares line in
 * h over the same points. The error estimate is the out-of-sample residual on
 * the fourth-last pair when there is one, otherwise |L - last value|, and
 * never less than the in-sample residual of the fit.
 */
inline Extrapolation extrapolate(const std::vector<std::pair<double, double>>& pairs) {
    if (pairs.size() < 3) throw Error(ErrorCode::insufficient_data, "extrapolation needs at least 3 (h, value) pairs");
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        if (!(pairs[i].first > 0.0)) throw Error(ErrorCode::invalid_config, "h values must be positive");
        if (i > 0 && !(pairs[i].first < pairs[i - 1].first))
            throw Error(ErrorCode::invalid_config, "h values must be strictly decreasing");
    }
    const std::size_t n = pairs.size();
    const auto [h1, v1] = pairs[n - 3];
    const auto [h2, v2] = pairs[n - 2];
    const auto [h3, v3] = pairs[n - 1];
    const double d1 = v1 - v2, d2 = v2 - v3;
    const double scale = std::max({std::abs(v1), std::abs(v2), std::abs(v3), 1e-300});

    Extrapolation out;
    double c = 0.0;
    bool solved = false;
    constexpr double q_lo = 0.05, q_hi = 12.0;
    if (std::max(std::abs(d1), std::abs(d2)) > 1e-12 * scale && d1 * d2 > 0.0) {
        const double ratio = d1 / d2;
        auto model_ratio = [&](double q) {
            return (std::pow(h1, q) - std::pow(h2, q)) / (std::pow(h2, q) - std::pow(h3, q));
        };
        double lo = q_lo, hi = q_hi;
        if (model_ratio(lo) <= ratio && ratio <= model_ratio(hi)) {
            for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
                const double mid = 0.5 * (lo + hi);
                (model_ratio(mid) < ratio ? lo : hi) = mid;
            }
            const double q = 0.5 * (lo + hi);
            c = d2 / (std::pow(h2, q) - std::pow(h3, q));
            out.order = q;
            out.limit = v3 - c * std::pow(h3, q);
            solved = std::isfinite(out.limit);
        }
    }
    double in_sample = 0.0;
    if (!solved) {
        out.fallback = true;
        out.order = 1.0;
        const double hm = (h1 + h2 + h3) / 3.0, vm = (v1 + v2 + v3) / 3.0;
        const double sxx = (h1 - hm) * (h1 - hm) + (h2 - hm) * (h2 - hm) + (h3 - hm) * (h3 - hm);
        const double sxy = (h1 - hm) * (v1 - vm) + (h2 - hm) * (v2 - vm) + (h3 - hm) * (v3 - vm);
        c = sxy / sxx;
        out.limit = vm - c * hm;
        if (d1 == 0.0 && d2 == 0.0) {
            c = 0.0;
            out.limit = v3;
        }
        for (const auto& [h, v] : {pairs[n - 3], pairs[n - 2], pairs[n - 1]})
            in_sample = std::max(in_sample, std::abs(out.limit + c * h - v));
    }
    if (n >= 4) {
        const auto [h0, v0] = pairs[n - 4];
        out.error = std::abs(out.limit + c * std::pow(h0, out.order) - v0);
    } else {
        out.error = std::abs(out.limit - v3);
    }
    out.error = std::max(out.error, in_sample);
    return out;
}

}  // namespace kse
