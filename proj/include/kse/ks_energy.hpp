#pragma once

/**
 * @file ks_energy.hpp
 *
 * Difference-quotient side: the approximate densities
 *
 *   e_{h,p}(x) = c_{n,p} * int_{B_1} d^p(u(x), u(x + h v)) / h^p dv,   x in Omega_h,
 *
 * their integrals over the localization region Omega_{h0}, and the h -> 0
 * limits of both the integrals and the pointwise densities.
 */

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "kse/domain_grid.hpp"
#include "kse/energy_config.hpp"
#include "kse/error.hpp"
#include "kse/map_model.hpp"
#include "kse/parallel.hpp"
#include "kse/quadrature.hpp"

namespace kse {

inline QuadratureRule make_ball_rule(std::size_t n, const EnergyConfig& cfg) {
    return ball_nodes(n, cfg.ball_radial_order, cfg.sphere_order, cfg.seed);
}

/// e_{h,p}(x) with a prebuilt ball rule; x must lie in Omega_h.
inline double approx_density(const MetricMap& map, const DomainGrid& grid, const Point& x, double h,
                             const EnergyConfig& cfg, const QuadratureRule& ball) {
    if (!(h > 0.0)) throw Error(ErrorCode::out_of_inner_domain, "h must be positive");
    if (x.size() != grid.dim() || !(grid.boundary_distance(x) > h))
        throw Error(ErrorCode::out_of_inner_domain, "point " + MetricMap::describe(x) + " is not in Omega_h");
    const auto& space = map.target();
    const std::size_t n = grid.dim();
    const Point ux = map.eval(x);
    double s = 0.0;
    Point y(n);
    for (std::size_t k = 0; k < ball.size(); ++k) {
        for (std::size_t i = 0; i < n; ++i) y[i] = x[i] + h * ball.nodes[k][i];
        s += ball.weights[k] * pow_abs(space.distance_unchecked(ux, map.evaluate(y)) / h, cfg.p);
    }
    return energy_constant(n, cfg.p) * s;
}

inline double approx_density(const MetricMap& map, const DomainGrid& grid, const Point& x, double h,
                             const EnergyConfig& cfg) {
    return approx_density(map, grid, x, h, cfg, make_ball_rule(grid.dim(), cfg));
}

struct KsResult {
    /// (h, I(h)) with I(h) = sum over Omega_{h0} nodes of e_{h,p} * weight.
    std::vector<std::pair<double, double>> per_h;
    Extrapolation extrapolation;
    /// Extrapolated limit of I(h): the energy restricted to Omega_{h0}.
    double energy = 0.0;
    InnerMask mask;
    double domain_measure = 0.0;
    /// Grid measure of Omega_{h0} (node count times weight).
    double inner_measure = 0.0;
    double sup_density = 0.0;
    /// (|Omega| - |Omega_{h0}|) * sup_density: mass the cutoff policy may miss.
    double localization_deficit = 0.0;
    /// Node-major e_{h,p} values, h_count entries per node (zero off the mask).
    std::vector<double> approx;
    /// Pointwise extrapolated density (zero off the mask).
    std::vector<double> density;
    std::size_t density_fallbacks = 0;
    bool non_monotone = false;
    std::vector<std::string> warnings;
};

namespace detail {

/// True when successive increments change sign by more than `rel_tol` of the largest value.
inline bool has_oscillation(const std::vector<std::pair<double, double>>& per_h, double rel_tol) {
    double scale = 0.0;
    for (const auto& [h, v] : per_h) scale = std::max(scale, std::abs(v));
    const double tol = rel_tol * std::max(scale, 1e-300);
    int sign = 0;
    for (std::size_t i = 1; i < per_h.size(); ++i) {
        const double d = per_h[i].second - per_h[i - 1].second;
        if (std::abs(d) <= tol) continue;
        const int s = d > 0.0 ? 1 : -1;
        if (sign != 0 && s != sign) return true;
        sign = s;
    }
    return false;
}

}  // namespace detail

inline KsResult ks_energy(const MetricMap& map, const DomainGrid& grid, const EnergyConfig& cfg) {
    cfg.validate();
    if (map.domain_dim() != grid.dim()) throw Error(ErrorCode::invalid_config, "map and domain dimensions differ");
    const auto hs = cfg.resolved_h();
    const std::size_t nh = hs.size();
    const QuadratureRule ball = make_ball_rule(grid.dim(), cfg);

    KsResult r;
    r.mask = grid.inner_mask(cfg.h0);
    r.domain_measure = grid.measure();
    r.inner_measure = grid.mask_measure(r.mask);
    r.approx.assign(grid.node_count() * nh, 0.0);
    r.density.assign(grid.node_count(), 0.0);
    if (r.mask.empty) r.warnings.push_back("empty_inner_domain");

    std::vector<std::size_t> nodes;
    for (std::size_t k = 0; k < grid.node_count(); ++k)
        if (r.mask.marked[k]) nodes.push_back(k);

    std::vector<char> fallback(grid.node_count(), 0);
    parallel_for(nodes.size(), cfg.workers, [&](std::size_t idx) {
        const std::size_t k = nodes[idx];
        const Point x = grid.node(k);
        std::vector<std::pair<double, double>> pairs(nh);
        for (std::size_t j = 0; j < nh; ++j) {
            const double e = approx_density(map, grid, x, hs[j], cfg, ball);
            r.approx[k * nh + j] = e;
            pairs[j] = {hs[j], e};
        }
        const Extrapolation ex = extrapolate(pairs);
        r.density[k] = std::max(0.0, ex.limit);
        fallback[k] = ex.fallback ? 1 : 0;
    });

    std::vector<double> terms(nodes.size());
    for (std::size_t j = 0; j < nh; ++j) {
        for (std::size_t idx = 0; idx < nodes.size(); ++idx) terms[idx] = r.approx[nodes[idx] * nh + j] * grid.weight();
        r.per_h.emplace_back(hs[j], pairwise_sum(terms));
    }
    r.extrapolation = extrapolate(r.per_h);
    r.energy = std::max(0.0, r.extrapolation.limit);

    for (std::size_t k : nodes) {
        r.sup_density = std::max(r.sup_density, r.density[k]);
        for (std::size_t j = 0; j < nh; ++j) r.sup_density = std::max(r.sup_density, r.approx[k * nh + j]);
        r.density_fallbacks += static_cast<std::size_t>(fallback[k]);
    }
    r.localization_deficit = (r.domain_measure - r.inner_measure) * r.sup_density;

    r.non_monotone = detail::has_oscillation(r.per_h, 1e-9);
    if (r.non_monotone) r.warnings.push_back("extrapolation_unreliable");
    return r;
}

/// Pointwise h -> 0 limit of e_{h,p} on Omega_{h0} (zero elsewhere).
inline std::vector<double> density_limit(const MetricMap& map, const DomainGrid& grid, const EnergyConfig& cfg) {
    return ks_energy(map, grid, cfg).density;
}

}  // namespace kse
