#pragma once

/**
 * @file directional_energy.hpp
 *
 * Directional side: the moduli
 *
 *   g_nu(x) = sup_{xi in D} |nu . grad d(u(x), xi)|,
 *   g_min(x) = sup_{xi in D} |grad d(u(x), xi)|,
 *
 * realized as maxima over a finite anchor pool, and the energies built from
 * them (sphere average, ball integral, orthonormal-frame sum).
 *
 * Anchor pool at a node x:
 *  - the first K points of the space's dense enumeration (and the next K
 *    when the truncation check is on);
 *  - ray probes u(x) + t w for a fixed set of coordinate directions w, and
 *    for each queried objective a local refinement of the best probe
 *    (Brent's method in angle when the target has two coordinates, compass
 *    search otherwise).
 * Every probe is a legitimate point of the target, so it can only bring the
 * truncated supremum closer to the true one. The probe part of the pool does
 * not depend on K, which keeps g_nu nondecreasing in K. In the field
 * computation all objectives share one pool per node, so g_nu <= g_min holds
 * exactly.
 */

#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "kse/domain_grid.hpp"
#include "kse/energy_config.hpp"
#include "kse/error.hpp"
#include "kse/map_model.hpp"
#include "kse/parallel.hpp"
#include "kse/quadrature.hpp"

namespace kse {

/// Anchors shared by every node of one computation.
class AnchorPlan {
public:
    AnchorPlan(const MetricSpace& space, std::size_t truncation, bool with_doubling, bool accelerate)
        : space_(&space), truncation_(truncation), doubled_(with_doubling), accelerate_(accelerate) {
        dense_ = space.dense_prefix(with_doubling ? 2 * truncation : truncation);
        coord_dim_ = space.point_dim();
        reach_ = space.probe_reach();
        if (!accelerate) return;
        if (coord_dim_ == 1) {
            probes_ = {Point{1.0}, Point{-1.0}};
        } else if (coord_dim_ == 2) {
            constexpr std::size_t count = 64;
            angle_step_ = 2.0 * std::numbers::pi / static_cast<double>(count);
            for (std::size_t j = 0; j < count; ++j) {
                const double a = angle_step_ * static_cast<double>(j);
                probes_.push_back(Point{std::cos(a), std::sin(a)});
                probe_angles_.push_back(a);
            }
        } else {
            for (std::size_t i = 0; i < coord_dim_; ++i) {
                for (double sign : {1.0, -1.0}) {
                    Point w(coord_dim_);
                    w[i] = sign;
                    probes_.push_back(w);
                }
            }
            for (const Point& w : halton_sphere_points(coord_dim_, 32 * coord_dim_, 0x9e3779b97f4a7c15ULL))
                probes_.push_back(w);
        }
    }

    const MetricSpace& space() const noexcept { return *space_; }
    std::size_t truncation() const noexcept { return truncation_; }
    bool doubled() const noexcept { return doubled_; }
    bool accelerate() const noexcept { return accelerate_; }
    const std::vector<Point>& dense() const noexcept { return dense_; }
    const std::vector<Point>& probes() const noexcept { return probes_; }
    const std::vector<double>& probe_angles() const noexcept { return probe_angles_; }
    double angle_step() const noexcept { return angle_step_; }
    double reach() const noexcept { return reach_; }
    std::size_t coord_dim() const noexcept { return coord_dim_; }

private:
    const MetricSpace* space_;
    std::size_t truncation_;
    bool doubled_;
    bool accelerate_;
    std::vector<Point> dense_;
    std::vector<Point> probes_;
    std::vector<double> probe_angles_;
    double angle_step_ = 0.0;
    double reach_ = 1.0;
    std::size_t coord_dim_ = 0;
};

/**
 * Gradients of x -> d(u(x), xi) at one node for every anchor in the pool.
 * Layout is anchor-major: gradient k occupies [k n, (k + 1) n).
 */
class NodeGradients {
public:
    NodeGradients(const MetricMap& map, const AnchorPlan& plan, const Point& x, double delta)
        : plan_(&plan), n_(map.domain_dim()), stencil_(make_stencil(map, x, delta)) {
        const auto& space = plan.space();
        dense_.resize(plan.dense().size() * n_);
        for (std::size_t k = 0; k < plan.dense().size(); ++k)
            stencil_gradient(space, stencil_, plan.dense()[k], &dense_[k * n_]);
        coarse_count_ = plan.probes().size();
        probe_.resize(coarse_count_ * n_);
        for (std::size_t k = 0; k < coarse_count_; ++k) probe_gradient(plan.probes()[k], &probe_[k * n_]);
    }

    std::size_t dim() const noexcept { return n_; }

    /// Adds the refined probe maximizing |nu . grad| (or |grad| when nu is empty).
    void refine(std::span<const double> nu) {
        if (coarse_count_ == 0 || plan_->coord_dim() == 1) return;
        auto objective = [&](const double* g) {
            if (nu.empty()) return norm({g, n_});
            return std::abs(dot(nu, {g, n_}));
        };
        std::size_t start = 0;
        double start_value = -1.0;
        for (std::size_t k = 0; k < coarse_count_; ++k) {
            const double v = objective(&probe_[k * n_]);
            if (v > start_value) {
                start_value = v;
                start = k;
            }
        }
        std::vector<double> best(probe_.begin() + static_cast<std::ptrdiff_t>(start * n_),
                                 probe_.begin() + static_cast<std::ptrdiff_t>((start + 1) * n_));
        double best_value = start_value;
        std::vector<double> trial(n_);
        auto consider = [&](const Point& w) {
            probe_gradient(w, trial.data());
            const double v = objective(trial.data());
            if (v > best_value) {
                best_value = v;
                best = trial;
            }
            return v;
        };

        if (plan_->coord_dim() == 2) {
            const double centre = plan_->probe_angles()[start];
            std::uintmax_t iterations = 60;
            boost::math::tools::brent_find_minima(
                [&](double t) { return -consider(Point{std::cos(t), std::sin(t)}); },
                centre - plan_->angle_step(), centre + plan_->angle_step(), 30, iterations);
        } else {
            Point w = plan_->probes()[start];
            double value = start_value;
            const std::size_t dim = plan_->coord_dim();
            for (double step = 0.25; step > 1e-9;) {
                bool moved = false;
                for (std::size_t i = 0; i < dim && !moved; ++i) {
                    for (double sign : {1.0, -1.0}) {
                        Point cand = w;
                        cand[i] += sign * step;
                        const double len = norm(cand.coords());
                        for (std::size_t j = 0; j < dim; ++j) cand[j] /= len;
                        const double v = consider(cand);
                        if (v > value) {
                            value = v;
                            w = cand;
                            moved = true;
                            break;
                        }
                    }
                }
                if (!moved) step *= 0.5;
            }
        }
        probe_.insert(probe_.end(), best.begin(), best.end());
    }

    /// max |nu . g| over the first K dense anchors and all probes.
    double sup_directional(std::span<const double> nu) const {
        const std::size_t k = plan_->truncation();
        return std::max(max_abs_dot(nu, dense_.data(), k), max_abs_dot(nu, probe_.data(), probe_.size() / n_));
    }

    /// Same, over the next K dense anchors only (truncation check).
    double sup_directional_extra(std::span<const double> nu) const {
        if (!plan_->doubled()) return 0.0;
        const std::size_t k = plan_->truncation();
        return max_abs_dot(nu, dense_.data() + k * n_, dense_.size() / n_ - k);
    }

    double sup_norm(bool include_extra) const {
        const std::size_t k = include_extra ? dense_.size() / n_ : plan_->truncation();
        double best = 0.0;
        for (std::size_t a = 0; a < k; ++a) best = std::max(best, norm({&dense_[a * n_], n_}));
        for (std::size_t a = 0; a < probe_.size() / n_; ++a) best = std::max(best, norm({&probe_[a * n_], n_}));
        return best;
    }

private:
    void probe_gradient(const Point& w, double* out) const {
        Point anchor = stencil_.center;
        for (std::size_t i = 0; i < plan_->coord_dim(); ++i) anchor[i] += plan_->reach() * w[i];
        stencil_gradient(plan_->space(), stencil_, anchor, out);
    }

    double max_abs_dot(std::span<const double> nu, const double* g, std::size_t count) const {
        if (n_ == 2) {
            // four independent running maxima so the loop pipelines
            const double a = nu[0], b = nu[1];
            double m0 = 0.0, m1 = 0.0, m2 = 0.0, m3 = 0.0;
            std::size_t k = 0;
            for (; k + 4 <= count; k += 4) {
                const double v0 = std::abs(a * g[2 * k] + b * g[2 * k + 1]);
                const double v1 = std::abs(a * g[2 * k + 2] + b * g[2 * k + 3]);
                const double v2 = std::abs(a * g[2 * k + 4] + b * g[2 * k + 5]);
                const double v3 = std::abs(a * g[2 * k + 6] + b * g[2 * k + 7]);
                m0 = v0 > m0 ? v0 : m0;
                m1 = v1 > m1 ? v1 : m1;
                m2 = v2 > m2 ? v2 : m2;
                m3 = v3 > m3 ? v3 : m3;
            }
            for (; k < count; ++k) {
                const double v = std::abs(a * g[2 * k] + b * g[2 * k + 1]);
                m0 = v > m0 ? v : m0;
            }
            return std::max(std::max(m0, m1), std::max(m2, m3));
        }
        double best = 0.0;
        for (std::size_t k = 0; k < count; ++k) best = std::max(best, std::abs(dot(nu, {g + k * n_, n_})));
        return best;
    }

    const AnchorPlan* plan_;
    std::size_t n_;
    Stencil stencil_;
    std::vector<double> dense_;
    std::vector<double> probe_;
    std::size_t coarse_count_ = 0;
};

namespace detail {

inline void check_unit(std::span<const double> nu, std::size_t n) {
    if (nu.size() != n) throw Error(ErrorCode::invalid_direction, "direction has wrong dimension");
    if (std::abs(norm(nu) - 1.0) > 1e-12) throw Error(ErrorCode::invalid_direction, "direction must be a unit vector");
}

inline void check_map_grid(const MetricMap& map, const DomainGrid& grid) {
    if (map.domain_dim() != grid.dim()) throw Error(ErrorCode::invalid_config, "map and domain dimensions differ");
}

}  // namespace detail

/// g_nu(x) with anchors: first K dense points plus probes refined for nu.
inline double directional_derivative(const MetricMap& map, const DomainGrid& grid, const Point& x,
                                     std::span<const double> nu, const EnergyConfig& cfg) {
    detail::check_map_grid(map, grid);
    detail::check_unit(nu, grid.dim());
    const double delta = cfg.resolved_delta(grid);
    check_stencil(grid, cfg.margin(grid), x, delta);
    const AnchorPlan plan(map.target(), cfg.dense_truncation, false, cfg.accelerate);
    NodeGradients node(map, plan, x, delta);
    node.refine(nu);
    return node.sup_directional(nu);
}

/// |d_v u|(x) = |v| g_{v/|v|}(x).
inline double directional_vector(const MetricMap& map, const DomainGrid& grid, const Point& x,
                                 std::span<const double> v, const EnergyConfig& cfg) {
    const double len = norm(v);
    if (!(len > 0.0)) throw Error(ErrorCode::invalid_direction, "direction vector must be nonzero");
    Point unit(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) unit[i] = v[i] / len;
    return len * directional_derivative(map, grid, x, unit.coords(), cfg);
}

/// g_min(x) with anchors: first K dense points plus probes refined for |grad|.
inline double minimal_gradient(const MetricMap& map, const DomainGrid& grid, const Point& x,
                               const EnergyConfig& cfg) {
    detail::check_map_grid(map, grid);
    const double delta = cfg.resolved_delta(grid);
    check_stencil(grid, cfg.margin(grid), x, delta);
    const AnchorPlan plan(map.target(), cfg.dense_truncation, false, cfg.accelerate);
    NodeGradients node(map, plan, x, delta);
    node.refine({});
    return node.sup_norm(false);
}

/// g_nu for every (node, direction) pair, plus g_min, from one shared pool per node.
struct DirectionalField {
    const DomainGrid* grid = nullptr;
    std::vector<Point> directions;
    std::size_t truncation = 0;
    double delta = 0.0;
    bool accelerate = true;
    /// Node-major: values[node * directions.size() + j].
    std::vector<double> values;
    /// Same layout with 2K dense anchors; empty unless the truncation check ran.
    std::vector<double> values_doubled;
    std::vector<double> min_gradient;

    std::size_t direction_count() const noexcept { return directions.size(); }
    double at(std::size_t node, std::size_t j) const { return values[node * directions.size() + j]; }
};

inline DirectionalField directional_field(const MetricMap& map, const DomainGrid& grid, const EnergyConfig& cfg,
                                          std::vector<Point> directions, bool with_doubling) {
    cfg.validate();
    detail::check_map_grid(map, grid);
    for (const Point& d : directions) detail::check_unit(d.coords(), grid.dim());
    DirectionalField f;
    f.grid = &grid;
    f.directions = std::move(directions);
    f.truncation = cfg.dense_truncation;
    f.delta = cfg.resolved_delta(grid);
    f.accelerate = cfg.accelerate;
    const std::size_t nd = f.directions.size();
    f.values.assign(grid.node_count() * nd, 0.0);
    if (with_doubling) f.values_doubled.assign(grid.node_count() * nd, 0.0);
    f.min_gradient.assign(grid.node_count(), 0.0);

    const AnchorPlan plan(map.target(), cfg.dense_truncation, with_doubling, cfg.accelerate);
    const double margin = cfg.margin(grid);
    // |(-nu) . g| == |nu . g| exactly, so an exactly negated direction needs no refinement of its own
    std::vector<char> refine_needed(nd, 1);
    for (std::size_t j = 0; j < nd; ++j) {
        for (std::size_t i = 0; i < j && refine_needed[j]; ++i) {
            bool opposite = true;
            for (std::size_t c = 0; c < grid.dim(); ++c) opposite = opposite && f.directions[i][c] == -f.directions[j][c];
            if (opposite || f.directions[i] == f.directions[j]) refine_needed[j] = 0;
        }
    }
    parallel_for(grid.node_count(), cfg.workers, [&](std::size_t k) {
        const Point x = grid.node(k);
        check_stencil(grid, margin, x, f.delta);
        NodeGradients node(map, plan, x, f.delta);
        for (std::size_t j = 0; j < nd; ++j)
            if (refine_needed[j]) node.refine(f.directions[j].coords());
        node.refine({});
        for (std::size_t j = 0; j < nd; ++j) {
            const double g = node.sup_directional(f.directions[j].coords());
            f.values[k * nd + j] = g;
            if (with_doubling)
                f.values_doubled[k * nd + j] = std::max(g, node.sup_directional_extra(f.directions[j].coords()));
        }
        f.min_gradient[k] = node.sup_norm(false);
    });
    return f;
}

/// Per-node densities and integrals of the directional energies.
struct RepResult {
    /// Integral over all of Omega.
    double energy = 0.0;
    /// Integral over the localization region Omega_{h0}.
    double energy_inner = 0.0;
    std::vector<double> density;
    /// Truncation check (2K dense anchors); zero when it did not run.
    double energy_inner_doubled = 0.0;
    double truncation_change = 0.0;
    bool under_truncated = false;
};

struct Representation {
    DirectionalField field;
    QuadratureRule sphere;
    QuadratureRule ball;
    InnerMask mask;
    RepResult sphere_form;
    RepResult ball_form;
    RepResult frame_sum;
};

namespace detail {

inline RepResult integrate_density(const DomainGrid& grid, const InnerMask& mask, std::vector<double> density,
                                   const std::vector<double>& doubled) {
    RepResult r;
    std::vector<double> all(grid.node_count()), inner(grid.node_count(), 0.0);
    for (std::size_t k = 0; k < grid.node_count(); ++k) {
        all[k] = density[k] * grid.weight();
        if (mask.marked[k]) inner[k] = all[k];
    }
    r.energy = pairwise_sum(all);
    r.energy_inner = pairwise_sum(inner);
    if (!doubled.empty()) {
        for (std::size_t k = 0; k < grid.node_count(); ++k) inner[k] = mask.marked[k] ? doubled[k] * grid.weight() : 0.0;
        r.energy_inner_doubled = pairwise_sum(inner);
        const double ref = std::max(std::abs(r.energy_inner), 1e-300);
        r.truncation_change = std::abs(r.energy_inner_doubled - r.energy_inner) / ref;
        r.under_truncated = r.energy_inner > 0.0 && r.truncation_change > 1e-3;
    }
    r.density = std::move(density);
    return r;
}

}  // namespace detail

/**
 * Computes the directional field on the sphere-rule directions and the axis
 * directions, then the three energies:
 *  - sphere form: average of g_nu^p over the normalized sphere rule;
 *  - ball form: c_{n,p} * sum over ball nodes of (|v| g_{v/|v|})^p;
 *  - frame sum: sum_i g_{e_i}^p.
 */
inline Representation representation(const MetricMap& map, const DomainGrid& grid, const EnergyConfig& cfg) {
    cfg.validate();
    const std::size_t n = grid.dim();
    Representation rep;
    rep.sphere = sphere_nodes(n, cfg.sphere_order, cfg.seed);
    rep.ball = ball_nodes(n, cfg.ball_radial_order, cfg.sphere_order, cfg.seed);
    rep.mask = grid.inner_mask(cfg.h0);
    std::vector<Point> dirs = rep.sphere.nodes;
    for (std::size_t i = 0; i < n; ++i) {
        Point e(n);
        e[i] = 1.0;
        dirs.push_back(e);
    }
    rep.field = directional_field(map, grid, cfg, std::move(dirs), cfg.truncation_check);
    const auto& f = rep.field;
    const std::size_t ns = rep.sphere.size(), nd = f.direction_count();
    const double cnp = energy_constant(n, cfg.p);

    auto densities = [&](const std::vector<double>& values) {
        std::vector<double> sphere(grid.node_count()), ball(grid.node_count()), frame(grid.node_count());
        std::vector<double> tmp_s(ns), tmp_b(rep.ball.size()), tmp_f(n);
        for (std::size_t k = 0; k < grid.node_count(); ++k) {
            const double* g = &values[k * nd];
            for (std::size_t j = 0; j < ns; ++j) tmp_s[j] = rep.sphere.weights[j] * pow_abs(g[j], cfg.p);
            sphere[k] = pairwise_sum(tmp_s);
            for (std::size_t b = 0; b < rep.ball.size(); ++b)
                tmp_b[b] = rep.ball.weights[b] * pow_abs(rep.ball.radius[b] * g[rep.ball.direction[b]], cfg.p);
            ball[k] = cnp * pairwise_sum(tmp_b);
            for (std::size_t i = 0; i < n; ++i) tmp_f[i] = pow_abs(g[ns + i], cfg.p);
            frame[k] = pairwise_sum(tmp_f);
        }
        return std::array<std::vector<double>, 3>{std::move(sphere), std::move(ball), std::move(frame)};
    };

    auto base = densities(f.values);
    std::array<std::vector<double>, 3> doubled;
    if (!f.values_doubled.empty()) doubled = densities(f.values_doubled);
    rep.sphere_form = detail::integrate_density(grid, rep.mask, std::move(base[0]), doubled[0]);
    rep.ball_form = detail::integrate_density(grid, rep.mask, std::move(base[1]), doubled[1]);
    rep.frame_sum = detail::integrate_density(grid, rep.mask, std::move(base[2]), doubled[2]);
    return rep;
}

inline RepResult rep_energy_sphere(const MetricMap& map, const DomainGrid& grid, const EnergyConfig& cfg) {
    return representation(map, grid, cfg).sphere_form;
}

inline RepResult rep_energy_ball(const MetricMap& map, const DomainGrid& grid, const EnergyConfig& cfg) {
    return representation(map, grid, cfg).ball_form;
}

/// Integral over Omega of sum_i g_{e_i}^p.
inline double frame_sum_energy(const MetricMap& map, const DomainGrid& grid, const EnergyConfig& cfg) {
    const std::size_t n = grid.dim();
    std::vector<Point> axes;
    for (std::size_t i = 0; i < n; ++i) {
        Point e(n);
        e[i] = 1.0;
        axes.push_back(e);
    }
    const DirectionalField f = directional_field(map, grid, cfg, std::move(axes), false);
    std::vector<double> terms(grid.node_count());
    for (std::size_t k = 0; k < grid.node_count(); ++k) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += pow_abs(f.at(k, i), cfg.p);
        terms[k] = s * grid.weight();
    }
    return pairwise_sum(terms);
}

struct IncrementBound {
    double lhs = 0.0;
    double rhs = 0.0;
    double tolerance = 1e-3;
    bool holds = false;
};

/**
 * Both sides of
 *   int_{Omega_h} d^p(u(x + h v), u(x)) dx <= h^p int_Omega |d_v u|^p dx
 * by grid quadrature; holds when lhs <= rhs (1 + tolerance).
 */
inline IncrementBound check_increment_bound(const MetricMap& map, const DomainGrid& grid, std::span<const double> v,
                                            double h, const EnergyConfig& cfg, double tolerance = 1e-3) {
    detail::check_map_grid(map, grid);
    if (v.size() != grid.dim()) throw Error(ErrorCode::invalid_direction, "increment vector has wrong dimension");
    const double len = norm(v);
    if (len > 1.0 + 1e-12) throw Error(ErrorCode::invalid_direction, "increment vector must lie in the unit ball");
    if (!(h > 0.0)) throw Error(ErrorCode::invalid_config, "h must be positive");
    IncrementBound out;
    out.tolerance = tolerance;
    const InnerMask mask = grid.inner_mask(h);
    const auto& space = map.target();
    std::vector<double> lhs(grid.node_count(), 0.0), rhs(grid.node_count(), 0.0);
    for (std::size_t k = 0; k < grid.node_count(); ++k) {
        if (!mask.marked[k]) continue;
        const Point x = grid.node(k);
        Point y = x;
        for (std::size_t i = 0; i < x.size(); ++i) y[i] += h * v[i];
        lhs[k] = pow_abs(space.distance(map.eval(x), map.eval(y)), cfg.p) * grid.weight();
    }
    if (len > 0.0) {
        Point unit(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) unit[i] = v[i] / len;
        const DirectionalField f = directional_field(map, grid, cfg, {unit}, false);
        for (std::size_t k = 0; k < grid.node_count(); ++k)
            rhs[k] = pow_abs(h * len * f.at(k, 0), cfg.p) * grid.weight();
    }
    out.lhs = pairwise_sum(lhs);
    out.rhs = pairwise_sum(rhs);
    out.holds = out.lhs <= out.rhs * (1.0 + tolerance);
    return out;
}

}  // namespace kse
