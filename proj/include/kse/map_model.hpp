#pragma once

/**
 * @file map_model.hpp
 *
 * Maps u from a box in R^n into a target metric space, the composed scalar
 * fields x -> d(u(x), xi) and their central-difference gradients. Maps are
 * evaluated analytically everywhere; the grid only fixes where fields are
 * cached.
 */

#include <charconv>
#include <cmath>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "kse/domain_grid.hpp"
#include "kse/error.hpp"
#include "kse/metric_space.hpp"
#include "kse/point.hpp"

namespace kse {

class MetricMap {
public:
    MetricMap(SpaceHandle target, std::size_t domain_dim, std::string label)
        : target_(std::move(target)), domain_dim_(domain_dim), label_(std::move(label)) {
        if (!target_) throw Error(ErrorCode::invalid_config, "map without target space");
        if (domain_dim_ == 0 || domain_dim_ > kMaxDim)
            throw Error(ErrorCode::invalid_config, "domain dimension must be in [1, 8]");
    }
    virtual ~MetricMap() = default;

    /// u(x) without validation; x must have domain_dim() coordinates.
    virtual Point evaluate(const Point& x) const noexcept = 0;

    /// Row-major Jacobian (point_dim x n) for maps that are affine in coordinates.
    virtual std::optional<std::vector<double>> jacobian() const { return std::nullopt; }

    const MetricSpace& target() const noexcept { return *target_; }
    const SpaceHandle& target_handle() const noexcept { return target_; }
    std::size_t domain_dim() const noexcept { return domain_dim_; }
    const std::string& label() const noexcept { return label_; }

    /// Validated evaluation; failures carry the offending x.
    Point eval(const Point& x) const {
        if (x.size() != domain_dim_) {
            throw Error(ErrorCode::map_evaluation, "map '" + label_ + "' expects " + std::to_string(domain_dim_) +
                                                       " coordinates, got " + std::to_string(x.size()));
        }
        Point y = evaluate(x);
        for (double c : y.coords()) {
            if (!std::isfinite(c)) throw Error(ErrorCode::map_evaluation, "map '" + label_ + "' failed at " + describe(x));
        }
        return y;
    }

    /// Shortest round-trip text of each coordinate.
    static std::string describe(const Point& x) {
        std::string out = "(";
        char buf[32];
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (i) out += ", ";
            const auto res = std::to_chars(buf, buf + sizeof buf, x[i]);
            out.append(buf, res.ptr);
        }
        return out + ")";
    }

private:
    SpaceHandle target_;
    std::size_t domain_dim_;
    std::string label_;
};

using MapHandle = std::shared_ptr<const MetricMap>;

/// u(x) = x into euclidean(n) or, for n = 2, the max-norm plane.
class IdentityMap final : public MetricMap {
public:
    IdentityMap(SpaceHandle target, std::size_t n) : MetricMap(std::move(target), n, "identity") {
        const auto kind = this->target().kind();
        if ((kind != SpaceKind::euclidean && kind != SpaceKind::max_norm_plane) || this->target().point_dim() != n)
            throw Error(ErrorCode::invalid_config, "identity needs a euclidean:n or max_norm_plane target matching the domain");
    }
    Point evaluate(const Point& x) const noexcept override { return x; }
    std::optional<std::vector<double>> jacobian() const override {
        const std::size_t n = domain_dim();
        std::vector<double> a(n * n, 0.0);
        for (std::size_t i = 0; i < n; ++i) a[i * n + i] = 1.0;
        return a;
    }
};

class ConstantMap final : public MetricMap {
public:
    ConstantMap(SpaceHandle target, std::size_t n, Point value)
        : MetricMap(std::move(target), n, "constant"), value_(value) {
        this->target().check_point(value_);
    }
    Point evaluate(const Point&) const noexcept override { return value_; }
    std::optional<std::vector<double>> jacobian() const override {
        return std::vector<double>(target().point_dim() * domain_dim(), 0.0);
    }

private:
    Point value_;
};

/// u(x) = A x with A given row-major (m x n); target euclidean(m) or the max-norm plane.
class LinearMap final : public MetricMap {
public:
    LinearMap(SpaceHandle target, std::size_t n, std::vector<double> a)
        : MetricMap(std::move(target), n, "linear"), a_(std::move(a)) {
        const auto kind = this->target().kind();
        if (kind != SpaceKind::euclidean && kind != SpaceKind::max_norm_plane)
            throw Error(ErrorCode::invalid_config, "linear maps need a euclidean or max_norm_plane target");
        if (a_.size() != this->target().point_dim() * n)
            throw Error(ErrorCode::invalid_config, "linear map matrix must have " +
                                                       std::to_string(this->target().point_dim() * n) + " entries");
    }
    Point evaluate(const Point& x) const noexcept override {
        const std::size_t m = target().point_dim(), n = domain_dim();
        Point y(m);
        for (std::size_t r = 0; r < m; ++r) {
            double s = 0.0;
            for (std::size_t c = 0; c < n; ++c) s += a_[r * n + c] * x[c];
            y[r] = s;
        }
        return y;
    }
    std::optional<std::vector<double>> jacobian() const override { return a_; }

private:
    std::vector<double> a_;
};

/// Angle k x_1 on the circle.
class WindingMap final : public MetricMap {
public:
    WindingMap(SpaceHandle target, std::size_t n, double k) : MetricMap(std::move(target), n, "winding"), k_(k) {
        if (this->target().kind() != SpaceKind::circle) throw Error(ErrorCode::invalid_config, "winding maps need the circle target");
    }
    Point evaluate(const Point& x) const noexcept override { return Point{k_ * x[0]}; }
    std::optional<std::vector<double>> jacobian() const override {
        std::vector<double> a(domain_dim(), 0.0);
        a[0] = k_;
        return a;
    }
    double winding() const noexcept { return k_; }

private:
    double k_;
};

/**
 * Two-sheeted map into q:2:1, u(x) = {x_1 - 1/2, 2 (x_2 - 1/2)}. The sheets
 * cross along the line x_1 - 1/2 = 2 (x_2 - 1/2); away from it the map is
 * locally a pair of affine functions with gradients e_1 and 2 e_2.
 */
class QSplitMap final : public MetricMap {
public:
    QSplitMap(SpaceHandle target, std::size_t n) : MetricMap(std::move(target), n, "qsplit") {
        const auto* q = dynamic_cast<const QPointsSpace*>(&this->target());
        if (q == nullptr || q->sheets() != 2 || q->sheet_dim() != 1)
            throw Error(ErrorCode::invalid_config, "qsplit needs the q:2:1 target");
        if (n < 2) throw Error(ErrorCode::invalid_config, "qsplit needs a domain of dimension >= 2");
    }
    Point evaluate(const Point& x) const noexcept override { return Point{x[0] - 0.5, 2.0 * (x[1] - 0.5)}; }
};

namespace detail {

inline std::vector<double> parse_reals(std::string_view text, char sep) {
    std::vector<double> out;
    std::string item;
    std::istringstream is{std::string(text)};
    while (std::getline(is, item, sep)) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw Error(ErrorCode::invalid_config, "bad number '" + item + "'");
        }
    }
    return out;
}

}  // namespace detail

/**
 * Catalog lookup: "identity", "constant" (the first dense point),
 * "constant:c1,c2,...", "linear:a11,a12;a21,a22" (rows separated by ';'),
 * "winding:k", "qsplit".
 */
inline MapHandle parse_map(std::string_view spec, SpaceHandle target, std::size_t n) {
    if (spec == "identity") return std::make_shared<IdentityMap>(std::move(target), n);
    if (spec == "qsplit") return std::make_shared<QSplitMap>(std::move(target), n);
    if (spec == "constant") {
        const Point origin = target->dense_point(0);
        return std::make_shared<ConstantMap>(std::move(target), n, origin);
    }
    if (spec.starts_with("constant:")) {
        const auto values = detail::parse_reals(spec.substr(9), ',');
        if (values.size() > kMaxDim) throw Error(ErrorCode::invalid_config, "constant value too long");
        return std::make_shared<ConstantMap>(std::move(target), n, Point(std::span<const double>(values)));
    }
    if (spec.starts_with("winding:")) {
        const auto values = detail::parse_reals(spec.substr(8), ',');
        if (values.size() != 1) throw Error(ErrorCode::invalid_config, "winding:k takes one number");
        return std::make_shared<WindingMap>(std::move(target), n, values[0]);
    }
    if (spec.starts_with("linear:")) {
        std::vector<double> a;
        std::size_t cols = 0;
        std::istringstream rows{std::string(spec.substr(7))};
        std::string row;
        while (std::getline(rows, row, ';')) {
            const auto values = detail::parse_reals(row, ',');
            if (cols == 0) cols = values.size();
            if (values.size() != cols || cols != n)
                throw Error(ErrorCode::invalid_config, "linear map rows must have " + std::to_string(n) + " entries");
            a.insert(a.end(), values.begin(), values.end());
        }
        return std::make_shared<LinearMap>(std::move(target), n, std::move(a));
    }
    throw Error(ErrorCode::invalid_config, "unknown map '" + std::string(spec) + "'");
}

/// Values of u at x and at x +- delta e_i, shared by all anchors at one node.
struct Stencil {
    std::size_t n = 0;
    double delta = 0.0;
    Point center;
    std::array<Point, kMaxDim> plus{};
    std::array<Point, kMaxDim> minus{};
};

/// Throws stencil_out_of_range unless every x +- delta e_i lies in the box grown by `margin`.
inline void check_stencil(const DomainGrid& grid, double margin, const Point& x, double delta) {
    if (!(delta > 0.0)) throw Error(ErrorCode::stencil_out_of_range, "finite-difference step must be positive");
    if (x.size() != grid.dim()) throw Error(ErrorCode::stencil_out_of_range, "stencil point has wrong dimension");
    for (std::size_t i = 0; i < grid.dim(); ++i) {
        if (x[i] - delta < grid.lower()[i] - margin || x[i] + delta > grid.upper()[i] + margin) {
            throw Error(ErrorCode::stencil_out_of_range,
                        "stencil at " + MetricMap::describe(x) + " with step " + std::to_string(delta) +
                            " leaves the evaluable region");
        }
    }
}

inline Stencil make_stencil(const MetricMap& map, const Point& x, double delta) {
    Stencil s;
    s.n = map.domain_dim();
    s.delta = delta;
    s.center = map.eval(x);
    for (std::size_t i = 0; i < s.n; ++i) {
        Point xp = x, xm = x;
        xp[i] += delta;
        xm[i] -= delta;
        s.plus[i] = map.eval(xp);
        s.minus[i] = map.eval(xm);
    }
    return s;
}

/// Central differences of x -> d(u(x), anchor) from a prepared stencil.
inline void stencil_gradient(const MetricSpace& space, const Stencil& s, const Point& anchor, double* out) noexcept {
    const double inv = 1.0 / (2.0 * s.delta);
    for (std::size_t i = 0; i < s.n; ++i)
        out[i] = (space.distance_unchecked(s.plus[i], anchor) - space.distance_unchecked(s.minus[i], anchor)) * inv;
}

/// x -> d(u(x), anchor), cached at the grid nodes.
class ComposedField {
public:
    ComposedField(MapHandle map, Point anchor, const DomainGrid& grid, double margin)
        : map_(std::move(map)), anchor_(anchor), grid_(&grid), margin_(margin) {
        map_->target().check_point(anchor_);
        values_.resize(grid.node_count());
        for (std::size_t k = 0; k < grid.node_count(); ++k) values_[k] = (*this)(grid.node(k));
    }

    double operator()(const Point& x) const { return map_->target().distance_unchecked(map_->eval(x), anchor_); }

    const MetricMap& map() const noexcept { return *map_; }
    const Point& anchor() const noexcept { return anchor_; }
    const DomainGrid& grid() const noexcept { return *grid_; }
    double margin() const noexcept { return margin_; }
    const std::vector<double>& values() const noexcept { return values_; }

private:
    MapHandle map_;
    Point anchor_;
    const DomainGrid* grid_;
    double margin_;
    std::vector<double> values_;
};

/// Caches d(u(.), anchor) on the grid. `margin` widens the evaluable box for stencils.
inline ComposedField compose_distance(MapHandle map, const Point& anchor, const DomainGrid& grid, double margin = 0.0) {
    return ComposedField(std::move(map), anchor, grid, margin);
}

/// (f(x + delta e_i) - f(x - delta e_i)) / (2 delta), evaluating the map directly.
inline Point fd_gradient(const ComposedField& field, const Point& x, double delta) {
    check_stencil(field.grid(), field.margin(), x, delta);
    const Stencil s = make_stencil(field.map(), x, delta);
    Point g(s.n);
    stencil_gradient(field.map().target(), s, field.anchor(), g.coords().data());
    return g;
}

/**
 * sup over the first `count` dense anchors of |d(u(x), xi) - d(u(y), xi)|.
 * Never exceeds d(u(x), u(y)) and grows with `count`.
 */
inline double anchor_sup_difference(const MetricMap& map, const Point& x, const Point& y, std::size_t count) {
    const Point ux = map.eval(x), uy = map.eval(y);
    const auto& space = map.target();
    double best = 0.0;
    for (const Point& xi : space.dense_prefix(count))
        best = std::max(best, std::abs(space.distance_unchecked(ux, xi) - space.distance_unchecked(uy, xi)));
    return best;
}

}  // namespace kse
