#pragma once

/**
 * @file metric_space.hpp
 *
 * Target metric spaces: a distance, an enumerated countable dense subset and
 * a bounded sampler used by the axiom checks. Points are fixed-length real
 * coordinate vectors; each space decides how coordinates are interpreted.
 */

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <numbers>
#include <numeric>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "kse/error.hpp"
#include "kse/point.hpp"

namespace kse {

enum class SpaceKind { euclidean, max_norm_plane, circle, q_points };

class MetricSpace {
public:
    virtual ~MetricSpace() = default;

    virtual SpaceKind kind() const noexcept = 0;

    /// Number of real coordinates in a point of this space.
    virtual std::size_t point_dim() const noexcept = 0;

    /// Canonical spec string, parseable by parse_space().
    virtual std::string name() const = 0;

    /// Distance without argument validation; used in the hot loops.
    virtual double distance_unchecked(const Point& a, const Point& b) const noexcept = 0;

    /// First `count` points of the dense enumeration.
    virtual std::vector<Point> dense_prefix(std::size_t count) const = 0;

    /// Draws a point from the documented bounded sampler.
    virtual Point sample_point(std::mt19937_64& rng) const = 0;

    /**
     * Offset used when probing anchors along coordinate rays u(x) + t w.
     * Large for flat spaces (distance gradients then only depend on the
     * direction), below pi for the circle so that the probe stays on the
     * short arc.
     */
    virtual double probe_reach() const noexcept = 0;

    double distance(const Point& a, const Point& b) const {
        check_point(a);
        check_point(b);
        return distance_unchecked(a, b);
    }

    Point dense_point(std::size_t k) const { return dense_prefix(k + 1).back(); }

    void check_point(const Point& a) const {
        if (a.size() != point_dim()) {
            throw Error(ErrorCode::invalid_point, "point of dimension " + std::to_string(a.size()) +
                                                      " given to space " + name() + " (expects " +
                                                      std::to_string(point_dim()) + ")");
        }
        for (double c : a.coords()) {
            if (!std::isfinite(c)) throw Error(ErrorCode::invalid_point, "non-finite coordinate for " + name());
        }
    }
};

using SpaceHandle = std::shared_ptr<const MetricSpace>;

namespace detail {

/**
 * Nested dyadic lattices in R^dim. Stage s holds the points j / 2^s with
 * |j_i| <= (s + 1) 2^s, i.e. spacing 2^-s on the box [-(s+1), s+1]^dim.
 * Every stage contains the previous one, and the enumeration lists the new
 * points of each stage ordered outward by max-norm, then lexicographically.
 * When `multiset_blocks` > 1 only tuples whose blocks are sorted are kept, so
 * each unordered multiset appears once.
 */
inline std::vector<Point> dyadic_prefix(std::size_t dim, std::size_t count, std::size_t multiset_blocks = 1) {
    std::vector<Point> out;
    out.reserve(count);
    const std::size_t block = multiset_blocks > 1 ? dim / multiset_blocks : dim;

    auto canonical = [&](const std::vector<std::int64_t>& j) {
        if (multiset_blocks <= 1) return true;
        for (std::size_t q = 0; q + 1 < multiset_blocks; ++q) {
            auto a = j.begin() + static_cast<std::ptrdiff_t>(q * block);
            auto b = a + static_cast<std::ptrdiff_t>(block);
            if (std::lexicographical_compare(b, b + static_cast<std::ptrdiff_t>(block), a, a + static_cast<std::ptrdiff_t>(block)))
                return false;
        }
        return true;
    };

    for (int s = 0; out.size() < count; ++s) {
        if (s > 30) throw Error(ErrorCode::invalid_config, "dense prefix too long");
        const std::int64_t scale = std::int64_t{1} << s;
        const std::int64_t reach = (s + 1) * scale;
        const std::int64_t prev_reach = s * scale;  // previous stage in units of 2^-s
        std::vector<std::vector<std::int64_t>> fresh;
        std::vector<std::int64_t> j(dim, -reach);
        while (true) {
            bool is_old = s > 0;
            if (is_old) {
                for (auto c : j) {
                    if ((c % 2) != 0 || std::abs(c) > prev_reach) {
                        is_old = false;
                        break;
                    }
                }
            }
            if (!is_old && canonical(j)) fresh.push_back(j);
            std::size_t i = 0;
            while (i < dim && j[i] == reach) {
                j[i] = -reach;
                ++i;
            }
            if (i == dim) break;
            ++j[i];
        }
        auto shell = [](const std::vector<std::int64_t>& v) {
            std::int64_t m = 0;
            for (auto c : v) m = std::max(m, std::abs(c));
            return m;
        };
        std::sort(fresh.begin(), fresh.end(), [&](const auto& a, const auto& b) {
            const auto sa = shell(a), sb = shell(b);
            if (sa != sb) return sa < sb;
            return a < b;
        });
        for (const auto& v : fresh) {
            if (out.size() == count) break;
            Point p(dim);
            for (std::size_t i = 0; i < dim; ++i) p[i] = static_cast<double>(v[i]) / static_cast<double>(scale);
            out.push_back(p);
        }
    }
    return out;
}

inline Point uniform_box_point(std::size_t dim, double half_width, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unif(-half_width, half_width);
    Point p(dim);
    for (std::size_t i = 0; i < dim; ++i) p[i] = unif(rng);
    return p;
}

}  // namespace detail

class EuclideanSpace final : public MetricSpace {
public:
    explicit EuclideanSpace(std::size_t m) : m_(m) {
        if (m == 0 || m > kMaxDim) throw Error(ErrorCode::invalid_config, "euclidean dimension must be in [1, 8]");
    }

    SpaceKind kind() const noexcept override { return SpaceKind::euclidean; }
    std::size_t point_dim() const noexcept override { return m_; }
    std::string name() const override { return "euclidean:" + std::to_string(m_); }

    double distance_unchecked(const Point& a, const Point& b) const noexcept override {
        double s = 0.0;
        for (std::size_t i = 0; i < m_; ++i) {
            const double d = a[i] - b[i];
            s += d * d;
        }
        return std::sqrt(s);
    }

    std::vector<Point> dense_prefix(std::size_t count) const override { return detail::dyadic_prefix(m_, count); }
    Point sample_point(std::mt19937_64& rng) const override { return detail::uniform_box_point(m_, 2.0, rng); }
    double probe_reach() const noexcept override { return 100.0; }

private:
    std::size_t m_;
};

/// R^2 with the distance induced by the maximum norm.
class MaxNormPlane final : public MetricSpace {
public:
    SpaceKind kind() const noexcept override { return SpaceKind::max_norm_plane; }
    std::size_t point_dim() const noexcept override { return 2; }
    std::string name() const override { return "max_norm_plane"; }

    double distance_unchecked(const Point& a, const Point& b) const noexcept override {
        return std::max(std::abs(a[0] - b[0]), std::abs(a[1] - b[1]));
    }

    std::vector<Point> dense_prefix(std::size_t count) const override { return detail::dyadic_prefix(2, count); }
    Point sample_point(std::mt19937_64& rng) const override { return detail::uniform_box_point(2, 2.0, rng); }
    double probe_reach() const noexcept override { return 100.0; }
};

/// Unit circle with geodesic (arc length) distance; a point is an angle.
class CircleSpace final : public MetricSpace {
public:
    SpaceKind kind() const noexcept override { return SpaceKind::circle; }
    std::size_t point_dim() const noexcept override { return 1; }
    std::string name() const override { return "circle"; }

    double distance_unchecked(const Point& a, const Point& b) const noexcept override {
        constexpr double two_pi = 2.0 * std::numbers::pi;
        const double diff = std::fmod(std::abs(a[0] - b[0]), two_pi);
        return std::min(diff, two_pi - diff);
    }

    /// 0, pi, pi/2, 3pi/2, pi/4, 3pi/4, ...: odd multiples of 2pi/2^l, level by level.
    std::vector<Point> dense_prefix(std::size_t count) const override {
        std::vector<Point> out;
        out.reserve(count);
        for (std::size_t k = 0; k < count; ++k) {
            if (k == 0) {
                out.push_back(Point{0.0});
                continue;
            }
            const int level = std::bit_width(k);  // k in [2^(level-1), 2^level)
            const std::size_t odd = 2 * (k - (std::size_t{1} << (level - 1))) + 1;
            out.push_back(Point{2.0 * std::numbers::pi * static_cast<double>(odd) / std::ldexp(1.0, level)});
        }
        return out;
    }

    Point sample_point(std::mt19937_64& rng) const override {
        std::uniform_real_distribution<double> unif(0.0, 2.0 * std::numbers::pi);
        return Point{unif(rng)};
    }

    double probe_reach() const noexcept override { return 1.0; }
};

/**
 * Unordered Q-tuples of points of R^m with the l2 matching distance
 *   d(a, b)^2 = min over permutations s of sum_i |a_i - b_s(i)|^2.
 * A point stores the Q blocks of m coordinates back to back.
 */
class QPointsSpace final : public MetricSpace {
public:
    QPointsSpace(std::size_t q, std::size_t m) : q_(q), m_(m) {
        if (q == 0 || m == 0 || q * m > kMaxDim)
            throw Error(ErrorCode::invalid_config, "q_points requires Q, m >= 1 and Q*m <= 8");
    }

    SpaceKind kind() const noexcept override { return SpaceKind::q_points; }
    std::size_t point_dim() const noexcept override { return q_ * m_; }
    std::string name() const override { return "q:" + std::to_string(q_) + ":" + std::to_string(m_); }
    std::size_t sheets() const noexcept { return q_; }
    std::size_t sheet_dim() const noexcept { return m_; }

    double distance_unchecked(const Point& a, const Point& b) const noexcept override {
        // squared distance between block i of a and block j of b
        std::array<double, kMaxDim * kMaxDim> cost{};
        for (std::size_t i = 0; i < q_; ++i) {
            for (std::size_t j = 0; j < q_; ++j) {
                double s = 0.0;
                for (std::size_t c = 0; c < m_; ++c) {
                    const double d = a[i * m_ + c] - b[j * m_ + c];
                    s += d * d;
                }
                cost[i * q_ + j] = s;
            }
        }
        if (q_ == 1) return std::sqrt(cost[0]);
        if (q_ == 2) return std::sqrt(std::min(cost[0] + cost[3], cost[1] + cost[2]));
        std::array<std::size_t, kMaxDim> perm{};
        std::iota(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(q_), std::size_t{0});
        double best = std::numeric_limits<double>::infinity();
        std::array<double, kMaxDim> terms{};
        do {
            // sorted summation keeps the result independent of block order
            for (std::size_t i = 0; i < q_; ++i) terms[i] = cost[i * q_ + perm[i]];
            std::sort(terms.begin(), terms.begin() + static_cast<std::ptrdiff_t>(q_));
            double s = 0.0;
            for (std::size_t i = 0; i < q_; ++i) s += terms[i];
            best = std::min(best, s);
        } while (std::next_permutation(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(q_)));
        return std::sqrt(best);
    }

    std::vector<Point> dense_prefix(std::size_t count) const override {
        return detail::dyadic_prefix(q_ * m_, count, q_);
    }
    Point sample_point(std::mt19937_64& rng) const override { return detail::uniform_box_point(q_ * m_, 2.0, rng); }
    double probe_reach() const noexcept override { return 100.0; }

private:
    std::size_t q_;
    std::size_t m_;
};

namespace detail {

inline std::size_t parse_count(std::string_view text, std::string_view what) {
    std::size_t value = 0;
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc{} || ptr != end || text.empty())
        throw Error(ErrorCode::invalid_config, "bad " + std::string(what) + " '" + std::string(text) + "'");
    return value;
}

}  // namespace detail

/// Parses "euclidean:3", "max_norm_plane", "circle" or "q:Q:m".
inline SpaceHandle parse_space(std::string_view spec) {
    if (spec == "max_norm_plane") return std::make_shared<MaxNormPlane>();
    if (spec == "circle") return std::make_shared<CircleSpace>();
    if (spec.starts_with("euclidean:")) {
        return std::make_shared<EuclideanSpace>(detail::parse_count(spec.substr(10), "euclidean dimension"));
    }
    if (spec.starts_with("q:")) {
        const auto rest = spec.substr(2);
        const auto colon = rest.find(':');
        if (colon == std::string_view::npos) throw Error(ErrorCode::invalid_config, "q_points spec must be q:Q:m");
        return std::make_shared<QPointsSpace>(detail::parse_count(rest.substr(0, colon), "Q"),
                                              detail::parse_count(rest.substr(colon + 1), "m"));
    }
    throw Error(ErrorCode::invalid_config, "unknown space '" + std::string(spec) + "'");
}

struct MetricAxiomReport {
    std::size_t samples = 0;
    std::size_t nonnegativity = 0;
    std::size_t identity = 0;
    std::size_t symmetry = 0;
    std::size_t triangle = 0;

    std::size_t violations() const noexcept { return nonnegativity + identity + symmetry + triangle; }
};

/**
 * Draws `samples` random triples from the space's sampler and counts axiom
 * violations beyond `tol`. Identity is checked both ways: d(a, a) = 0 and,
 * for q_points, d(a, a shuffled) = 0; distinct samples must have d > tol.
 */
inline MetricAxiomReport verify_metric_axioms(const MetricSpace& space, std::size_t samples, std::uint64_t seed,
                                              double tol = 1e-12) {
    MetricAxiomReport report;
    report.samples = samples;
    std::mt19937_64 rng(seed);
    const auto* qspace = dynamic_cast<const QPointsSpace*>(&space);
    for (std::size_t s = 0; s < samples; ++s) {
        const Point a = space.sample_point(rng);
        const Point b = space.sample_point(rng);
        const Point c = space.sample_point(rng);
        const double ab = space.distance(a, b);
        const double ba = space.distance(b, a);
        const double bc = space.distance(b, c);
        const double ac = space.distance(a, c);
        if (ab < 0.0 || bc < 0.0 || ac < 0.0) ++report.nonnegativity;
        if (space.distance(a, a) > tol || (!(a == b) && ab <= tol)) ++report.identity;
        if (qspace != nullptr) {
            Point shuffled(a.size());
            const std::size_t q = qspace->sheets(), m = qspace->sheet_dim();
            for (std::size_t i = 0; i < q; ++i)
                for (std::size_t k = 0; k < m; ++k) shuffled[((i + 1) % q) * m + k] = a[i * m + k];
            if (space.distance(a, shuffled) > tol) ++report.identity;
        }
        if (std::abs(ab - ba) > tol) ++report.symmetry;
        if (ac > ab + bc + tol) ++report.triangle;
    }
    return report;
}

}  // namespace kse
