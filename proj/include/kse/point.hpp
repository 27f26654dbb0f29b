#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>

#include "kse/error.hpp"

namespace kse {

/// Largest coordinate count supported for domain and target points.
inline constexpr std::size_t kMaxDim = 8;

/**
 * Fixed-capacity real vector used both for domain points x and for target
 * points u(x). Lives on the stack so that the inner quadrature loops never
 * allocate.
 */
class Point {
public:
    Point() = default;

    explicit Point(std::size_t dim) : dim_(dim) {
        if (dim > kMaxDim) {
            throw Error(ErrorCode::invalid_point,
                        "point dimension " + std::to_string(dim) + " exceeds " + std::to_string(kMaxDim));
        }
    }

    Point(std::initializer_list<double> values) : Point(values.size()) {
        std::copy(values.begin(), values.end(), c_.begin());
    }

    explicit Point(std::span<const double> values) : Point(values.size()) {
        std::copy(values.begin(), values.end(), c_.begin());
    }

    std::size_t size() const noexcept { return dim_; }

    double& operator[](std::size_t i) noexcept { return c_[i]; }
    double operator[](std::size_t i) const noexcept { return c_[i]; }

    std::span<double> coords() noexcept { return {c_.data(), dim_}; }
    std::span<const double> coords() const noexcept { return {c_.data(), dim_}; }

    const double* data() const noexcept { return c_.data(); }

    friend bool operator==(const Point& a, const Point& b) noexcept {
        return a.dim_ == b.dim_ && std::equal(a.c_.begin(), a.c_.begin() + a.dim_, b.c_.begin());
    }

private:
    std::array<double, kMaxDim> c_{};
    std::size_t dim_ = 0;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

/// |value|^p with exact fast paths for the exponents used most often.
inline double pow_abs(double value, double p) {
    const double a = std::abs(value);
    if (p == 2.0) return a * a;
    if (p == 1.0) return a;
    if (p == 3.0) return a * a * a;
    return std::pow(a, p);
}

}  // namespace kse
