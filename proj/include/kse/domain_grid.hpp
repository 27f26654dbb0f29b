#pragma once

#include <cstddef>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "kse/error.hpp"
#include "kse/point.hpp"

namespace kse {

/// Boolean field over the grid nodes marking an eroded domain.
struct InnerMask {
    double h = 0.0;
    std::vector<char> marked;
    std::size_t count = 0;
    /// Set when the erosion removed every node.
    bool empty = true;
};

/**
 * Axis-aligned box with a cell-centered uniform grid. Nodes are indexed with
 * the first axis varying fastest.
 */
class DomainGrid {
public:
    DomainGrid(std::vector<double> lower, std::vector<double> upper, std::vector<std::size_t> resolution)
        : lower_(std::move(lower)), upper_(std::move(upper)), resolution_(std::move(resolution)) {
        const std::size_t n = lower_.size();
        if (n == 0 || n > kMaxDim || upper_.size() != n)
            throw Error(ErrorCode::invalid_domain, "box corners must have equal dimension in [1, 8]");
        if (resolution_.size() == 1 && n > 1) resolution_.assign(n, resolution_[0]);
        if (resolution_.size() != n) throw Error(ErrorCode::invalid_domain, "resolution list does not match dimension");
        spacing_.resize(n);
        weight_ = 1.0;
        node_count_ = 1;
        for (std::size_t i = 0; i < n; ++i) {
            if (!(lower_[i] < upper_[i])) throw Error(ErrorCode::invalid_domain, "degenerate box along axis " + std::to_string(i));
            if (resolution_[i] < 2) throw Error(ErrorCode::invalid_domain, "resolution must be >= 2 per axis");
            spacing_[i] = (upper_[i] - lower_[i]) / static_cast<double>(resolution_[i]);
            weight_ *= spacing_[i];
            node_count_ *= resolution_[i];
        }
    }

    std::size_t dim() const noexcept { return lower_.size(); }
    std::size_t node_count() const noexcept { return node_count_; }
    const std::vector<double>& lower() const noexcept { return lower_; }
    const std::vector<double>& upper() const noexcept { return upper_; }
    const std::vector<std::size_t>& resolution() const noexcept { return resolution_; }
    const std::vector<double>& spacing() const noexcept { return spacing_; }

    double min_spacing() const noexcept {
        double s = spacing_[0];
        for (double v : spacing_) s = std::min(s, v);
        return s;
    }

    /// Lebesgue weight carried by each node.
    double weight() const noexcept { return weight_; }

    /// Product of side lengths.
    double measure() const noexcept {
        double m = 1.0;
        for (std::size_t i = 0; i < dim(); ++i) m *= upper_[i] - lower_[i];
        return m;
    }

    Point node(std::size_t index) const {
        Point x(dim());
        for (std::size_t i = 0; i < dim(); ++i) {
            const std::size_t k = index % resolution_[i];
            index /= resolution_[i];
            x[i] = lower_[i] + (static_cast<double>(k) + 0.5) * spacing_[i];
        }
        return x;
    }

    /// Distance from x to the box boundary (meaningful for x inside the box).
    double boundary_distance(const Point& x) const noexcept {
        double d = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < dim(); ++i) d = std::min({d, x[i] - lower_[i], upper_[i] - x[i]});
        return d;
    }

    bool contains(const Point& x, double margin = 0.0) const noexcept {
        for (std::size_t i = 0; i < dim(); ++i) {
            if (x[i] < lower_[i] - margin || x[i] > upper_[i] + margin) return false;
        }
        return true;
    }

    double min_side() const noexcept {
        double s = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < dim(); ++i) s = std::min(s, upper_[i] - lower_[i]);
        return s;
    }

    /// Nodes with boundary distance strictly greater than h.
    InnerMask inner_mask(double h) const {
        if (!(h > 0.0)) throw Error(ErrorCode::invalid_domain, "erosion radius must be positive");
        InnerMask mask;
        mask.h = h;
        mask.marked.assign(node_count_, 0);
        for (std::size_t k = 0; k < node_count_; ++k) {
            if (boundary_distance(node(k)) > h) {
                mask.marked[k] = 1;
                ++mask.count;
            }
        }
        mask.empty = mask.count == 0;
        return mask;
    }

    double mask_measure(const InnerMask& mask) const noexcept { return static_cast<double>(mask.count) * weight_; }

private:
    std::vector<double> lower_;
    std::vector<double> upper_;
    std::vector<std::size_t> resolution_;
    std::vector<double> spacing_;
    double weight_ = 0.0;
    std::size_t node_count_ = 0;
};

}  // namespace kse
