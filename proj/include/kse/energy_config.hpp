#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "kse/domain_grid.hpp"
#include "kse/error.hpp"

namespace kse {

/// Numerical knobs shared by both energy pipelines.
struct EnergyConfig {
    double p = 2.0;
    /// Localization radius: the cutoff is 1 on the eroded domain Omega_{h0}.
    double h0 = 0.05;
    /// Length of the default geometric sequence h0 / 2^j, j = 1..h_count.
    std::size_t h_count = 6;
    /// Explicit h values (strictly decreasing); overrides h_count when set.
    std::vector<double> h_sequence;
    std::size_t ball_radial_order = 8;
    /// Empty selects default_sphere_order(n).
    std::vector<std::size_t> sphere_order;
    /// Number K of dense anchors in the truncated supremum.
    std::size_t dense_truncation = 512;
    /// Finite-difference step; 0 selects min grid spacing / 8.
    double delta = 0.0;
    std::uint64_t seed = 0;
    /// Ray-probe anchors in addition to the dense prefix.
    bool accelerate = true;
    /// Recompute with 2K dense anchors and flag a relative change above 0.1%.
    bool truncation_check = true;
    /// Worker threads; never changes results.
    std::size_t workers = 1;

    std::vector<double> resolved_h() const {
        if (!h_sequence.empty()) return h_sequence;
        std::vector<double> hs;
        for (std::size_t j = 1; j <= h_count; ++j) hs.push_back(h0 / std::ldexp(1.0, static_cast<int>(j)));
        return hs;
    }

    double resolved_delta(const DomainGrid& grid) const { return delta > 0.0 ? delta : grid.min_spacing() / 8.0; }

    /// Box growth needed by the evaluator: max(h_max, delta).
    double margin(const DomainGrid& grid) const {
        const auto hs = resolved_h();
        const double hmax = hs.empty() ? 0.0 : *std::max_element(hs.begin(), hs.end());
        return std::max(hmax, resolved_delta(grid));
    }

    void validate() const {
        auto fail = [](const std::string& msg) { throw Error(ErrorCode::invalid_config, msg); };
        if (!(p >= 1.0) || !std::isfinite(p)) fail("p must be a finite real >= 1");
        if (!(h0 > 0.0)) fail("h0 must be positive");
        if (dense_truncation < 1) fail("dense truncation K must be >= 1");
        if (ball_radial_order < 1) fail("ball radial order must be >= 1");
        if (delta < 0.0) fail("finite-difference step must be positive (or 0 for the default)");
        const auto hs = resolved_h();
        if (hs.size() < 3) fail("the h sequence needs at least 3 values");
        for (std::size_t i = 0; i < hs.size(); ++i) {
            if (!(hs[i] > 0.0)) fail("h values must be positive");
            if (i > 0 && !(hs[i] < hs[i - 1])) fail("h sequence must be strictly decreasing");
        }
        if (hs.front() > h0) fail("max(h_sequence) must not exceed h0");
    }
};

}  // namespace kse
