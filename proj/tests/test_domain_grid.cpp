#include <gtest/gtest.h>

#include "kse/domain_grid.hpp"

using namespace kse;

TEST(DomainGrid, UnitSquareTenByTen) {
    DomainGrid g({0.0, 0.0}, {1.0, 1.0}, {10, 10});
    EXPECT_EQ(g.node_count(), 100u);
    EXPECT_NEAR(g.weight(), 0.01, 1e-17);
}

TEST(DomainGrid, CellCentersInOneDimension) {
    DomainGrid g({0.0}, {1.0}, {4});
    const double expected[] = {0.125, 0.375, 0.625, 0.875};
    for (std::size_t k = 0; k < 4; ++k) EXPECT_DOUBLE_EQ(g.node(k)[0], expected[k]);
}

TEST(DomainGrid, TotalMeasureIsExact) {
    DomainGrid g({0.0, 0.0}, {2.0, 3.0}, {7, 11});
    double s = 0.0;
    for (std::size_t k = 0; k < g.node_count(); ++k) s += g.weight();
    EXPECT_NEAR(s, 6.0, 1e-13);
    EXPECT_EQ(g.measure(), 6.0);
    EXPECT_NEAR(g.mask_measure(g.inner_mask(1e-9)), 6.0, 1e-13);
}

TEST(DomainGrid, FirstAxisVariesFastest) {
    DomainGrid g({0.0, 0.0}, {1.0, 2.0}, {2, 2});
    EXPECT_EQ(g.node(1), (Point{0.75, 0.5}));
    EXPECT_EQ(g.node(2), (Point{0.25, 1.5}));
}

TEST(DomainGrid, ResolutionIsBroadcast) {
    DomainGrid g({0.0, 0.0, 0.0}, {1.0, 1.0, 1.0}, {5});
    EXPECT_EQ(g.node_count(), 125u);
}

TEST(DomainGrid, DegenerateBoxIsRejected) {
    auto code_of = [](auto&& make) {
        try {
            make();
        } catch (const Error& e) {
            return e.code();
        }
        return ErrorCode::invalid_config;
    };
    EXPECT_EQ(code_of([] { DomainGrid({0.0, 1.0}, {1.0, 1.0}, {4}); }), ErrorCode::invalid_domain);
    EXPECT_EQ(code_of([] { DomainGrid({0.0}, {1.0}, {1}); }), ErrorCode::invalid_domain);
    EXPECT_EQ(code_of([] { DomainGrid({0.0, 0.0}, {1.0}, {4}); }), ErrorCode::invalid_domain);
}

TEST(InnerMask, ErosionMarksTheInteriorBox) {
    DomainGrid g({0.0, 0.0}, {1.0, 1.0}, {50, 50});
    const auto mask = g.inner_mask(0.2);
    for (std::size_t k = 0; k < g.node_count(); ++k) {
        const Point x = g.node(k);
        const bool inside = x[0] > 0.2 && x[0] < 0.8 && x[1] > 0.2 && x[1] < 0.8;
        EXPECT_EQ(static_cast<bool>(mask.marked[k]), inside);
    }
    EXPECT_FALSE(mask.empty);
}

TEST(InnerMask, TinyErosionMarksEverything) {
    DomainGrid g({0.0, 0.0}, {1.0, 1.0}, {20, 20});
    EXPECT_EQ(g.inner_mask(1e-6).count, g.node_count());
}

TEST(InnerMask, HalfSideErosionIsEmpty) {
    DomainGrid g({0.0, 0.0}, {1.0, 1.0}, {20, 20});
    const auto mask = g.inner_mask(0.5);
    EXPECT_TRUE(mask.empty);
    EXPECT_EQ(mask.count, 0u);
}

TEST(InnerMask, NonPositiveErosionThrows) {
    DomainGrid g({0.0}, {1.0}, {8});
    EXPECT_THROW((void)g.inner_mask(0.0), Error);
}

TEST(InnerMask, MonotoneInH) {
    DomainGrid g({-1.0, 0.0, 0.5}, {1.0, 2.0, 1.5}, {12, 13, 9});
    const double ladder[] = {0.001, 0.01, 0.05, 0.1, 0.2, 0.3, 0.45};
    for (std::size_t i = 0; i + 1 < std::size(ladder); ++i) {
        const auto small = g.inner_mask(ladder[i]), large = g.inner_mask(ladder[i + 1]);
        for (std::size_t k = 0; k < g.node_count(); ++k)
            if (large.marked[k]) {
                EXPECT_TRUE(small.marked[k]);
            }
    }
}

TEST(InnerMask, MarkedNodesAreFartherThanH) {
    DomainGrid g({0.0, 0.0}, {1.0, 3.0}, {17, 31});
    for (double h : {0.03, 0.1, 0.25}) {
        const auto mask = g.inner_mask(h);
        for (std::size_t k = 0; k < g.node_count(); ++k) {
            const Point x = g.node(k);
            const double d = std::min({x[0], 1.0 - x[0], x[1], 3.0 - x[1]});
            EXPECT_EQ(static_cast<bool>(mask.marked[k]), d > h);
        }
    }
}
