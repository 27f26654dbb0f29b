#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "kse/oracles.hpp"

using namespace kse;

TEST(LinearOracle, IdentityInThePlane) {
    const auto d = oracles::linear_euclidean_density({1, 0, 0, 1}, 2, 2, 2.0);
    EXPECT_NEAR(d.brute_force, 1.0, 1e-12);
    EXPECT_EQ(*d.trace_formula, 1.0);
}

TEST(LinearOracle, DiagonalOneTwo) {
    const auto d = oracles::linear_euclidean_density({1, 0, 0, 2}, 2, 2, 2.0);
    EXPECT_NEAR(d.brute_force, 2.5, 1e-9);
    EXPECT_EQ(*d.trace_formula, 2.5);
}

TEST(LinearOracle, ZeroMatrix) {
    for (double p : {1.0, 2.0, 3.5}) EXPECT_EQ(oracles::linear_euclidean_density({0, 0, 0, 0}, 2, 2, p).brute_force, 0.0);
}

TEST(LinearOracle, NonSquareAndOtherDimensions) {
    const auto rect = oracles::linear_euclidean_density({1, 2, 0, 1, 3, -1}, 3, 2, 2.0);
    EXPECT_NEAR(rect.brute_force, *rect.trace_formula, 1e-9);
    const auto cube = oracles::linear_euclidean_density({1, 0, 0, 0, 1, 0, 0, 0, 1}, 3, 3, 2.0);
    EXPECT_NEAR(cube.brute_force, 1.0, 1e-6);
    const auto line = oracles::linear_euclidean_density({3}, 1, 1, 3.0);
    EXPECT_EQ(line.brute_force, 27.0);
    EXPECT_FALSE(line.trace_formula.has_value());
}

TEST(LinearOracle, PEqualsOneForTheIdentity) {
    // |nu| = 1 on the sphere, so every p gives 1
    EXPECT_NEAR(oracles::linear_euclidean_density({1, 0, 0, 1}, 2, 2, 1.0).brute_force, 1.0, 1e-12);
}

TEST(LinearOracle, RejectsBadInput) {
    EXPECT_THROW((void)oracles::linear_euclidean_density({1, 0, 0}, 2, 2, 2.0), Error);
    EXPECT_THROW((void)oracles::linear_euclidean_density({1, 0, 0, 1}, 2, 2, 0.5), Error);
    EXPECT_THROW((void)oracles::linear_euclidean_density(std::vector<double>(16, 0.0), 4, 4, 2.0), Error);
}

TEST(MaxNormOracle, ClosedFormAtPTwo) {
    const auto c = oracles::maxnorm_counterexample_constants(2.0);
    EXPECT_EQ(c.frame_sum, 2.0);
    ASSERT_TRUE(c.closed_form.has_value());
    EXPECT_NEAR(*c.closed_form, 0.8183098861837907, 1e-15);
    EXPECT_NEAR(c.sphere_average, *c.closed_form, 1e-9);
}

TEST(MaxNormOracle, PEqualsOne) {
    // average of max(|cos t|, |sin t|): 8 equal pieces of (1/2pi) int_0^{pi/4} cos t dt
    const double expected = 2.0 * std::sqrt(2.0) / std::numbers::pi;
    EXPECT_NEAR(oracles::maxnorm_counterexample_constants(1.0).sphere_average, expected, 1e-9);
}

TEST(MaxNormOracle, DegenerateMap) {
    const auto c = oracles::maxnorm_counterexample_constants(2.0, 0.0, 1000);
    EXPECT_EQ(c.frame_sum, 0.0);
    EXPECT_EQ(c.sphere_average, 0.0);
}

TEST(MaxNormOracle, Deterministic) {
    const auto a = oracles::maxnorm_counterexample_constants(3.0, 1.0, 100000);
    const auto b = oracles::maxnorm_counterexample_constants(3.0, 1.0, 100000);
    EXPECT_EQ(a.sphere_average, b.sphere_average);
    EXPECT_GT(a.frame_sum, a.sphere_average);
}
