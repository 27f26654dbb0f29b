#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "kse/directional_energy.hpp"
#include "kse/oracles.hpp"

using namespace kse;

namespace {

constexpr double pi = std::numbers::pi;
const double maxnorm_constant = (2.0 + pi) / (2.0 * pi);

MapHandle make(const char* space, const char* map, std::size_t n) { return parse_map(map, parse_space(space), n); }

DomainGrid unit_square(std::size_t res) { return DomainGrid({0.0, 0.0}, {1.0, 1.0}, {res}); }

struct CatalogEntry {
    const char* space;
    const char* map;
};

const CatalogEntry catalog[] = {{"euclidean:2", "identity"},
                                {"euclidean:2", "linear:1,0;0,2"},
                                {"max_norm_plane", "identity"},
                                {"circle", "winding:2"},
                                {"q:2:1", "qsplit"}};

// sup over unit w of |nu . A^T w|, by brute force over 2e5 angles.
double linear_oracle(const double a[4], const double nu[2]) {
    double best = 0.0;
    for (int k = 0; k < 200000; ++k) {
        const double t = 2.0 * pi * k / 200000.0;
        const double w0 = std::cos(t), w1 = std::sin(t);
        const double g0 = a[0] * w0 + a[2] * w1, g1 = a[1] * w0 + a[3] * w1;
        best = std::max(best, std::abs(nu[0] * g0 + nu[1] * g1));
    }
    return best;
}

}  // namespace

TEST(DirectionalDerivative, MaxNormIdentity) {
    const auto g = unit_square(16);
    const auto u = make("max_norm_plane", "identity", 2);
    for (double t : {0.0, 0.3, 1.0, 2.0, 2.9, 4.4, 5.5}) {
        const Point nu{std::cos(t), std::sin(t)};
        EXPECT_NEAR(directional_derivative(*u, g, Point{0.53125, 0.46875}, nu.coords(), {}),
                    std::max(std::abs(nu[0]), std::abs(nu[1])), 1e-9)
            << t;
    }
}

TEST(DirectionalDerivative, ConstantMapIsZero) {
    const auto g = unit_square(16);
    for (const char* space : {"euclidean:2", "circle", "q:2:1"}) {
        const auto u = make(space, "constant", 2);
        const Point nu{0.6, 0.8};
        EXPECT_EQ(directional_derivative(*u, g, Point{0.5, 0.5}, nu.coords(), {}), 0.0) << space;
    }
}

TEST(DirectionalDerivative, LinearMapMatchesBruteForce) {
    const auto g = unit_square(16);
    const double a[4] = {0.5, 1.0, -1.0, 2.0};
    const auto u = make("euclidean:2", "linear:0.5,1;-1,2", 2);
    for (double t : {0.1, 1.3, 2.2}) {
        const double nu[2] = {std::cos(t), std::sin(t)};
        const double av = std::hypot(a[0] * nu[0] + a[1] * nu[1], a[2] * nu[0] + a[3] * nu[1]);
        const double oracle = linear_oracle(a, nu);
        EXPECT_NEAR(oracle, av, 1e-6 * av);
        EXPECT_NEAR(directional_derivative(*u, g, Point{0.40625, 0.59375}, nu, {}), av, 1e-8 * av) << t;
    }
}

TEST(DirectionalDerivative, RejectsNonUnitDirection) {
    const auto g = unit_square(16);
    const auto u = make("euclidean:2", "identity", 2);
    const double nu[2] = {1.0, 1e-5};
    try {
        (void)directional_derivative(*u, g, Point{0.5, 0.5}, nu, {});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::invalid_direction);
    }
}

TEST(DirectionalVector, TwiceTheAxis) {
    const auto g = unit_square(16);
    const double v[2] = {2.0, 0.0};
    EXPECT_NEAR(directional_vector(*make("max_norm_plane", "identity", 2), g, Point{0.5, 0.5}, v, {}), 2.0, 1e-9);
}

TEST(DirectionalVector, HomogeneityAndEvenness) {
    const auto g = unit_square(16);
    const Point x{0.40625, 0.65625};
    for (const auto& [space, map] : catalog) {
        const auto u = make(space, map, 2);
        const double nu[2] = {0.6, -0.8};
        const double base = directional_derivative(*u, g, x, nu, {});
        for (double s : {0.5, 3.0, 1e-3}) {
            const double v[2] = {s * nu[0], s * nu[1]};
            EXPECT_NEAR(directional_vector(*u, g, x, v, {}), s * base, 1e-12 * std::max(1.0, s * base)) << map;
        }
        const double minus[2] = {-nu[0], -nu[1]};
        EXPECT_EQ(directional_derivative(*u, g, x, minus, {}), base) << map;
    }
}

TEST(DirectionalVector, ZeroVectorIsInvalid) {
    const auto g = unit_square(16);
    const double v[2] = {0.0, 0.0};
    try {
        (void)directional_vector(*make("euclidean:2", "identity", 2), g, Point{0.5, 0.5}, v, {});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::invalid_direction);
    }
}

TEST(MinimalGradient, MaxNormComponents) {
    // u = (x1 + 2 x2, x1/2 - x2): max(|grad f1|, |grad f2|) = sqrt(5)
    const auto g = unit_square(16);
    const auto u = make("max_norm_plane", "linear:1,2;0.5,-1", 2);
    EXPECT_NEAR(minimal_gradient(*u, g, Point{0.46875, 0.53125}, {}), std::sqrt(5.0), 1e-8);
}

TEST(MinimalGradient, IdentityAndConstant) {
    const auto g = unit_square(16);
    EXPECT_NEAR(minimal_gradient(*make("euclidean:2", "identity", 2), g, Point{0.5, 0.5}, {}), 1.0, 1e-9);
    EXPECT_EQ(minimal_gradient(*make("euclidean:2", "constant", 2), g, Point{0.5, 0.5}, {}), 0.0);
}

TEST(DirectionalField, DominationAndEvenness) {
    const auto g = unit_square(12);
    EnergyConfig cfg;
    cfg.dense_truncation = 128;
    const auto sphere = sphere_nodes(2, {64});
    for (const auto& [space, map] : catalog) {
        const auto u = make(space, map, 2);
        const auto f = directional_field(*u, g, cfg, sphere.nodes, false);
        for (std::size_t k = 0; k < g.node_count(); ++k) {
            for (std::size_t j = 0; j < 64; ++j) {
                EXPECT_GE(f.at(k, j), 0.0);
                EXPECT_LE(f.at(k, j), f.min_gradient[k] + 1e-9) << map;
                EXPECT_EQ(f.at(k, j), f.at(k, (j + 32) % 64)) << map;
            }
        }
    }
}

TEST(DirectionalField, MonotoneInTruncation) {
    const auto g = unit_square(10);
    const auto sphere = sphere_nodes(2, {32});
    for (bool accelerate : {false, true}) {
        for (const auto& [space, map] : catalog) {
            const auto u = make(space, map, 2);
            std::vector<double> prev;
            for (std::size_t k : {1u, 8u, 64u, 512u}) {
                EnergyConfig cfg;
                cfg.dense_truncation = k;
                cfg.accelerate = accelerate;
                const auto f = directional_field(*u, g, cfg, sphere.nodes, false);
                for (std::size_t i = 0; i < prev.size(); ++i) {
                    EXPECT_GE(f.values[i], prev[i]) << map << " K=" << k;
                }
                prev = f.values;
            }
        }
    }
}

TEST(DirectionalField, DoubledValuesDominate) {
    const auto g = unit_square(10);
    EnergyConfig cfg;
    cfg.dense_truncation = 16;
    cfg.accelerate = false;
    const auto f = directional_field(*make("euclidean:2", "identity", 2), g, cfg, sphere_nodes(2, {16}).nodes, true);
    ASSERT_EQ(f.values_doubled.size(), f.values.size());
    for (std::size_t i = 0; i < f.values.size(); ++i) EXPECT_GE(f.values_doubled[i], f.values[i]);
}

TEST(Representation, SphereFormDensities) {
    const auto g = unit_square(16);
    const auto mx = representation(*make("max_norm_plane", "identity", 2), g, {});
    const auto id = representation(*make("euclidean:2", "identity", 2), g, {});
    const auto di = representation(*make("euclidean:2", "linear:1,0;0,2", 2), g, {});
    const double diag_oracle = oracles::linear_euclidean_density({1, 0, 0, 2}, 2, 2, 2.0).brute_force;
    EXPECT_NEAR(diag_oracle, 2.5, 1e-9);
    for (std::size_t k = 0; k < g.node_count(); ++k) {
        EXPECT_NEAR(mx.sphere_form.density[k], maxnorm_constant, 1e-4);
        EXPECT_NEAR(id.sphere_form.density[k], 1.0, 1e-6);
        EXPECT_NEAR(di.sphere_form.density[k], diag_oracle, 1e-6);
    }
}

TEST(Representation, BallFormDensities) {
    const auto g = unit_square(16);
    const auto id = representation(*make("euclidean:2", "identity", 2), g, {});
    const auto cs = representation(*make("euclidean:2", "constant", 2), g, {});
    const auto mx = representation(*make("max_norm_plane", "identity", 2), g, {});
    for (std::size_t k = 0; k < g.node_count(); ++k) {
        EXPECT_NEAR(id.ball_form.density[k], 1.0, 1e-6);
        EXPECT_NEAR(id.ball_form.density[k], id.sphere_form.density[k], 1e-12);
        EXPECT_EQ(cs.ball_form.density[k], 0.0);
        EXPECT_NEAR(mx.ball_form.density[k], maxnorm_constant, 1e-4);
    }
}

TEST(Representation, FrameSumDensities) {
    const auto g = unit_square(16);
    EXPECT_NEAR(frame_sum_energy(*make("max_norm_plane", "identity", 2), g, {}), 2.0, 1e-6);
    EXPECT_NEAR(frame_sum_energy(*make("euclidean:2", "identity", 2), g, {}), 2.0, 1e-6);
    EXPECT_EQ(frame_sum_energy(*make("euclidean:2", "constant", 2), g, {}), 0.0);
}

TEST(Representation, SphereAndBallAgreeOnTheCatalog) {
    const auto g = unit_square(12);
    for (double p : {1.5, 2.0, 3.0}) {
        EnergyConfig cfg;
        cfg.p = p;
        cfg.dense_truncation = 64;
        cfg.truncation_check = false;
        for (const auto& [space, map] : catalog) {
            const auto r = representation(*make(space, map, 2), g, cfg);
            EXPECT_NEAR(r.ball_form.energy, r.sphere_form.energy, 1e-6 * r.sphere_form.energy) << map << " p=" << p;
        }
    }
}

TEST(Representation, ThreeDimensionalIdentity) {
    DomainGrid g({0.0, 0.0, 0.0}, {1.0, 1.0, 1.0}, {4});
    EnergyConfig cfg;
    cfg.dense_truncation = 64;
    const auto r = representation(*make("euclidean:3", "identity", 3), g, cfg);
    for (std::size_t k = 0; k < g.node_count(); ++k) {
        EXPECT_NEAR(r.sphere_form.density[k], 1.0, 1e-6);
        EXPECT_NEAR(r.ball_form.density[k], 1.0, 1e-6);
        EXPECT_NEAR(r.frame_sum.density[k], 3.0, 1e-6);
    }
}

TEST(Representation, UnderTruncationIsFlagged) {
    const auto g = unit_square(8);
    EnergyConfig cfg;
    cfg.dense_truncation = 1;
    cfg.accelerate = false;
    const auto r = representation(*make("euclidean:2", "identity", 2), g, cfg);
    EXPECT_TRUE(r.sphere_form.under_truncated);
    EXPECT_GT(r.sphere_form.truncation_change, 1e-3);
    cfg.dense_truncation = 512;
    cfg.accelerate = true;
    EXPECT_FALSE(representation(*make("euclidean:2", "identity", 2), g, cfg).sphere_form.under_truncated);
}

TEST(Representation, WorkerCountDoesNotChangeResults) {
    const auto g = unit_square(12);
    EnergyConfig one, four;
    one.dense_truncation = four.dense_truncation = 64;
    four.workers = 4;
    const auto u = make("q:2:1", "qsplit", 2);
    const auto a = representation(*u, g, one), b = representation(*u, g, four);
    EXPECT_TRUE(a.field.values == b.field.values);
    EXPECT_EQ(a.sphere_form.energy, b.sphere_form.energy);
    EXPECT_EQ(a.ball_form.energy_inner, b.ball_form.energy_inner);
}

TEST(IncrementBound, ConstantMap) {
    const auto g = unit_square(16);
    const double v[2] = {1.0, 0.0};
    const auto b = check_increment_bound(*make("euclidean:2", "constant", 2), g, v, 0.1, {});
    EXPECT_EQ(b.lhs, 0.0);
    EXPECT_EQ(b.rhs, 0.0);
    EXPECT_TRUE(b.holds);
}

TEST(IncrementBound, IdentityAlongTheAxis) {
    const auto g = unit_square(20);
    const double v[2] = {1.0, 0.0};
    for (double h : {0.1, 0.05}) {
        const auto b = check_increment_bound(*make("euclidean:2", "identity", 2), g, v, h, {});
        const double inner = g.mask_measure(g.inner_mask(h));
        EXPECT_NEAR(b.lhs, h * h * inner, 1e-12);
        EXPECT_NEAR(b.rhs, h * h * g.measure(), 1e-9 * h * h);
        EXPECT_TRUE(b.holds);
        EXPECT_LT(b.lhs, b.rhs);
    }
}

TEST(IncrementBound, MaxNormDiagonal) {
    const auto g = unit_square(20);
    const double v[2] = {1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0)};
    const auto b = check_increment_bound(*make("max_norm_plane", "identity", 2), g, v, 0.05, {});
    EXPECT_TRUE(b.holds);
    EXPECT_NEAR(b.lhs / b.rhs, g.mask_measure(g.inner_mask(0.05)) / g.measure(), 1e-6);
}

TEST(IncrementBound, HoldsOnTheLattice) {
    const auto g = unit_square(16);
    EnergyConfig cfg;
    cfg.dense_truncation = 64;
    const double r = 1.0 / std::sqrt(2.0);
    const std::vector<std::array<double, 2>> lattice{{1.0, 0.0}, {0.0, 1.0}, {r, r}, {0.3, 0.0}};
    for (const auto& [space, map] : catalog) {
        const auto u = make(space, map, 2);
        for (const auto& v : lattice)
            for (double h : {0.1, 0.05, 0.025})
                EXPECT_TRUE(check_increment_bound(*u, g, v, h, cfg).holds) << map << " h=" << h;
    }
}

TEST(IncrementBound, RejectsLongVectors) {
    const auto g = unit_square(8);
    const double v[2] = {1.0, 0.5};
    EXPECT_THROW((void)check_increment_bound(*make("euclidean:2", "identity", 2), g, v, 0.1, {}), Error);
}
