#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "rhp/parametrix.hpp"
#include "test_util.hpp"

using namespace rhp;
using rhp::testing::random_config;

namespace {

const cplx I(0.0, 1.0);

// Closed-form one-cut parametrix on [-1, 1].
Mat2 one_cut_oracle(cplx z, Side side) {
    cplx g;
    if (z.imag() == 0.0 && std::abs(z.real()) < 1.0) {
        // Boundary values of ((z - 1)/(z + 1))^{1/4}.
        const double r = std::pow((1.0 - z.real()) / (1.0 + z.real()), 0.25);
        g = r * std::polar(1.0, (side == Side::above ? 0.25 : -0.25) * std::numbers::pi);
    } else {
        g = std::pow((z - 1.0) / (z + 1.0), 0.25);
    }
    Mat2 m;
    m << 0.5 * (g + 1.0 / g), (g - 1.0 / g) / (2.0 * I), -(g - 1.0 / g) / (2.0 * I), 0.5 * (g + 1.0 / g);
    return m;
}

double max_entry_diff(const Mat2& a, const Mat2& b) { return entry_norm(a - b); }

} // namespace

TEST(Parametrix, OneCutFrozenEntry) {
    const auto M = build_parametrix(SurfaceConfig({{-1.0, 1.0}}), {}, 0);
    for (Side s : {Side::above, Side::below}) EXPECT_NEAR(M.eval(2.0, s)(0, 0).real(), 1.03795, 1e-5);
    EXPECT_NEAR(one_cut_oracle(2.0, Side::none)(0, 0).real(), 1.03795, 1e-5);
}

TEST(Parametrix, OneCutMatchesClosedForm) {
    const auto M = build_parametrix(SurfaceConfig({{-1.0, 1.0}}), {}, 0);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-4.0, 4.0), c(-0.999, 0.999);
    double worst = 0.0;
    for (int i = 0; i < 150; ++i) {
        const cplx z(u(rng), u(rng));
        worst = std::max(worst, max_entry_diff(M.eval(z), one_cut_oracle(z, Side::none)));
    }
    for (int i = 0; i < 50; ++i) {
        const double x = c(rng);
        const Side s = i % 2 ? Side::above : Side::below;
        worst = std::max(worst, max_entry_diff(M.eval(x, s), one_cut_oracle(x, s)));
    }
    EXPECT_LE(worst, 1e-9);
}

TEST(Parametrix, SymmetricTwoCutValidation) {
    const auto M = build_parametrix(rhp::testing::symmetric_two_cut(), {0.3}, 7);
    EXPECT_NEAR(M.beta()[0], 0.1, 1e-12);
    EXPECT_EQ(M.convention(), SignConvention::direct);
    const auto rep = validate(M, 50);
    EXPECT_LE(rep.max_jump_residual(), 1e-7);
    EXPECT_LE(rep.det_deviation, 1e-9);
    EXPECT_LE(rep.asymptotic_spread, 0.2);
    for (const auto& e : rep.endpoint_exponents) EXPECT_NEAR(e.min_slope, -0.25, 0.02) << e.endpoint;
    ASSERT_EQ(rep.zeros.size(), 2u);
    for (const auto& z : rep.zeros) {
        EXPECT_NEAR(z.order_upper, 1.0, 0.02);
        EXPECT_NEAR(z.order_lower, 1.0, 0.02);
    }
}

TEST(Parametrix, DeterminantAndSymmetry) {
    std::mt19937_64 rng(2);
    const auto M = build_parametrix(random_config(3, rng), {0.37, 0.81}, 5);
    EXPECT_NEAR(std::abs(M.eval(2.0 * I).determinant() - 1.0), 0.0, 1e-10);
    // Diagonal entries are Schwarz symmetric, off-diagonal ones antisymmetric:
    // M(conj z) = sigma_3 conj(M(z)) sigma_3.
    Mat2 s3;
    s3 << 1.0, 0.0, 0.0, -1.0;
    for (const cplx& z : sample_points(M.config(), 40, 3)) {
        const Mat2 a = M.eval(z), b = M.eval(std::conj(z));
        EXPECT_LE(max_entry_diff(b, s3 * a.conjugate() * s3), 1e-10);
    }
    const Mat2 g = one_cut_oracle(cplx(0.3, 0.7), Side::none), h = one_cut_oracle(cplx(0.3, -0.7), Side::none);
    EXPECT_LE(max_entry_diff(h, s3 * g.conjugate() * s3), 1e-14);
}

TEST(Parametrix, CutJumpExample) {
    const auto M = build_parametrix(rhp::testing::symmetric_two_cut(), {0.3}, 7);
    Mat2 J;
    J << 0.0, 1.0, -1.0, 0.0;
    for (double x : {-1.7, -1.2, 1.4}) EXPECT_LE(max_entry_diff(M.eval(x, Side::above), M.eval(x, Side::below) * J), 1e-8);
}

TEST(Parametrix, ZeroAlphaIsAnalyticAcrossGap) {
    std::mt19937_64 rng(3);
    const SurfaceConfig cfg = random_config(2, rng);
    for (long n : {1L, 9L}) {
        const auto M = build_parametrix(cfg, {0.0}, n);
        for (int i = 1; i < 10; ++i) {
            const double x = cfg.b(0) + (cfg.a(1) - cfg.b(0)) * i / 10.0;
            EXPECT_LE(max_entry_diff(M.eval(x, Side::above), M.eval(x, Side::below)), 1e-8);
        }
    }
}

TEST(Parametrix, RandomConfigsSatisfyJumps) {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 4; ++trial) {
        const int N = 2 + trial % 2;
        const SurfaceConfig cfg = random_config(N, rng);
        std::vector<double> alpha;
        for (int k = 0; k + 1 < N; ++k) alpha.push_back(u(rng));
        const auto rep = validate(build_parametrix(cfg, alpha, 7), 20);
        EXPECT_LE(rep.max_jump_residual(), 1e-7) << "trial " << trial;
        EXPECT_LE(rep.det_deviation, 1e-9);
    }
}

TEST(Parametrix, AsymptoticDecay) {
    std::mt19937_64 rng(5);
    const auto M = build_parametrix(random_config(2, rng), {0.6}, 3);
    const auto rep = validate(M, 10);
    const double C = rep.asymptotic_constants[0];
    EXPECT_LE(entry_norm(M.eval(1e4 * I) - Mat2::Identity()), 1.2 * C * 1e-4);
}

TEST(Parametrix, UniquenessAcrossTolerances) {
    std::mt19937_64 rng(6);
    const SurfaceConfig cfg = random_config(2, rng);
    ParametrixOptions loose, tight;
    for (auto* o : {&loose, &tight}) {
        const double t = o == &loose ? 1e-10 : 1e-12;
        o->abelian.tol.rel_tol = t;
        o->inversion.differential.tol.rel_tol = t;
    }
    const auto A = build_parametrix(cfg, {0.42}, 11, loose);
    const auto B = build_parametrix(cfg, {0.42}, 11, tight);
    for (const cplx& z : sample_points(cfg, 100, 9)) EXPECT_LE(max_entry_diff(A.eval(z), B.eval(z)), 1e-8);
}

TEST(Parametrix, RowJumpsIncludeSignFactor) {
    // (v_1, v_2)_+ = (v_1, v_2)_- J_v with J_v from the row's own laws.
    std::mt19937_64 rng(7);
    const SurfaceConfig cfg = random_config(2, rng);
    const auto M = build_parametrix(cfg, {0.23}, 4);
    const double pi = std::numbers::pi;
    for (int nu = 1; nu <= 2; ++nu) {
        const double sgn = nu == 1 ? 1.0 : -1.0;
        auto row = [&](double x, Side s) {
            return std::array<cplx, 2>{M.v(nu, 1, x, s), M.v(nu, 2, x, s)};
        };
        double worst = 0.0;
        // Cut.
        for (double x : {cfg.a(0) + 0.3 * (cfg.b(0) - cfg.a(0)), cfg.a(1) + 0.6 * (cfg.b(1) - cfg.a(1))}) {
            const auto p = row(x, Side::above), m = row(x, Side::below);
            worst = std::max({worst, std::abs(p[0] - m[1]), std::abs(p[1] - m[0])});
        }
        // Outside.
        for (double x : {cfg.a(0) - 0.7, cfg.b(1) + 1.1}) {
            const auto p = row(x, Side::above), m = row(x, Side::below);
            worst = std::max({worst, std::abs(p[0] - sgn * m[0]), std::abs(p[1] + sgn * m[1])});
        }
        // Gap.
        const double b = M.beta()[0];
        const cplx e = std::exp(cplx(0.0, -2.0 * pi * b));
        for (double f : {0.2, 0.5, 0.8}) {
            const double x = cfg.b(0) + f * (cfg.a(1) - cfg.b(0));
            const auto p = row(x, Side::above), m = row(x, Side::below);
            worst = std::max({worst, std::abs(p[0] - sgn * e * m[0]), std::abs(p[1] + sgn / e * m[1])});
        }
        EXPECT_LE(worst, 1e-8) << "nu " << nu;
    }
}

TEST(Parametrix, DivisorBoundaryValuesVanish) {
    const auto M = build_parametrix(rhp::testing::symmetric_two_cut(), {0.3}, 7);
    for (int nu = 1; nu <= 2; ++nu) {
        const auto& q = M.row(nu).omega().divisor()[0];
        for (Side s : {Side::above, Side::below}) {
            EXPECT_EQ(M.v(nu, q.sheet, q.x, s), cplx(0.0));
            EXPECT_LE(std::abs(M.v(nu, q.sheet, q.x + 2e-8, s)), 1e-7);
        }
    }
}

TEST(Parametrix, EntriesNeverVanishOffAxis) {
    std::mt19937_64 rng(8);
    const SurfaceConfig cfg = random_config(2, rng);
    const auto M = build_parametrix(cfg, {0.71}, 2);
    double smallest = std::numeric_limits<double>::infinity();
    for (const cplx& z : sample_points(cfg, 1000, 10)) smallest = std::min(smallest, M.eval(z).cwiseAbs().minCoeff());
    EXPECT_GT(smallest, 0.0);
}

TEST(Parametrix, EndpointAndSideContracts) {
    const auto M = build_parametrix(rhp::testing::symmetric_two_cut(), {0.3}, 1);
    EXPECT_THROW(M.eval(1.0, Side::above), ContractViolation);
    EXPECT_THROW(M.eval(0.0), ContractViolation);
    EXPECT_NO_THROW(M.eval(5.0));
    EXPECT_THROW(validate(M, 5), ContractViolation);
    EXPECT_THROW(build_parametrix(rhp::testing::symmetric_two_cut(), {0.3, 0.1}, 1), ContractViolation);
}

TEST(Parametrix, NegatedAlphaBuildsItsOwnProblem) {
    const SurfaceConfig cfg = rhp::testing::symmetric_two_cut();
    const auto M = build_parametrix(cfg, {-0.3}, 7);
    EXPECT_NEAR(M.beta()[0], 0.9, 1e-12);
    EXPECT_EQ(M.convention(), SignConvention::direct);
    EXPECT_LE(validate(M, 10).max_jump_residual(), 1e-7);
}

TEST(Boundedness, SmallSweepStaysInEnvelope) {
    const SurfaceConfig cfg = rhp::testing::symmetric_two_cut();
    const auto rep = boundedness_sweep(cfg, {std::sqrt(2.0) - 1.0}, 12, 16, 0.1);
    EXPECT_EQ(rep.grid_points, 16);
    EXPECT_EQ(rep.grid_failures, 0);
    EXPECT_LE(rep.n0_norm, rep.envelope);
    EXPECT_TRUE(rep.within(1.05));
    for (std::size_t i = 0; i < rep.norms.size(); ++i)
        EXPECT_NEAR(rep.norms[i], rep.inverse_norms[i], 1e-8 * rep.norms[i]);
    const auto wider = boundedness_sweep(cfg, {std::sqrt(2.0) - 1.0}, 0, 16, 0.05);
    EXPECT_GE(wider.envelope, rep.envelope);
}
