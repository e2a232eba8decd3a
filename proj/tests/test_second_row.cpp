#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "rhp/second_row.hpp"
#include "test_util.hpp"

using namespace rhp;
using rhp::testing::random_config;
using rhp::testing::symmetric_two_cut;

namespace {

const cplx I(0.0, 1.0);

std::vector<cplx> off_axis_points(const SurfaceConfig& cfg, int count, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> re(cfg.a(0) - 1.0, cfg.b(cfg.num_cuts() - 1) + 1.0), im(-2.0, 2.0);
    std::vector<cplx> out;
    while (static_cast<int>(out.size()) < count) {
        const cplx z(re(rng), im(rng));
        if (std::abs(z.imag()) > 1e-2) out.push_back(z);
    }
    return out;
}

double max_row_gap(const Parametrix& M, const ReconstructedRow2& row2, const std::vector<cplx>& zs) {
    double worst = 0.0;
    for (cplx z : zs) {
        const Mat2 m = M.eval(z);
        const auto r = row2.eval(z);
        worst = std::max({worst, std::abs(r[0] - m(1, 0)), std::abs(r[1] - m(1, 1))});
    }
    return worst;
}

} // namespace

TEST(SecondRow, OneCutClosedForm) {
    const Parametrix M(SurfaceConfig({{-1.0, 1.0}}), {});
    const auto F = build_F(M.row(1));
    // M_12 ~ -1/(2 i z) at infinity_2, so c = i.
    EXPECT_NEAR(std::abs(F.m() - 0.5 * I), 0.0, 1e-9);
    EXPECT_NEAR(std::abs(F.c() - I), 0.0, 1e-8);
    ASSERT_EQ(F.Q_coefficients().size(), 2u);
    EXPECT_DOUBLE_EQ(F.Q_coefficients()[0], 0.0);
    EXPECT_DOUBLE_EQ(F.Q_coefficients()[1], 1.0);
    EXPECT_TRUE(F.r_coefficients().empty());
    // F = i (w_s - z) and row 2 is the closed form.
    const auto row2 = reconstruct_row2(F, M.row(1));
    EXPECT_LE(max_row_gap(M, row2, off_axis_points(M.config(), 100, 1)), 1e-8);
}

TEST(SecondRow, TwoCutMatchesDirectRow) {
    const auto M = build_parametrix(symmetric_two_cut(), {0.3}, 7);
    const auto F = build_F(M.row(1));
    const auto row2 = reconstruct_row2(F, M.row(1));
    const auto pts = off_axis_points(M.config(), 100, 2);
    EXPECT_LE(max_row_gap(M, row2, pts), 1e-8);
    // det [row 1; rebuilt row 2] = 1.
    double worst = 0.0;
    for (cplx z : pts) {
        const auto r1 = row_entries(M.row(1), z, half_plane(z, Side::none));
        const auto r2 = row2.eval(z);
        worst = std::max(worst, std::abs(r1[0] * r2[1] - r1[1] * r2[0] - 1.0));
    }
    EXPECT_LE(worst, 1e-9);
}

TEST(SecondRow, RandomConfigsMatchDirectRow) {
    std::mt19937_64 rng(3);
    for (int N = 2; N <= 3; ++N) {
        const SurfaceConfig cfg = random_config(N, rng);
        std::uniform_real_distribution<double> a(0.05, 0.95);
        std::vector<double> alphas;
        for (int k = 0; k + 1 < N; ++k) alphas.push_back(a(rng));
        const auto M = build_parametrix(cfg, alphas, 5);
        const auto F = build_F(M.row(1));
        const auto row2 = reconstruct_row2(F, M.row(1));
        EXPECT_LE(max_row_gap(M, row2, off_axis_points(cfg, 60, 10 + N)), 1e-8) << "N=" << N;
        EXPECT_LE(F.conjugate_residual(), 1e-12);
    }
}

TEST(SecondRow, VanishesAtInfinityOnSheetOne) {
    std::mt19937_64 rng(4);
    const SurfaceConfig cfg = random_config(2, rng);
    const auto M = build_parametrix(cfg, {0.62}, 3);
    const auto F = build_F(M.row(1));
    const double f3 = std::abs(F({cplx(1e3, 0.0), 1, Side::none}));
    const double f6 = std::abs(F({cplx(1e6, 0.0), 1, Side::none}));
    EXPECT_LE(f6, 1e-5 * f3 * 1e3);
    // O(1/z): the product with z settles.
    EXPECT_NEAR(f6 * 1e6 / (f3 * 1e3), 1.0, 1e-2);
}

TEST(SecondRow, RowTwoJumps) {
    const auto M = build_parametrix(symmetric_two_cut(), {0.3}, 7);
    const auto row2 = reconstruct_row2(build_F(M.row(1)), M.row(1));
    auto row_jump = [&](double x) {
        const auto p = row2.eval(x, Side::above), m = row2.eval(x, Side::below);
        const Mat2 J = M.jump_matrix(x);
        const cplx e0 = m[0] * J(0, 0) + m[1] * J(1, 0), e1 = m[0] * J(0, 1) + m[1] * J(1, 1);
        return std::max(std::abs(p[0] - e0), std::abs(p[1] - e1));
    };
    const auto& q = M.row(1).omega().divisor()[0];
    double worst = 0.0;
    for (double x : {-1.9, -1.5, -1.2, -0.8, -0.3, 0.3, 0.8, 1.2, 1.5, 1.9, 2.5, -3.0}) {
        if (std::abs(x - q.x) < 1e-2) continue;
        worst = std::max(worst, row_jump(x));
    }
    EXPECT_LE(worst, 1e-7);
}

TEST(SecondRow, EntriesDecayOrStayBounded) {
    const auto M = build_parametrix(symmetric_two_cut(), {0.3}, 7);
    const auto row2 = reconstruct_row2(build_F(M.row(1)), M.row(1));
    // M_22 -> 1 and M_21 = O(1/z).
    for (double r : {1e2, 1e3}) {
        const cplx z = r * cplx(0.6, 0.8);
        const auto v = row2.eval(z);
        EXPECT_LT(std::abs(v[1] - 1.0), 10.0 / r);
        EXPECT_LT(std::abs(v[0]), 10.0 / r);
    }
}

TEST(SecondRow, DimensionOfRiemannRochSpace) {
    for (int N : {2, 3}) {
        std::mt19937_64 rng(static_cast<unsigned>(20 + N));
        const SurfaceConfig cfg = random_config(N, rng);
        std::vector<double> alphas(static_cast<std::size_t>(N - 1), 0.37);
        const auto M = build_parametrix(cfg, alphas, 3);
        const auto F = build_F(M.row(1));
        const auto d = dimension_check(F);
        EXPECT_EQ(d.unknowns, N + 2);
        EXPECT_EQ(d.rank, N);
        EXPECT_EQ(d.nullity, 2);
        EXPECT_LE(d.constant_residual, 1e-12);
        EXPECT_LE(d.F_residual, 1e-12);
    }
}

TEST(SecondRow, CancellationNearDivisor) {
    const auto M = build_parametrix(symmetric_two_cut(), {0.3}, 7);
    const auto row2 = reconstruct_row2(build_F(M.row(1)), M.row(1));
    EXPECT_LT(row2.cancellation_bound(0), 1e2);
    const auto& q = M.row(1).omega().divisor()[0];
    EXPECT_THROW(row2.eval(q.x, Side::above), ContractViolation);
}

TEST(SecondRow, MismatchedRowIsDetected) {
    // F built for one divisor paired with a row 1 whose zeros sit elsewhere.
    const auto A = build_parametrix(symmetric_two_cut(), {0.3}, 7);
    const auto B = build_parametrix(symmetric_two_cut(), {0.3}, 8);
    const auto row2 = reconstruct_row2(build_F(A.row(1)), B.row(1));
    EXPECT_THROW(row2.cancellation_bound(0, 1e-7), ConstructionError);
}

TEST(SecondRow, DegenerateDivisorRejected) {
    const SurfaceConfig cfg = symmetric_two_cut();
    const AbelianEvaluator ev(build_differential(cfg, {{0, 0.0}}, 1));
    EXPECT_THROW(build_F(ev), ConstructionError);
    const AbelianEvaluator ev2(build_differential(cfg, {{0, 0.3}}, 2));
    EXPECT_THROW(build_F(ev2), ContractViolation);
}
