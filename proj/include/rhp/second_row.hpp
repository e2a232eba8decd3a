#pragma once

// Row 2 of M from row 1 alone: M_21 = M_11 F_1 and M_22 = M_12 F_2, with F
// the meromorphic function with poles at most at the nu = 1 divisor points and
// a simple pole at infinity_2, normalized by F(infinity_1) = 0 and
// M_12 F -> 1 at infinity_2. Ansatz:
//   F(z, s) = (-c Q(z) + r(z) + c w_s(z)) / prod_k (z - x_k),
// Q the polynomial part of w_1 at infinity, deg r <= N - 2.

#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "rhp/abelian.hpp"
#include "rhp/error.hpp"
#include "rhp/parametrix.hpp"
#include "rhp/series.hpp"

namespace rhp {

struct SecondRowOptions {
    double richardson_radius = 1e3; ///< m is extrapolated from R, 2R, 4R
    double blowup_limit = 1e6;     ///< products above this signal non-cancellation
};

class SecondRowFunction {
public:
    SecondRowFunction(SurfaceConfig cfg, std::vector<OvalCoords> divisor, cplx c, cplx m)
        : cfg_(std::move(cfg)), divisor_(std::move(divisor)), c_(c), m_(m) {
        const int N = cfg_.num_cuts();
        for (const auto& q : divisor_)
            if (q.at_branch || q.w == 0.0)
                throw ConstructionError(
                    "degenerate divisor: a point sits on a branch point; perturb n*alpha slightly");
        // Q(z) = sum_i s_i z^{N-i} with s the series of prod (1 - e t)^{1/2}.
        const PowerSeries sq = linear_factor_product(cfg_.endpoints(), static_cast<std::size_t>(N) + 1).sqrt();
        Q_.assign(static_cast<std::size_t>(N) + 1, 0.0);
        for (int i = 0; i <= N; ++i) Q_[static_cast<std::size_t>(N - i)] = sq[static_cast<std::size_t>(i)];
        // r(x_k) = c (Q(x_k) + w_k), solved in the monomial basis.
        const int n = N - 1;
        if (n > 0) {
            Eigen::MatrixXcd V(n, n);
            Eigen::VectorXcd rhs(n);
            for (int k = 0; k < n; ++k) {
                const double x = divisor_[static_cast<std::size_t>(k)].x;
                for (int i = 0; i < n; ++i) V(k, i) = std::pow(x, i);
                rhs(k) = c_ * (Q(x) + divisor_[static_cast<std::size_t>(k)].w);
            }
            const Eigen::VectorXcd sol = V.fullPivLu().solve(rhs);
            for (int i = 0; i < n; ++i) r_.push_back(sol(i));
        }
    }

    const SurfaceConfig& config() const { return cfg_; }
    const std::vector<OvalCoords>& divisor() const { return divisor_; }
    cplx c() const { return c_; }
    /// Extrapolated lim z M_12(z) at infinity_2.
    cplx m() const { return m_; }
    /// Q coefficients in ascending powers.
    const std::vector<double>& Q_coefficients() const { return Q_; }
    const std::vector<cplx>& r_coefficients() const { return r_; }

    template <class T>
    T Q(T z) const {
        T s = T(0.0);
        for (std::size_t i = Q_.size(); i-- > 0;) s = s * z + T(Q_[i]);
        return s;
    }

    cplx r(cplx z) const {
        cplx s = 0.0;
        for (std::size_t i = r_.size(); i-- > 0;) s = s * z + r_[i];
        return s;
    }

    cplx numerator(const SheetPoint& p) const { return -c_ * Q(p.z) + r(p.z) + c_ * branch_w(cfg_, p); }

    cplx operator()(const SheetPoint& p) const {
        cplx den = 1.0;
        for (const auto& q : divisor_) den *= (p.z - q.x);
        if (den == 0.0) throw ContractViolation("F evaluated at a divisor projection");
        return numerator(p) / den;
    }

    /// max_k |numerator at the conjugate point (x_k, -w_k)|.
    double conjugate_residual() const {
        double worst = 0.0;
        for (const auto& q : divisor_)
            worst = std::max(worst, std::abs(-c_ * Q(q.x) + r(q.x) - c_ * q.w));
        return worst;
    }

private:
    SurfaceConfig cfg_;
    std::vector<OvalCoords> divisor_;
    cplx c_;
    cplx m_;
    std::vector<double> Q_;
    std::vector<cplx> r_;
};

/// lim z M_12(z) at infinity_2 by Richardson extrapolation along the positive
/// imaginary axis: (8 f(4R) - 6 f(2R) + f(R)) / 3 with f(z) = z M_12(z).
inline cplx m12_coefficient(const AbelianEvaluator& row1, double R) {
    auto f = [&](double r) {
        const cplx z(0.0, r);
        return z * row_entries(row1, z, Side::above)[1];
    };
    return (8.0 * f(4.0 * R) - 6.0 * f(2.0 * R) + f(R)) / 3.0;
}

inline SecondRowFunction build_F(const AbelianEvaluator& row1, const SecondRowOptions& opts = {}) {
    if (row1.nu() != 1) throw ContractViolation("build_F consumes the nu = 1 row");
    const cplx m = m12_coefficient(row1, opts.richardson_radius);
    if (std::abs(m) == 0.0) throw ConstructionError("M_12 has no simple zero at infinity_2");
    // F ~ -2c z at infinity_2, so M_12 F -> -2 c m.
    return SecondRowFunction(row1.config(), row1.omega().divisor(), -1.0 / (2.0 * m), m);
}

/// Linear conditions on (p_0..p_N, c) for (p + c w) / prod (z - x_k) to lie in
/// L(D + infinity_2): regularity at the N - 1 conjugate points and at infinity_1.
struct DimensionCheck {
    int unknowns = 0;
    int conditions = 0;
    int rank = 0;
    int nullity = 0;
    std::vector<double> singular_values;
    double constant_residual = 0.0; ///< |A v| for the constant function
    double F_residual = 0.0;        ///< |A v| for the constructed F, relative
};

inline DimensionCheck dimension_check(const SecondRowFunction& F, double rank_tol = 1e-10) {
    const SurfaceConfig& cfg = F.config();
    const int N = cfg.num_cuts();
    const int unknowns = N + 2;
    const int conditions = N; // N - 1 conjugate points + the z^N coefficient at infinity_1
    Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(conditions, unknowns);
    for (int k = 0; k + 1 < N; ++k) {
        const auto& q = F.divisor()[static_cast<std::size_t>(k)];
        for (int i = 0; i <= N; ++i) A(k, i) = std::pow(q.x, i);
        A(k, N + 1) = -q.w;
    }
    A(N - 1, N) = 1.0;     // p_N
    A(N - 1, N + 1) = 1.0; // + c (leading coefficient of w_1 is 1)

    DimensionCheck out;
    out.unknowns = unknowns;
    out.conditions = conditions;
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(A);
    const auto& sv = svd.singularValues();
    for (int i = 0; i < sv.size(); ++i) out.singular_values.push_back(sv(i));
    const double top = sv.size() > 0 ? sv(0) : 0.0;
    for (int i = 0; i < sv.size(); ++i)
        if (sv(i) > rank_tol * top) ++out.rank;
    out.nullity = unknowns - out.rank;

    // The constant function: p = prod (z - x_k), c = 0.
    Eigen::VectorXcd one = Eigen::VectorXcd::Zero(unknowns);
    {
        std::vector<double> roots;
        for (const auto& q : F.divisor()) roots.push_back(q.x);
        std::vector<double> coef{1.0};
        for (double x : roots) {
            std::vector<double> next(coef.size() + 1, 0.0);
            for (std::size_t i = 0; i < coef.size(); ++i) {
                next[i + 1] += coef[i];
                next[i] -= x * coef[i];
            }
            coef = next;
        }
        for (std::size_t i = 0; i < coef.size(); ++i) one(static_cast<Eigen::Index>(i)) = coef[i];
    }
    out.constant_residual = (A * one).norm();

    // F: p = -c Q + r, coefficient of w is c.
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(unknowns);
    for (int i = 0; i <= N; ++i) v(i) = -F.c() * F.Q_coefficients()[static_cast<std::size_t>(i)];
    for (std::size_t i = 0; i < F.r_coefficients().size(); ++i) v(static_cast<Eigen::Index>(i)) += F.r_coefficients()[i];
    v(N + 1) = F.c();
    out.F_residual = (A * v).norm() / v.norm();
    return out;
}

/// Row 2 rebuilt from row 1 and F.
class ReconstructedRow2 {
public:
    ReconstructedRow2(SecondRowFunction F, const AbelianEvaluator& row1, SecondRowOptions opts = {})
        : F_(std::move(F)), row1_(row1), opts_(opts) {}

    const SecondRowFunction& F() const { return F_; }

    /// (M_21, M_22) at z; real z needs a side.
    std::array<cplx, 2> eval(cplx z, Side side = Side::none) const {
        side = half_plane(z, side);
        if (side == Side::none) throw ContractViolation("real z needs a side tag");
        for (const auto& q : F_.divisor())
            if (std::abs(z - q.x) < row1_.options().pole_guard)
                throw ContractViolation("reconstruction requested at a divisor projection");
        const auto r1 = row_entries(row1_, z, side);
        return {r1[0] * F_({z, 1, side}), r1[1] * F_({z, 2, side})};
    }

    /// Largest |M_2j| on a circle of the given radius around x_k; throws when
    /// the pole of F is not cancelled by a zero of row 1.
    double cancellation_bound(int k, double radius = 1e-3, int samples = 16) const {
        const double x = F_.divisor().at(static_cast<std::size_t>(k)).x;
        double worst = 0.0;
        for (int i = 0; i < samples; ++i) {
            const cplx z = x + radius * std::polar(1.0, 2.0 * std::numbers::pi * (i + 0.5) / samples);
            const auto v = eval(z);
            worst = std::max({worst, std::abs(v[0]), std::abs(v[1])});
        }
        if (!(worst <= opts_.blowup_limit))
            throw ConstructionError("pole of F not cancelled by row 1: inconsistent divisor sheets");
        return worst;
    }

private:
    SecondRowFunction F_;
    const AbelianEvaluator& row1_;
    SecondRowOptions opts_;
};

inline ReconstructedRow2 reconstruct_row2(const SecondRowFunction& F, const AbelianEvaluator& row1,
                                          const SecondRowOptions& opts = {}) {
    return ReconstructedRow2(F, row1, opts);
}

} // namespace rhp
