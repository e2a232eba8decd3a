#pragma once

// Abelian integrals u_j(z) = int_{infinity_nu}^{z} omega on sheet j, with the
// path rules that make exp(u_j) single-valued off the real axis.
//
// Every path starts at the anchor Z = +-iR (R = tail radius) in the half-plane
// of z. The stretch from infinity to the anchor, and any motion outside |z| = R,
// comes from the Laurent tail; everything inside is adaptive quadrature of the
// closed-form density along straight lines.

#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include "rhp/differential.hpp"
#include "rhp/error.hpp"
#include "rhp/quadrature.hpp"
#include "rhp/series.hpp"
#include "rhp/surface.hpp"

namespace rhp {

/// |d - k 2 pi i| minimized over integers k.
inline double distance_mod_2pi_i(cplx d) {
    const double turns = d.imag() / (2.0 * std::numbers::pi);
    const double im = 2.0 * std::numbers::pi * (turns - std::round(turns));
    return std::abs(cplx(d.real(), im));
}

struct AbelianOptions {
    int crossing_cut = 0;     ///< cut through which j != nu paths change sheet
    Tolerance tol{};
    double pole_guard = 1e-8; ///< refuse |z - x_k| below this when P_k is on sheet j
};

enum class IntervalKind { cut, outside, gap };

inline const char* to_string(IntervalKind k) {
    switch (k) {
    case IntervalKind::cut: return "cut";
    case IntervalKind::outside: return "outside";
    default: return "gap";
    }
}

struct JumpRecord {
    IntervalKind kind = IntervalKind::cut;
    int index = 0;                  ///< cut or gap index (-1 left of a_0, N right of b_{N-1})
    double x = 0.0;
    std::array<cplx, 2> difference; ///< law 0 / law 1 left-hand differences
    std::array<cplx, 2> expected;
    std::array<double, 2> residual;

    double max_residual() const { return std::max(residual[0], residual[1]); }
};

struct ExponentFit {
    double slope = 0.0;
    double intercept = 0.0;
    double max_deviation = 0.0; ///< largest |Re u - fit| over the samples
    bool flagged = false;
};

class AbelianEvaluator {
public:
    explicit AbelianEvaluator(MeromorphicDifferential omega, AbelianOptions opts = {})
        : omega_(std::move(omega)), opts_(opts), R_(omega_.tail_radius()) {
        const int N = omega_.config().num_cuts();
        if (opts_.crossing_cut < 0 || opts_.crossing_cut >= N) throw ContractViolation("crossing cut out of range");
        poles_ = {simple_poles(1), simple_poles(2)};
        for (int k = 0; k < omega_.config().genus(); ++k)
            beta_.push_back((omega_.b_period_collapsed(k) / (2.0 * std::numbers::pi * cplx(0.0, 1.0))).real());
        for (int j = 1; j <= 2; ++j)
            for (Side s : {Side::above, Side::below}) {
                base_[slot(j, s)] = compute_base(j, s);
                offset_[slot(j, s)] = base_[slot(j, s)] - G(j, anchor(s), s);
            }
    }

    const MeromorphicDifferential& omega() const { return omega_; }
    const SurfaceConfig& config() const { return omega_.config(); }
    const AbelianOptions& options() const { return opts_; }
    int nu() const { return omega_.nu(); }
    double anchor_radius() const { return R_; }
    cplx anchor(Side s) const { return cplx(0.0, s == Side::below ? -R_ : R_); }
    /// Unreduced B-periods over 2 pi i (real parts).
    const std::vector<double>& beta() const { return beta_; }

    /// u_j at the anchor of half-plane s.
    cplx base(int j, Side s) const {
        check_sheet(j);
        return base_[slot(j, s)];
    }

    /// True if sheet j has a divisor pole within the guard radius of z.
    bool near_pole(int j, cplx z) const {
        for (const auto& q : omega_.divisor())
            if (!q.at_branch && q.sheet == j && std::abs(z - q.x) < opts_.pole_guard) return true;
        return false;
    }

    /// u_j(z); real z needs a side, which selects the boundary value.
    cplx u(int j, cplx z, Side side = Side::none) const {
        check_sheet(j);
        if (z.imag() != 0.0) side = z.imag() > 0.0 ? Side::above : Side::below;
        else if (side == Side::none) throw ContractViolation("real z needs a side tag");
        else z = cplx(z.real(), 0.0);
        for (double e : config().endpoints())
            if (z == cplx(e, 0.0)) throw ContractViolation("u is singular at a branch point");
        if (near_pole(j, z)) throw ContractViolation("u requested adjacent to a divisor pole on its sheet");
        if (std::abs(z) >= R_) return offset_[slot(j, side)] + G(j, z, side);
        return base(j, side) + line_integral(j, anchor(side), z);
    }

    cplx u(const SheetPoint& p) const { return u(p.sheet, p.z, p.side); }

    /// Which interval of the real axis x lies in; throws at endpoints.
    std::pair<IntervalKind, int> classify(double x) const {
        const SurfaceConfig& cfg = config();
        const int N = cfg.num_cuts();
        if (x < cfg.a(0)) return {IntervalKind::outside, -1};
        if (x > cfg.b(N - 1)) return {IntervalKind::outside, N};
        for (int k = 0; k < N; ++k) {
            if (x > cfg.a(k) && x < cfg.b(k)) return {IntervalKind::cut, k};
            if (k + 1 < N && x > cfg.b(k) && x < cfg.a(k + 1)) return {IntervalKind::gap, k};
        }
        throw ContractViolation("x is a branch point");
    }

    /// Residuals, mod 2 pi i, of the jump laws at x. On a cut the laws are
    /// u_{1,+} = u_{2,-} and u_{2,+} = u_{1,-}; elsewhere law j-1 compares
    /// u_{j,+} - u_{j,-} with its prescribed constant.
    JumpRecord check_jumps(double x, IntervalKind which) const {
        const auto [kind, index] = classify(x);
        if (kind != which) throw ContractViolation("x does not lie in an interval of the declared kind");
        JumpRecord rec;
        rec.kind = kind;
        rec.index = index;
        rec.x = x;
        const cplx I(0.0, 1.0);
        const double pi = std::numbers::pi;
        for (int j = 1; j <= 2; ++j) {
            const auto l = static_cast<std::size_t>(j - 1);
            if (kind == IntervalKind::cut) {
                rec.difference[l] = u(j, x, Side::above) - u(3 - j, x, Side::below);
                rec.expected[l] = 0.0;
            } else {
                if (near_pole(j, x)) throw ContractViolation("x collides with a divisor pole on the evaluated sheet");
                rec.difference[l] = u(j, x, Side::above) - u(j, x, Side::below);
                cplx e = j == nu() ? cplx(0.0) : pi * I;
                if (kind == IntervalKind::gap) {
                    const double b = beta_[static_cast<std::size_t>(index)];
                    e += (j == 1 ? -2.0 : 2.0) * pi * I * b;
                }
                rec.expected[l] = e;
            }
            rec.residual[l] = distance_mod_2pi_i(rec.difference[l] - rec.expected[l]);
        }
        return rec;
    }

    /// Least-squares slope of Re u_j against log r along center + r e^{i pi/4},
    /// r = 1e-3 .. 1e-6.
    ExponentFit local_exponent(int j, double center, int samples = 13) const {
        check_sheet(j);
        if (samples < 3) throw ContractViolation("need at least three samples");
        std::vector<double> lx, ly;
        for (int i = 0; i < samples; ++i) {
            const double r = std::pow(10.0, -3.0 - 3.0 * i / (samples - 1));
            const cplx z = center + r * std::polar(1.0, 0.25 * std::numbers::pi);
            lx.push_back(std::log(r));
            ly.push_back(u(j, z).real());
        }
        double mx = 0.0, my = 0.0;
        for (int i = 0; i < samples; ++i) {
            mx += lx[static_cast<std::size_t>(i)];
            my += ly[static_cast<std::size_t>(i)];
        }
        mx /= samples;
        my /= samples;
        double sxy = 0.0, sxx = 0.0;
        for (int i = 0; i < samples; ++i) {
            const double dx = lx[static_cast<std::size_t>(i)] - mx;
            sxy += dx * (ly[static_cast<std::size_t>(i)] - my);
            sxx += dx * dx;
        }
        ExponentFit fit;
        fit.slope = sxy / sxx;
        fit.intercept = my - fit.slope * mx;
        for (int i = 0; i < samples; ++i)
            fit.max_deviation = std::max(fit.max_deviation, std::abs(ly[static_cast<std::size_t>(i)] - fit.intercept -
                                                                     fit.slope * lx[static_cast<std::size_t>(i)]));
        fit.flagged = fit.max_deviation > 1e-2;
        return fit;
    }

private:
    static std::size_t slot(int j, Side s) { return static_cast<std::size_t>(2 * (j - 1) + (s == Side::below ? 1 : 0)); }

    static void check_sheet(int j) {
        if (j != 1 && j != 2) throw ContractViolation("sheet index must be 1 or 2");
    }

    // The defining path to the anchor of half-plane s.
    cplx compute_base(int j, Side s) const {
        const int v = nu();
        if (j == v) return G(v, anchor(s), s);
        // Start in the opposite half-plane of sheet nu, change sheet at the
        // midpoint of the crossing cut, finish in half-plane s of sheet j.
        const Side o = flip(s);
        const int k = opts_.crossing_cut;
        const cplx p = 0.5 * (config().a(k) + config().b(k));
        cplx total = G(v, anchor(o), o);
        total += line_integral(v, anchor(o), p);
        total += line_integral(j, p, anchor(s));
        return total;
    }

    // Tail antiderivative on sheet j, log argument in half-plane s.
    cplx G(int j, cplx z, Side s) const { return tail_integral(omega_.tail(j), z, s).value; }

    // Coefficients r of r/(z - p) in the density on sheet j at real points p:
    // -1/4 at a free branch point, +1/4 where a divisor point sits on one,
    // +1 at a divisor point on sheet j.
    std::vector<std::pair<double, double>> simple_poles(int j) const {
        std::vector<std::pair<double, double>> out;
        for (double e : config().endpoints()) {
            double r = -0.25;
            for (const auto& q : omega_.divisor())
                if (q.at_branch && q.x == e) r += 0.5;
            out.emplace_back(e, r);
        }
        for (const auto& q : omega_.divisor())
            if (!q.at_branch && q.sheet == j) out.emplace_back(q.x, 1.0);
        return out;
    }

    // Straight line z0 -> z1 on sheet j. A real endpoint is reached from the
    // half-plane of the other endpoint. The simple-pole parts are integrated
    // in closed form, which keeps endpoints near a pole free of parametrization
    // roundoff.
    cplx line_integral(int j, cplx z0, cplx z1) const {
        const Path path({line_segment(z0, z1, j)});
        const Side side = path.segments().front().interior_side();
        const auto& poles = poles_[static_cast<std::size_t>(j - 1)];
        auto f = [&](const SheetPoint& p) {
            cplx v = omega_.density(p);
            for (const auto& [x, r] : poles) v -= r / (p.z - x);
            return v;
        };
        cplx total = integrate_path(f, path, opts_.tol).value;
        for (const auto& [x, r] : poles) total += r * (half_plane_log(z1 - x, side) - half_plane_log(z0 - x, side));
        return total;
    }

    MeromorphicDifferential omega_;
    AbelianOptions opts_;
    double R_;
    std::vector<double> beta_;
    std::array<std::vector<std::pair<double, double>>, 2> poles_;
    std::array<cplx, 4> base_{};
    std::array<cplx, 4> offset_{};
};

} // namespace rhp
