#pragma once

// The third-kind differential omega = [A(z) + B(z)/w] dz with residues -1/2 at
// every branch point, +1 at each divisor point P_j, +1 at the infinity
// opposite to nu, holomorphic at infinity_nu and with vanishing A-periods.
//
//   A(z) = -W'(z)/(4 W(z)) + sum_j (1/2)/(z - x_j)
//   B(z) = sum_j (w_j/2)/(z - x_j) + c z^{N-1} + sum_i gamma_i z^{i-1}

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numeric>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rhp/error.hpp"
#include "rhp/quadrature.hpp"
#include "rhp/series.hpp"
#include "rhp/surface.hpp"

namespace rhp {

/// Exact residues are half-integers; a tiny rational type keeps sums exact.
struct Rational {
    long num = 0;
    long den = 1;

    constexpr Rational() = default;
    constexpr Rational(long n, long d = 1) : num(n), den(d) {
        if (den < 0) {
            num = -num;
            den = -den;
        }
        const long g = std::gcd(num < 0 ? -num : num, den);
        if (g > 1) {
            num /= g;
            den /= g;
        }
    }
    constexpr double value() const { return static_cast<double>(num) / static_cast<double>(den); }
    friend constexpr Rational operator+(Rational a, Rational b) {
        return Rational(a.num * b.den + b.num * a.den, a.den * b.den);
    }
    friend constexpr bool operator==(Rational a, Rational b) { return a.num == b.num && a.den == b.den; }
};

/// Identifies a pole of omega on the surface.
struct PoleId {
    enum class Kind { branch, divisor, infinity };
    Kind kind = Kind::branch;
    /// branch: endpoint index (2k -> a_k, 2k+1 -> b_k); divisor: gap; infinity: sheet.
    int index = 0;

    friend bool operator==(const PoleId& a, const PoleId& b) {
        return a.kind == b.kind && a.index == b.index;
    }
};

struct PoleResidue {
    PoleId pole;
    Rational residue;
};

struct DifferentialOptions {
    Tolerance tol{};
    std::size_t tail_order = 20;
    double max_condition = 1e12;
};

enum class CycleKind { A, B };

/// A_j threads cuts j and j+1 around gap j; B_k encircles cuts 0..k on sheet 1
/// and crosses the real axis inside gap k.
struct Cycle {
    CycleKind kind = CycleKind::A;
    int index = 0;
};

enum class PeriodMethod { direct, collapsed };

class MeromorphicDifferential {
public:
    MeromorphicDifferential(SurfaceConfig cfg, std::vector<OvalPoint> points, int nu,
                            DifferentialOptions opts = {})
        : cfg_(std::move(cfg)), points_(std::move(points)), nu_(nu), opts_(opts) {
        if (nu_ != 1 && nu_ != 2) throw ContractViolation("nu must be 1 or 2");
        const int g = cfg_.genus();
        if (static_cast<int>(points_.size()) != g)
            throw ContractViolation("need exactly one divisor point per gap");
        std::sort(points_.begin(), points_.end(),
                  [](const OvalPoint& a, const OvalPoint& b) { return a.gap < b.gap; });
        for (int j = 0; j < g; ++j) {
            if (points_[static_cast<std::size_t>(j)].gap != j)
                throw ContractViolation("need exactly one divisor point per gap");
            points_[static_cast<std::size_t>(j)].theta =
                normalize_theta(points_[static_cast<std::size_t>(j)].theta);
            coords_.push_back(oval_coords(cfg_, points_[static_cast<std::size_t>(j)]));
        }
        c_ = nu_ == 1 ? 0.5 : -0.5;
        solve_gamma();
        tails_[0] = make_tail(1);
        tails_[1] = make_tail(2);
    }

    const SurfaceConfig& config() const { return cfg_; }
    int nu() const { return nu_; }
    double c() const { return c_; }
    const std::vector<double>& gamma() const { return gamma_; }
    const std::vector<OvalPoint>& points() const { return points_; }
    const std::vector<OvalCoords>& divisor() const { return coords_; }
    double condition_number() const { return condition_; }
    const DifferentialOptions& options() const { return opts_; }
    /// Radius beyond which the density on sheet nu is taken from its Laurent series.
    double tail_radius() const { return 2.0 * cfg_.r0(); }
    const LaurentTail& tail(int sheet) const { return tails_.at(static_cast<std::size_t>(sheet - 1)); }

    cplx A(cplx z) const {
        cplx s = -0.25 * cfg_.log_derivative_W(z);
        for (const auto& q : coords_) s += 0.5 / (z - q.x);
        return s;
    }

    /// Polynomial part c z^{N-1} + sum gamma_i z^{i-1}.
    template <class T>
    T B_poly(T z) const {
        T s = T(c_);
        for (std::size_t i = gamma_.size(); i-- > 0;) s = s * z + T(gamma_[i]);
        return s;
    }

    template <class T>
    T B(T z) const {
        T s = B_poly(z);
        for (const auto& q : coords_)
            if (q.w != 0.0) s += T(0.5 * q.w) / (z - q.x);
        return s;
    }

    /// A(z) + B(z)/w evaluated from the closed form on the requested sheet and side.
    cplx density_closed_form(const SheetPoint& p) const {
        reject_pole(p);
        const cplx w = branch_w(cfg_, p);
        if (w == 0.0) throw ContractViolation("density requested at a branch point");
        return A(p.z) + B(p.z) / w;
    }

    /// dz-density of omega; on sheet nu beyond tail_radius() the Laurent series is used.
    cplx density(const SheetPoint& p) const {
        if (p.sheet == nu_ && std::abs(p.z) > tail_radius()) return tail(nu_).density(p.z);
        return density_closed_form(p);
    }

    Rational residue_at(const PoleId& pole) const {
        switch (pole.kind) {
        case PoleId::Kind::branch: {
            if (pole.index < 0 || pole.index >= 2 * cfg_.num_cuts())
                throw ContractViolation("branch point index out of range");
            return merged_at(pole.index) ? Rational(1, 2) : Rational(-1, 2);
        }
        case PoleId::Kind::divisor: {
            if (pole.index < 0 || pole.index >= cfg_.genus())
                throw ContractViolation("divisor index out of range");
            return coords_[static_cast<std::size_t>(pole.index)].at_branch ? Rational(1, 2)
                                                                           : Rational(1);
        }
        case PoleId::Kind::infinity:
            if (pole.index == 3 - nu_) return Rational(1);
            throw ContractViolation("omega is holomorphic at infinity_nu");
        }
        throw ContractViolation("unknown pole kind");
    }

    /// The pole set with residues. A divisor point sitting on a branch point is
    /// listed once, as a divisor pole carrying the merged residue +1/2.
    std::vector<PoleResidue> pole_set() const {
        std::vector<PoleResidue> out;
        for (int e = 0; e < 2 * cfg_.num_cuts(); ++e) {
            if (merged_at(e)) continue;
            out.push_back({{PoleId::Kind::branch, e}, Rational(-1, 2)});
        }
        for (int j = 0; j < cfg_.genus(); ++j) {
            const PoleId id{PoleId::Kind::divisor, j};
            out.push_back({id, residue_at(id)});
        }
        out.push_back({{PoleId::Kind::infinity, 3 - nu_}, Rational(1)});
        return out;
    }

    /// 2 PV int_{gap j} B/w_1 dx.
    double a_period_collapsed(int j) const {
        check_gap(j);
        return 2.0 * (fixed_gap_integral(j) + basis_dot(j));
    }

    /// Collapsed B_k period, crossing gap k at b_k + delta.
    cplx b_period_collapsed(int k) const {
        check_gap(k);
        cplx total = 0.0;
        for (int i = 0; i <= k; ++i) total += -2.0 * cut_integral(i);
        total += 2.0 * std::numbers::pi * cplx(0.0, 1.0) * b_offset(k).value();
        return total;
    }

    /// Half-integer residue offset of the collapsed B_k period, in units of 2 pi i.
    Rational b_offset(int k) const {
        check_gap(k);
        Rational r(-1, 2);
        for (int l = 0; l < k; ++l) r = r + Rational(sheet_sign(l), 2);
        if (coords_[static_cast<std::size_t>(k)].x < crossing(k)) r = r + Rational(1 + sheet_sign(k), 2);
        return r;
    }

    /// Real-axis crossing point of B_k inside gap k.
    double crossing(int k) const { return cfg_.b(k) + clearance(); }
    /// Clearance of the direct B contours: a quarter of the smallest gap.
    double clearance() const { return 0.25 * cfg_.min_gap(); }

    /// +1 when P_l is on sheet 1, -1 on sheet 2, 0 at a branch point.
    int sheet_sign(int l) const {
        const auto& q = coords_.at(static_cast<std::size_t>(l));
        if (q.at_branch) return 0;
        return q.sheet == 1 ? 1 : -1;
    }

private:
    void check_gap(int j) const {
        if (j < 0 || j >= cfg_.genus()) throw ContractViolation("cycle index out of range");
    }

    bool merged_at(int endpoint) const {
        const double e = cfg_.endpoints().at(static_cast<std::size_t>(endpoint));
        for (const auto& q : coords_)
            if (q.at_branch && q.x == e) return true;
        return false;
    }

    void reject_pole(const SheetPoint& p) const {
        if (p.z.imag() != 0.0) return;
        for (const auto& q : coords_) {
            if (p.z.real() != q.x) continue;
            if (q.at_branch || q.sheet == p.sheet)
                throw ContractViolation("density requested at a pole of omega");
        }
    }

    // Gap j in the angle phi: x = m - h cos(phi), w_1 = sigma_j h sin(phi) sqrt(g_j(x)),
    // dx = h sin(phi) dphi, so (stuff)/w_1 dx = stuff / (sigma_j sqrt(g_j)) dphi.
    double gap_mid(int j) const { return 0.5 * (cfg_.b(j) + cfg_.a(j + 1)); }
    double gap_half(int j) const { return 0.5 * (cfg_.a(j + 1) - cfg_.b(j)); }

    // int_{gap j} x^{i} / w_1 dx for i = 0..N-2.
    std::vector<double> basis_gap_integrals(int j) const {
        const int n = cfg_.genus();
        std::vector<double> out(static_cast<std::size_t>(n), 0.0);
        const RootProduct g = cfg_.gap_reduced(j);
        const double sigma = cfg_.gap_sign(j);
        const double m = gap_mid(j), h = gap_half(j);
        for (int i = 0; i < n; ++i) {
            auto f = [&](double phi) {
                const double x = m - h * std::cos(phi);
                return std::pow(x, i) / (sigma * std::sqrt(g(x)));
            };
            out[static_cast<std::size_t>(i)] = integrate_interval(f, 0.0, std::numbers::pi, opts_.tol).value;
        }
        return out;
    }

    double basis_dot(int j) const {
        const auto b = basis_gap_integrals(j);
        double s = 0.0;
        for (std::size_t i = 0; i < gamma_.size(); ++i) s += gamma_[i] * b[i];
        return s;
    }

    // PV int_{gap j} [c x^{N-1} + sum_k (w_k/2)/(x - x_k)] / w_1 dx.
    // The own pole is handled through H_j(phi) = sin(phi_j) / (4 sin((phi+phi_j)/2) sin((phi-phi_j)/2)),
    // whose principal value over [0, pi] vanishes; what remains is smooth.
    double fixed_gap_integral(int j) const {
        const RootProduct g = cfg_.gap_reduced(j);
        const double sigma = cfg_.gap_sign(j);
        const double m = gap_mid(j), h = gap_half(j);
        const int N = cfg_.num_cuts();
        const OvalCoords& own = coords_[static_cast<std::size_t>(j)];
        const double s_own = std::sin(own.phi);
        const double g_own = g(own.x);
        const double rg_own = std::sqrt(std::max(g_own, 0.0));
        auto f = [&](double phi) {
            const double x = m - h * std::cos(phi);
            const double gx = g(x);
            const double rg = std::sqrt(gx);
            double num = c_ * std::pow(x, N - 1);
            for (int k = 0; k < cfg_.genus(); ++k) {
                if (k == j) continue;
                const auto& q = coords_[static_cast<std::size_t>(k)];
                if (q.w != 0.0) num += 0.5 * q.w / (x - q.x);
            }
            double val = num / (sigma * rg);
            if (s_own != 0.0 && !own.at_branch)
                val -= h * s_own * g.divided_difference(own.x, x) / (2.0 * (rg_own + rg) * rg);
            return val;
        };
        return integrate_interval(f, 0.0, std::numbers::pi, opts_.tol).value;
    }

    void solve_gamma() {
        const int n = cfg_.genus();
        if (n == 0) return;
        Eigen::MatrixXd M(n, n);
        Eigen::VectorXd rhs(n);
        for (int j = 0; j < n; ++j) {
            const auto row = basis_gap_integrals(j);
            for (int i = 0; i < n; ++i) M(j, i) = row[static_cast<std::size_t>(i)];
            rhs(j) = -fixed_gap_integral(j);
        }
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
        const auto& sv = svd.singularValues();
        condition_ = sv(n - 1) > 0.0 ? sv(0) / sv(n - 1) : std::numeric_limits<double>::infinity();
        if (!(condition_ <= opts_.max_condition))
            throw ConstructionError("holomorphic A-period matrix is singular or ill-conditioned");
        const Eigen::VectorXd x = M.partialPivLu().solve(rhs);
        gamma_.assign(x.data(), x.data() + n);
    }

    // I_i = int_{cut i} B / w_{1,+} dx = -i tau_i int_0^pi B(x(psi)) / sqrt(g_i(x)) dpsi,
    // x = m - rho cos(psi). Divisor points close to the cut have their pole term
    // split into a closed-form part and a smooth remainder.
    cplx cut_integral(int i) const {
        const RootProduct g = cfg_.cut_reduced(i);
        const double a = cfg_.a(i), b = cfg_.b(i);
        const double m = 0.5 * (a + b), rho = 0.5 * (b - a);
        struct Near {
            double x, half_w, g_at, rg_at;
        };
        std::vector<Near> near;
        std::vector<const OvalCoords*> far;
        for (int l = 0; l < cfg_.genus(); ++l) {
            const auto& q = coords_[static_cast<std::size_t>(l)];
            if (q.w == 0.0) continue;
            const bool right = l == i && q.x < gap_mid(l);
            const bool left = l == i - 1 && q.x > gap_mid(l);
            if (right || left) {
                const double ga = g(q.x);
                near.push_back({q.x, 0.5 * q.w, ga, std::sqrt(ga)});
            } else {
                far.push_back(&q);
            }
        }
        double closed = 0.0;
        for (const auto& p : near) {
            const double sgn = m > p.x ? 1.0 : -1.0;
            closed += p.half_w / p.rg_at * sgn * std::numbers::pi / std::sqrt((a - p.x) * (b - p.x));
        }
        auto f = [&](double psi) {
            const double x = m - rho * std::cos(psi);
            const double gx = g(x);
            const double rg = std::sqrt(gx);
            double num = B_poly(x);
            for (const OvalCoords* q : far) num += 0.5 * q->w / (x - q->x);
            double val = num / rg;
            for (const auto& p : near)
                val -= p.half_w * g.divided_difference(p.x, x) / (rg * p.rg_at * (p.rg_at + rg));
            return val;
        };
        const double real_part = integrate_interval(f, 0.0, std::numbers::pi, opts_.tol).value + closed;
        return cplx(0.0, -cfg_.cut_sign(i) * real_part);
    }

    LaurentTail make_tail(int sheet) const {
        const std::size_t K = opts_.tail_order;
        const int N = cfg_.num_cuts();
        const double sigma = sheet == 1 ? 1.0 : -1.0;
        const PowerSeries S = linear_factor_product(cfg_.endpoints(), K).sqrt().inverse();
        std::vector<double> bt(K, 0.0);
        for (std::size_t l = 0; l < K; ++l) {
            const int li = static_cast<int>(l);
            if (li == 0) bt[l] = c_;
            else if (li < N) bt[l] = gamma_[static_cast<std::size_t>(N - 1 - li)];
            else
                for (const auto& q : coords_) bt[l] += 0.5 * q.w * std::pow(q.x, li - N);
        }
        LaurentTail t;
        t.radius = tail_radius();
        t.coeffs.assign(K + 1, 0.0);
        for (std::size_t mm = 1; mm <= K; ++mm) {
            const int p = static_cast<int>(mm) - 1;
            double power_sum = 0.0;
            for (double e : cfg_.endpoints()) power_sum += std::pow(e, p);
            double alpha = -0.25 * power_sum;
            for (const auto& q : coords_) alpha += 0.5 * std::pow(q.x, p);
            double conv = 0.0;
            for (std::size_t l = 0; l < mm; ++l) conv += S[mm - 1 - l] * bt[l];
            t.coeffs[mm] = alpha + sigma * conv;
        }
        // The leading coefficient on the holomorphic sheet is exactly zero.
        if (sheet == nu_) t.coeffs[1] = 0.0;
        return t;
    }

    SurfaceConfig cfg_;
    std::vector<OvalPoint> points_;
    std::vector<OvalCoords> coords_;
    int nu_;
    DifferentialOptions opts_;
    double c_ = 0.5;
    std::vector<double> gamma_;
    double condition_ = 1.0;
    std::array<LaurentTail, 2> tails_;
};

inline MeromorphicDifferential build_differential(const SurfaceConfig& cfg, const std::vector<OvalPoint>& points,
                                                  int nu, const DifferentialOptions& opts = {}) {
    return MeromorphicDifferential(cfg, points, nu, opts);
}

/// Direct contour for a cycle, with the 2 pi i multiple that reconciles it with
/// the collapsed convention when the clearance had to be widened.
struct CycleContour {
    Path path;
    cplx correction = 0.0; ///< subtract from the contour integral
};

inline CycleContour direct_contour(const MeromorphicDifferential& omega, const Cycle& cycle) {
    const SurfaceConfig& cfg = omega.config();
    if (cycle.index < 0 || cycle.index >= cfg.genus()) throw ContractViolation("cycle index out of range");
    const double pi = std::numbers::pi;
    CycleContour out;
    if (cycle.kind == CycleKind::A) {
        const int j = cycle.index;
        const double p = 0.5 * (cfg.a(j) + cfg.b(j));
        const double q = 0.5 * (cfg.a(j + 1) + cfg.b(j + 1));
        const cplx center(0.5 * (p + q), 0.0);
        const double r = 0.5 * (q - p);
        out.path = Path({arc_segment(center, r, pi, 0.0, 1), arc_segment(center, r, 0.0, -pi, 2)});
        return out;
    }
    const int k = cycle.index;
    double delta = omega.clearance();
    const double base = omega.crossing(k);
    const auto& xk = omega.divisor()[static_cast<std::size_t>(k)];
    if (omega.sheet_sign(k) == 1 && std::abs(xk.x - base) < 0.5 * delta) {
        delta *= 2.0;
        if (xk.x >= base && xk.x < cfg.b(k) + delta) out.correction = cplx(0.0, 2.0 * pi);
    }
    const double left = cfg.a(0), right = cfg.b(k);
    const cplx i(0.0, 1.0);
    std::vector<Segment> segs;
    segs.push_back(line_segment(left - i * delta, right - i * delta, 1));
    segs.push_back(arc_segment(right, delta, -0.5 * pi, 0.0, 1));
    segs.push_back(arc_segment(right, delta, 0.0, 0.5 * pi, 1));
    segs.push_back(line_segment(right + i * delta, left + i * delta, 1));
    segs.push_back(arc_segment(left, delta, 0.5 * pi, pi, 1));
    segs.push_back(arc_segment(left, delta, pi, 1.5 * pi, 1));
    out.path = Path(std::move(segs));
    return out;
}

inline cplx period(const MeromorphicDifferential& omega, const Cycle& cycle, PeriodMethod method) {
    if (method == PeriodMethod::collapsed) {
        if (cycle.kind == CycleKind::A) return omega.a_period_collapsed(cycle.index);
        return omega.b_period_collapsed(cycle.index);
    }
    const CycleContour contour = direct_contour(omega, cycle);
    auto f = [&](const SheetPoint& p) { return omega.density_closed_form(p); };
    return integrate_path(f, contour.path, omega.options().tol).value - contour.correction;
}

} // namespace rhp
