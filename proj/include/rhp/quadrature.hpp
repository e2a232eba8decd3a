#pragma once

// Adaptive Gauss-Kronrod quadrature on intervals and piecewise-analytic
// contours, plus the principal-value and inverse-square-root endpoint rules.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <queue>
#include <type_traits>
#include <utility>
#include <vector>

#include "rhp/error.hpp"
#include "rhp/surface.hpp"

namespace rhp {

struct Tolerance {
    double abs_tol = 1e-13;
    double rel_tol = 1e-12;
    int max_depth = 50;
    int max_intervals = 20000;

    void check() const {
        if (!(abs_tol > 0.0) || !(rel_tol > 0.0)) throw ContractViolation("tolerances must be > 0");
        if (max_depth > 60 || max_depth < 1) throw ContractViolation("max_depth must be in [1, 60]");
    }
};

template <class T>
struct QuadResult {
    T value{};
    double error = 0.0;
    long evaluations = 0;
};

namespace detail {

inline constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
// Gauss weights at the odd Kronrod nodes kXgk[1], kXgk[3], kXgk[5], kXgk[7].
inline constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

inline double magnitude(double v) { return std::abs(v); }
inline double magnitude(const cplx& v) { return std::abs(v); }

template <class T>
struct Panel {
    double lo, hi;
    T value;
    double error;
    int depth;
    bool roundoff_limited;
    bool operator<(const Panel& o) const { return error < o.error; }
};

template <class T, class F>
Panel<T> kronrod15(F& f, double lo, double hi, int depth) {
    const double c = 0.5 * (lo + hi);
    const double h = 0.5 * (hi - lo);
    T fc = f(c);
    T k = fc * kWgk[7];
    T g = fc * kWg[3];
    double absk = magnitude(fc) * kWgk[7];
    for (int i = 0; i < 7; ++i) {
        const double dx = h * kXgk[static_cast<std::size_t>(i)];
        const T f1 = f(c - dx);
        const T f2 = f(c + dx);
        k += (f1 + f2) * kWgk[static_cast<std::size_t>(i)];
        absk += (magnitude(f1) + magnitude(f2)) * kWgk[static_cast<std::size_t>(i)];
        if (i % 2 == 1) g += (f1 + f2) * kWg[static_cast<std::size_t>(i / 2)];
    }
    Panel<T> p{lo, hi, k * h, 0.0, depth, false};
    const double resabs = absk * std::abs(h);
    const double roundoff = 50.0 * std::numeric_limits<double>::epsilon() * resabs;
    const double gap = magnitude((k - g) * h);
    p.roundoff_limited = gap <= roundoff;
    p.error = std::max(gap, roundoff);
    return p;
}

// Neumaier-compensated summation of panel values in left-to-right order.
template <class T>
T ordered_sum(std::vector<Panel<T>>& panels) {
    std::sort(panels.begin(), panels.end(),
              [](const Panel<T>& a, const Panel<T>& b) { return a.lo < b.lo; });
    T sum{}, comp{};
    for (const auto& p : panels) {
        const T t = sum + p.value;
        if constexpr (std::is_same_v<T, double>) {
            comp += std::abs(sum) >= std::abs(p.value) ? (sum - t) + p.value : (p.value - t) + sum;
        } else {
            const double tr = sum.real() + p.value.real();
            const double ti = sum.imag() + p.value.imag();
            const double cr = std::abs(sum.real()) >= std::abs(p.value.real())
                                  ? (sum.real() - tr) + p.value.real()
                                  : (p.value.real() - tr) + sum.real();
            const double ci = std::abs(sum.imag()) >= std::abs(p.value.imag())
                                  ? (sum.imag() - ti) + p.value.imag()
                                  : (p.value.imag() - ti) + sum.imag();
            comp += T(cr, ci);
        }
        sum = t;
    }
    return sum + comp;
}

} // namespace detail

/// Globally adaptive G7/K15 quadrature of f over [lo, hi]. The returned error
/// is the sum of |K15 - G7| panel estimates (floored at roundoff level).
template <class F>
auto integrate_interval(F&& f, double lo, double hi, const Tolerance& tol = {})
    -> QuadResult<std::decay_t<decltype(f(lo))>> {
    using T = std::decay_t<decltype(f(lo))>;
    tol.check();
    QuadResult<T> out;
    if (lo == hi) return out;
    long evals = 0;
    auto counted = [&](double x) {
        ++evals;
        return f(x);
    };
    std::priority_queue<detail::Panel<T>> open;
    std::vector<detail::Panel<T>> settled;
    T total{};
    double total_err = 0.0;
    auto admit = [&](detail::Panel<T> p) {
        total += p.value;
        total_err += p.error;
        if (p.roundoff_limited) settled.push_back(p);
        else open.push(p);
    };
    admit(detail::kronrod15<T>(counted, lo, hi, 0));
    int count = 1;
    while (!open.empty()) {
        const double target = std::max(tol.abs_tol, tol.rel_tol * detail::magnitude(total));
        if (total_err <= target) break;
        detail::Panel<T> worst = open.top();
        open.pop();
        const double mid = 0.5 * (worst.lo + worst.hi);
        if (worst.depth >= tol.max_depth || count >= tol.max_intervals || mid <= worst.lo ||
            mid >= worst.hi) {
            throw NonConvergence("adaptive quadrature exceeded its subdivision budget", total_err);
        }
        total -= worst.value;
        total_err -= worst.error;
        admit(detail::kronrod15<T>(counted, worst.lo, mid, worst.depth + 1));
        admit(detail::kronrod15<T>(counted, mid, worst.hi, worst.depth + 1));
        ++count;
    }
    std::vector<detail::Panel<T>> all = std::move(settled);
    while (!open.empty()) {
        all.push_back(open.top());
        open.pop();
    }
    double err = 0.0;
    for (const auto& p : all) err += p.error;
    out.value = detail::ordered_sum(all);
    out.error = err;
    out.evaluations = evals;
    return out;
}

/// One analytic piece of a contour: a line segment or a circular arc.
/// `side` marks a boundary-value segment lying on the real axis.
struct Segment {
    enum class Kind { line, arc };
    Kind kind = Kind::line;
    cplx start{}, end{};
    cplx center{};
    double radius = 0.0, angle0 = 0.0, angle1 = 0.0;
    int sheet = 1;
    Side side = Side::none;

    cplx point(double t) const {
        // Lines are parametrized from the nearer endpoint, so points close to
        // an endpoint singularity keep their distance to it exactly.
        if (kind == Kind::line) return t <= 0.5 ? start + t * (end - start) : end - (1.0 - t) * (end - start);
        return center + radius * std::polar(1.0, angle0 + t * (angle1 - angle0));
    }
    cplx derivative(double t) const {
        if (kind == Kind::line) return end - start;
        const double a = angle0 + t * (angle1 - angle0);
        return cplx(0.0, 1.0) * radius * (angle1 - angle0) * std::polar(1.0, a);
    }
    cplx first() const { return point(0.0); }
    cplx last() const { return point(1.0); }

    /// Half-plane of the segment interior, used to pin boundary values robustly.
    Side interior_side() const {
        if (side != Side::none) return side;
        const double im = point(0.5).imag();
        return im > 0.0 ? Side::above : (im < 0.0 ? Side::below : Side::none);
    }
};

inline Segment line_segment(cplx z0, cplx z1, int sheet, Side side = Side::none) {
    Segment s;
    s.kind = Segment::Kind::line;
    s.start = z0;
    s.end = z1;
    s.sheet = sheet;
    s.side = side;
    return s;
}

inline Segment arc_segment(cplx center, double radius, double angle0, double angle1, int sheet) {
    Segment s;
    s.kind = Segment::Kind::arc;
    s.center = center;
    s.radius = radius;
    s.angle0 = angle0;
    s.angle1 = angle1;
    s.sheet = sheet;
    s.start = s.point(0.0);
    s.end = s.point(1.0);
    return s;
}

namespace detail {

inline bool arc_crosses_axis(const Segment& s) {
    const double q = -s.center.imag() / s.radius;
    if (std::abs(q) > 1.0) return false;
    const double lo = std::min(s.angle0, s.angle1);
    const double hi = std::max(s.angle0, s.angle1);
    const double margin = 1e-12 * std::max(1.0, hi - lo);
    const double base[2] = {std::asin(q), std::numbers::pi - std::asin(q)};
    for (double r : base) {
        const double k0 = std::floor((lo - r) / (2.0 * std::numbers::pi)) - 1.0;
        for (double k = k0; k <= k0 + 3.0; k += 1.0) {
            const double t = r + 2.0 * std::numbers::pi * k;
            if (t > lo + margin && t < hi - margin) return true;
        }
    }
    return false;
}

} // namespace detail

/// Chain of segments with matching endpoints.
class Path {
public:
    Path() = default;
    explicit Path(std::vector<Segment> segments) : segments_(std::move(segments)) {
        for (std::size_t i = 0; i < segments_.size(); ++i) {
            const Segment& s = segments_[i];
            if (s.sheet != 1 && s.sheet != 2) throw ContractViolation("segment sheet must be 1 or 2");
            if (i + 1 < segments_.size()) {
                const cplx gap = segments_[i + 1].first() - s.last();
                const double scale = std::max(1.0, std::abs(s.last()));
                if (std::abs(gap) > 1e-13 * scale)
                    throw ContractViolation("consecutive path segments must share endpoints");
            }
            if (s.side != Side::none) {
                if (s.kind != Segment::Kind::line || s.start.imag() != 0.0 || s.end.imag() != 0.0)
                    throw ContractViolation("boundary-value segments must lie on the real axis");
                continue;
            }
            if (s.kind == Segment::Kind::line) {
                const double i0 = s.start.imag(), i1 = s.end.imag();
                if ((i0 == 0.0 && i1 == 0.0) || (i0 * i1 < 0.0))
                    throw ContractViolation("segment interior touches the real axis");
            } else if (detail::arc_crosses_axis(s)) {
                throw ContractViolation("arc interior touches the real axis");
            }
        }
    }

    const std::vector<Segment>& segments() const { return segments_; }

private:
    std::vector<Segment> segments_;
};

/// Contour integral of f(SheetPoint) dz along `path`.
template <class F>
QuadResult<cplx> integrate_path(F&& f, const Path& path, const Tolerance& tol = {}) {
    QuadResult<cplx> out;
    const auto& segs = path.segments();
    if (segs.empty()) return out;
    Tolerance per = tol;
    per.abs_tol = tol.abs_tol / static_cast<double>(segs.size());
    for (const Segment& s : segs) {
        const Side side = s.interior_side();
        auto integrand = [&](double t) -> cplx {
            cplx z = s.point(t);
            if (s.side != Side::none) z = cplx(z.real(), 0.0);
            return f(SheetPoint{z, s.sheet, side}) * s.derivative(t);
        };
        const auto r = integrate_interval(integrand, 0.0, 1.0, per);
        out.value += r.value;
        out.error += r.error;
        out.evaluations += r.evaluations;
    }
    return out;
}

/// Principal value of int_lo^hi g(x) dx for g with a simple pole of residue r at x0.
/// The pole is removed analytically: int [g - r/(x - x0)] + r log((hi - x0)/(x0 - lo)).
template <class G>
auto integrate_pv(G&& g, double lo, double hi, double x0, double residue, const Tolerance& tol = {})
    -> QuadResult<std::decay_t<decltype(g(lo))>> {
    using T = std::decay_t<decltype(g(lo))>;
    if (!(lo < x0 && x0 < hi)) throw ContractViolation("principal-value pole must lie inside (lo, hi)");
    auto smooth = [&](double x) -> T { return g(x) - T(residue / (x - x0)); };
    Tolerance half = tol;
    half.abs_tol = 0.5 * tol.abs_tol;
    const auto left = integrate_interval(smooth, lo, x0, half);
    const auto right = integrate_interval(smooth, x0, hi, half);
    QuadResult<T> out;
    out.value = left.value + right.value + T(residue * std::log((hi - x0) / (x0 - lo)));
    out.error = left.error + right.error;
    out.evaluations = left.evaluations + right.evaluations;
    return out;
}

/// int_a^b q(x) / sqrt((x - a)(b - x)) dx via x = m - rho cos(psi): the weight
/// becomes d psi, so smooth q integrates at spectral speed.
template <class Q>
auto integrate_chebyshev(Q&& q, double a, double b, const Tolerance& tol = {})
    -> QuadResult<std::decay_t<decltype(q(a))>> {
    if (!(a < b)) throw ContractViolation("integration interval must satisfy a < b");
    const double m = 0.5 * (a + b);
    const double rho = 0.5 * (b - a);
    auto mapped = [&](double psi) { return q(m - rho * std::cos(psi)); };
    return integrate_interval(mapped, 0.0, std::numbers::pi, tol);
}

/// int_a^b h(x) dx for h with at worst inverse-square-root endpoint singularities.
template <class H>
auto integrate_cut(H&& h, double a, double b, const Tolerance& tol = {})
    -> QuadResult<std::decay_t<decltype(h(a))>> {
    using T = std::decay_t<decltype(h(a))>;
    if (!(a < b)) throw ContractViolation("integration interval must satisfy a < b");
    const double m = 0.5 * (a + b);
    const double rho = 0.5 * (b - a);
    auto mapped = [&](double psi) -> T {
        return h(m - rho * std::cos(psi)) * T(rho * std::sin(psi));
    };
    return integrate_interval(mapped, 0.0, std::numbers::pi, tol);
}

} // namespace rhp
