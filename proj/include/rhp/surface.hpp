#pragma once

// Two-sheeted surface w^2 = prod_k (z - a_k)(z - b_k) over N real cuts.
//
// Indices are zero-based throughout: cut k is [a_k, b_k] for k = 0..N-1 and
// gap j is (b_j, a_{j+1}) for j = 0..N-2.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <sstream>
#include <utility>
#include <vector>

#include "rhp/error.hpp"

namespace rhp {

using cplx = std::complex<double>;

/// Which boundary value to take when a point sits on the real axis.
enum class Side { none, above, below };

inline Side flip(Side s) {
    switch (s) {
    case Side::above: return Side::below;
    case Side::below: return Side::above;
    default: return Side::none;
    }
}

inline const char* to_string(Side s) {
    switch (s) {
    case Side::above: return "above";
    case Side::below: return "below";
    default: return "none";
    }
}

/// A point on one of the two sheets. `side` matters only for real z.
struct SheetPoint {
    cplx z;
    int sheet = 1;
    Side side = Side::none;
};

/// Polynomial sign * prod (x - r) given by its real roots. Used for the
/// reduced products W(x) / ((x - e1)(x - e2)) that stay positive on an
/// interval, and for their exact divided differences.
class RootProduct {
public:
    RootProduct() = default;
    RootProduct(std::vector<double> roots, double sign) : roots_(std::move(roots)), sign_(sign) {}

    template <class T>
    T operator()(T x) const {
        T p = T(sign_);
        for (double r : roots_) p *= (x - r);
        return p;
    }

    /// (p(x) - p(y)) / (x - y), evaluated without subtracting p values.
    double divided_difference(double x, double y) const {
        const std::size_t n = roots_.size();
        double total = 0.0;
        for (std::size_t l = 0; l < n; ++l) {
            double term = 1.0;
            for (std::size_t m = 0; m < l; ++m) term *= (x - roots_[m]);
            for (std::size_t m = l + 1; m < n; ++m) term *= (y - roots_[m]);
            total += term;
        }
        return sign_ * total;
    }

    const std::vector<double>& roots() const { return roots_; }

private:
    std::vector<double> roots_;
    double sign_ = 1.0;
};

/// Cut endpoints and derived geometry. Immutable after construction.
class SurfaceConfig {
public:
    explicit SurfaceConfig(std::vector<std::pair<double, double>> cuts) : cuts_(std::move(cuts)) {
        if (cuts_.empty()) throw ConfigError("surface needs at least one cut (N >= 1)");
        for (std::size_t k = 0; k < cuts_.size(); ++k) {
            const auto [a, b] = cuts_[k];
            if (!std::isfinite(a) || !std::isfinite(b))
                throw ConfigError("cut endpoints must be finite");
            if (!(a < b)) {
                std::ostringstream os;
                os << "ordering violated: need a_k < b_k, got cut " << k + 1 << " = [" << a << ", "
                   << b << "]";
                throw ConfigError(os.str());
            }
            if (k + 1 < cuts_.size() && !(b < cuts_[k + 1].first)) {
                std::ostringstream os;
                os << "ordering violated: need b_k < a_{k+1}, got b_" << k + 1 << " = " << b
                   << " >= a_" << k + 2 << " = " << cuts_[k + 1].first;
                throw ConfigError(os.str());
            }
        }
        for (const auto& [a, b] : cuts_) {
            endpoints_.push_back(a);
            endpoints_.push_back(b);
        }
        double emax = 0.0;
        for (double e : endpoints_) emax = std::max(emax, std::abs(e));
        r0_ = 2.0 * emax;
        min_gap_ = std::numeric_limits<double>::infinity();
        for (int j = 0; j + 1 < num_cuts(); ++j) min_gap_ = std::min(min_gap_, a(j + 1) - b(j));
    }

    int num_cuts() const { return static_cast<int>(cuts_.size()); }
    int genus() const { return num_cuts() - 1; }
    double a(int k) const { return cuts_.at(static_cast<std::size_t>(k)).first; }
    double b(int k) const { return cuts_.at(static_cast<std::size_t>(k)).second; }
    const std::vector<std::pair<double, double>>& cuts() const { return cuts_; }
    /// a_0, b_0, a_1, b_1, ... in increasing order.
    const std::vector<double>& endpoints() const { return endpoints_; }

    /// Twice the largest endpoint modulus.
    double r0() const { return r0_; }
    /// Smallest gap width (infinity when N = 1).
    double min_gap() const { return min_gap_; }

    template <class T>
    T W(T z) const {
        T p = T(1.0);
        for (double e : endpoints_) p *= (z - e);
        return p;
    }

    /// W'(z) / W(z) = sum 1/(z - e).
    cplx log_derivative_W(cplx z) const {
        cplx s = 0.0;
        for (double e : endpoints_) s += 1.0 / (z - e);
        return s;
    }

    /// Sign of w_1 on gap j: one factor of -1 per cut to its right.
    double gap_sign(int j) const { return ((num_cuts() - 1 - j) % 2 == 0) ? 1.0 : -1.0; }
    /// Sign tau_k with w_{1,+}(x) = i * tau_k * |w(x)| on cut k.
    double cut_sign(int k) const { return ((num_cuts() - 1 - k) % 2 == 0) ? 1.0 : -1.0; }

    /// g(x) = -W(x) / ((x - b_j)(x - a_{j+1})), positive on gap j.
    RootProduct gap_reduced(int j) const { return reduced(2 * j + 1, 2 * j + 2, -1.0); }
    /// g(x) = W(x) / ((x - a_k)(x - b_k)), positive on cut k.
    RootProduct cut_reduced(int k) const { return reduced(2 * k, 2 * k + 1, 1.0); }

    /// 0-based cut index containing real x in its closed interval, or -1.
    int cut_containing(double x) const {
        for (int k = 0; k < num_cuts(); ++k)
            if (x >= a(k) && x <= b(k)) return k;
        return -1;
    }

private:
    RootProduct reduced(int skip1, int skip2, double sign) const {
        std::vector<double> roots;
        for (int i = 0; i < static_cast<int>(endpoints_.size()); ++i)
            if (i != skip1 && i != skip2) roots.push_back(endpoints_[static_cast<std::size_t>(i)]);
        return RootProduct(std::move(roots), sign);
    }

    std::vector<std::pair<double, double>> cuts_;
    std::vector<double> endpoints_;
    double r0_ = 0.0;
    double min_gap_ = 0.0;
};

namespace detail {

// Principal square root of (x - e) for real x, taking the requested side when x < e.
inline cplx sqrt_real_factor(double d, Side side) {
    if (d >= 0.0) return {std::sqrt(d), 0.0};
    const double r = std::sqrt(-d);
    return {0.0, side == Side::below ? -r : r};
}

} // namespace detail

/// Value of w at p. Sheet 1 is w_1 = prod sqrt(z - a_k) sqrt(z - b_k) with
/// principal roots, so w_1 ~ z^N at infinity and its cuts are exactly the
/// [a_k, b_k]. Sheet 2 is the negative.
inline cplx branch_w(const SurfaceConfig& cfg, const SheetPoint& p) {
    if (p.sheet != 1 && p.sheet != 2) throw ContractViolation("sheet must be 1 or 2");
    cplx w = 1.0;
    const bool on_axis = p.z.imag() == 0.0 || (p.side == Side::above && p.z.imag() < 0.0) ||
                         (p.side == Side::below && p.z.imag() > 0.0);
    if (on_axis) {
        const double x = p.z.real();
        const int k = cfg.cut_containing(x);
        if (k >= 0 && x != cfg.a(k) && x != cfg.b(k) && p.side == Side::none)
            throw ContractViolation("side tag required for a point on a cut");
        for (double e : cfg.endpoints()) w *= detail::sqrt_real_factor(x - e, p.side);
    } else {
        for (double e : cfg.endpoints()) w *= std::sqrt(p.z - e);
    }
    return p.sheet == 1 ? w : -w;
}

/// Anti-holomorphic involution: z -> conj z on the same sheet.
inline SheetPoint involution(const SheetPoint& p) {
    return SheetPoint{std::conj(p.z), p.sheet, flip(p.side)};
}

/// A point on the real oval over gap `gap`, parametrized by theta in [0, 1).
/// theta in [0, 1/2]: x runs b_j -> a_{j+1} on sheet 1; (1/2, 1): back on sheet 2.
struct OvalPoint {
    int gap = 0;
    double theta = 0.25;
};

struct OvalCoords {
    double x = 0.0;
    double w = 0.0;
    int sheet = 1;
    bool at_branch = false;
    double phi = 0.0; ///< 2 pi theta, the angle in x = m - h cos(phi)
};

inline constexpr double kBranchSnap = 1e-9;

/// theta reduced to [0, 1) and snapped onto the branch points 0 and 1/2.
inline double normalize_theta(double theta) {
    double t = theta - std::floor(theta);
    if (t >= 1.0) t = 0.0;
    if (t < kBranchSnap || 1.0 - t < kBranchSnap) return 0.0;
    if (std::abs(t - 0.5) < kBranchSnap) return 0.5;
    return t;
}

/// x = m - h cos(2 pi theta), w = sigma_j h sin(2 pi theta) sqrt(g_j(x)).
/// Real-analytic in theta through both branch points.
inline OvalCoords oval_coords(const SurfaceConfig& cfg, const OvalPoint& q) {
    if (q.gap < 0 || q.gap >= cfg.genus()) throw ContractViolation("gap index out of range");
    const double lo = cfg.b(q.gap);
    const double hi = cfg.a(q.gap + 1);
    const double m = 0.5 * (lo + hi);
    const double h = 0.5 * (hi - lo);
    const double t = normalize_theta(q.theta);
    OvalCoords c;
    c.phi = 2.0 * std::numbers::pi * t;
    if (t == 0.0) {
        c.x = lo;
        c.at_branch = true;
    } else if (t == 0.5) {
        c.x = hi;
        c.at_branch = true;
    } else {
        c.x = std::clamp(m - h * std::cos(c.phi), lo, hi);
        // h^2 sin^2(phi) = (x - b_j)(a_{j+1} - x); using the rounded x keeps w^2 = W(x) tight.
        const double g = cfg.gap_reduced(q.gap)(c.x);
        const double s = std::sqrt((c.x - lo) * (hi - c.x) * std::max(g, 0.0));
        c.w = cfg.gap_sign(q.gap) * (t < 0.5 ? s : -s);
    }
    c.sheet = t <= 0.5 ? 1 : 2;
    return c;
}

/// Arc-parameter distance on the circle R/Z.
inline double circle_distance(double s, double t) {
    double d = std::fmod(std::abs(s - t), 1.0);
    return std::min(d, 1.0 - d);
}

} // namespace rhp
