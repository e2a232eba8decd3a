#pragma once

// The model parametrix M(z): row nu is built from (v_1, v_2) = exp(u_1, u_2)
// of the differential whose B-periods are n alpha mod 1, with sign pattern
//   Im z > 0:  [[ v_1^1,  v_2^1], [-v_1^2, v_2^2]]
//   Im z < 0:  [[ v_1^1, -v_2^1], [ v_1^2, v_2^2]].

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rhp/abelian.hpp"
#include "rhp/period_map.hpp"

namespace rhp {

using Mat2 = Eigen::Matrix2cd;

enum class SignConvention { direct, negated };

inline const char* to_string(SignConvention c) { return c == SignConvention::direct ? "direct" : "negated"; }

struct ParametrixOptions {
    InversionOptions inversion{};
    AbelianOptions abelian{};
    /// Gap-jump residual above which the build retries with negated targets.
    double retry_threshold = 1e-4;
    bool auto_retry = true;
};

/// Reduced targets n alpha_k mod 1.
inline std::vector<double> reduced_targets(const std::vector<double>& alphas, long n) {
    std::vector<double> t;
    for (double a : alphas) t.push_back(wrap_unit(std::fmod(static_cast<double>(n) * a, 1.0)));
    return t;
}

/// Largest entry modulus.
inline double entry_norm(const Mat2& m) { return m.cwiseAbs().maxCoeff(); }

/// Resolved half-plane of z: its sign for off-axis z, else the tag.
inline Side half_plane(cplx z, Side side) {
    if (z.imag() != 0.0) return z.imag() > 0.0 ? Side::above : Side::below;
    return side;
}

/// v_j = exp(u_j) of one row; exactly 0 at a divisor zero on sheet j.
inline cplx exp_abelian(const AbelianEvaluator& ev, int j, cplx z, Side side) {
    if (ev.near_pole(j, z)) return 0.0;
    return std::exp(ev.u(j, z, side));
}

/// Row nu of M with its half-plane sign pattern; side must be resolved.
inline std::array<cplx, 2> row_entries(const AbelianEvaluator& ev, cplx z, Side side) {
    const double s = half_plane(z, side) == Side::above ? 1.0 : -1.0;
    const cplx v1 = exp_abelian(ev, 1, z, side), v2 = exp_abelian(ev, 2, z, side);
    if (ev.nu() == 1) return {v1, s * v2};
    return {-s * v1, v2};
}

class Parametrix {
public:
    /// M(z; beta) for the given reduced gap phases beta_k (the n alpha_k mod 1).
    Parametrix(SurfaceConfig cfg, std::vector<double> beta, ParametrixOptions opts = {})
        : cfg_(std::move(cfg)), beta_(std::move(beta)), opts_(opts) {
        if (static_cast<int>(beta_.size()) != cfg_.genus()) throw ContractViolation("need N - 1 gap phases");
        for (double& b : beta_) b = wrap_unit(b);
        build(beta_);
        if (!opts_.auto_retry || cfg_.genus() == 0) return;
        const double before = gap_probe();
        if (before <= opts_.retry_threshold) return;
        retried_ = true;
        const auto saved_rows = rows_;
        const auto saved_reports = reports_;
        std::vector<double> neg;
        for (double b : beta_) neg.push_back(wrap_unit(-b));
        build(neg);
        if (gap_probe() < before) {
            convention_ = SignConvention::negated;
        } else {
            rows_ = saved_rows;
            reports_ = saved_reports;
        }
    }

    const SurfaceConfig& config() const { return cfg_; }
    const std::vector<double>& beta() const { return beta_; }
    SignConvention convention() const { return convention_; }
    /// True when the first build failed the gap probe and the negated targets were tried.
    bool retried() const { return retried_; }
    const InversionReport& inversion(int nu) const { return reports_.at(static_cast<std::size_t>(nu - 1)); }
    const AbelianEvaluator& row(int nu) const { return rows_.at(static_cast<std::size_t>(nu - 1)); }

    /// v_j^(nu) = exp(u_j^(nu)); exactly 0 at a divisor zero on sheet j.
    cplx v(int nu, int j, cplx z, Side side = Side::none) const { return exp_abelian(row(nu), j, z, side); }

    /// M(z). Real z needs a side tag on [a_1, b_N]; outside, M is analytic.
    Mat2 eval(cplx z, Side side = Side::none) const {
        for (double e : cfg_.endpoints())
            if (z == cplx(e, 0.0)) throw ContractViolation("M is not defined at an endpoint");
        side = half_plane(z, side);
        if (side == Side::none) {
            if (z.real() > cfg_.a(0) && z.real() < cfg_.b(cfg_.num_cuts() - 1))
                throw ContractViolation("real z inside [a_1, b_N] needs a side tag");
            side = Side::above;
        }
        const auto r1 = row_entries(row(1), z, side), r2 = row_entries(row(2), z, side);
        Mat2 m;
        m << r1[0], r1[1], r2[0], r2[1];
        return m;
    }

    /// Jump matrix J_M(x), M_+ = M_- J_M.
    Mat2 jump_matrix(double x) const {
        const auto [kind, index] = row(1).classify(x);
        Mat2 J = Mat2::Identity();
        if (kind == IntervalKind::cut) {
            J << 0.0, 1.0, -1.0, 0.0;
        } else if (kind == IntervalKind::gap) {
            const cplx e = std::exp(cplx(0.0, -2.0 * std::numbers::pi * beta_[static_cast<std::size_t>(index)]));
            J << e, 0.0, 0.0, 1.0 / e;
        }
        return J;
    }

    /// max entry of |M_+(x) - M_-(x) J_M(x)|.
    double jump_residual(double x) const {
        const Mat2 d = eval(x, Side::above) - eval(x, Side::below) * jump_matrix(x);
        return entry_norm(d);
    }

private:
    void build(const std::vector<double>& targets) {
        rows_.clear();
        for (int nu = 1; nu <= 2; ++nu) {
            reports_[static_cast<std::size_t>(nu - 1)] = invert_psi(cfg_, targets, nu, opts_.inversion);
            const auto& sol = reports_[static_cast<std::size_t>(nu - 1)].solution;
            rows_.emplace_back(MeromorphicDifferential(cfg_, sol, nu, opts_.inversion.differential), opts_.abelian);
        }
    }

    // Gap-jump residual at one point per gap, used to detect a reversed
    // period-sign convention.
    double gap_probe() const {
        double worst = 0.0;
        for (int k = 0; k < cfg_.genus(); ++k) worst = std::max(worst, jump_residual(probe_point(k)));
        return worst;
    }

    // A point of gap k at least a tenth of the gap away from every divisor point.
    double probe_point(int k) const {
        const double lo = cfg_.b(k), hi = cfg_.a(k + 1);
        for (double f : {0.5, 0.3, 0.7, 0.15, 0.85}) {
            const double x = lo + f * (hi - lo);
            bool clear = true;
            for (const auto& ev : rows_)
                for (const auto& q : ev.omega().divisor())
                    if (std::abs(q.x - x) < 0.1 * (hi - lo)) clear = false;
            if (clear) return x;
        }
        return lo + 0.5 * (hi - lo);
    }

    SurfaceConfig cfg_;
    std::vector<double> beta_;
    ParametrixOptions opts_;
    std::vector<AbelianEvaluator> rows_;
    std::array<InversionReport, 2> reports_{};
    SignConvention convention_ = SignConvention::direct;
    bool retried_ = false;
};

/// M for the model problem with data (alpha, n).
inline Parametrix build_parametrix(const SurfaceConfig& cfg, const std::vector<double>& alphas, long n,
                                   const ParametrixOptions& opts = {}) {
    if (static_cast<int>(alphas.size()) != cfg.genus()) throw ContractViolation("need N - 1 alphas");
    return Parametrix(cfg, reduced_targets(alphas, n), opts);
}

struct EndpointFit {
    double endpoint = 0.0;
    double min_slope = 0.0; ///< smallest fitted exponent over the four entries
};

struct ZeroFit {
    int nu = 1, gap = 0, sheet = 1;
    double x = 0.0;
    double order_upper = 0.0; ///< fitted order from above
    double order_lower = 0.0; ///< fitted order of the continuation from below
};

struct ResidualReport {
    std::vector<double> cut_residuals;
    std::vector<double> gap_residuals;
    std::array<double, 2> outside_residuals{};
    double det_deviation = 0.0;
    std::vector<double> asymptotic_radii;
    std::vector<double> asymptotic_constants; ///< max over directions of |M - I| |z|
    double asymptotic_spread = 0.0;           ///< max / min - 1 of the constants
    std::vector<EndpointFit> endpoint_exponents;
    std::vector<ZeroFit> zeros;

    double max_jump_residual() const {
        double r = std::max(outside_residuals[0], outside_residuals[1]);
        for (double v : cut_residuals) r = std::max(r, v);
        for (double v : gap_residuals) r = std::max(r, v);
        return r;
    }
};

namespace detail {

inline double fit_slope(const std::vector<double>& lx, const std::vector<double>& ly) {
    const double n = static_cast<double>(lx.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxy += (lx[i] - mx) * (ly[i] - my);
        sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    return sxy / sxx;
}

inline std::vector<double> fit_radii() {
    std::vector<double> r;
    for (int i = 0; i < 13; ++i) r.push_back(std::pow(10.0, -3.0 - 3.0 * i / 12.0));
    return r;
}

} // namespace detail

/// Points in the upper and lower half-planes used for det and symmetry checks.
inline std::vector<cplx> sample_points(const SurfaceConfig& cfg, int count, unsigned seed = 7) {
    std::mt19937_64 rng(seed);
    const double lo = cfg.a(0) - 1.0, hi = cfg.b(cfg.num_cuts() - 1) + 1.0;
    std::uniform_real_distribution<double> xr(lo, hi), yr(-2.0, 2.0);
    std::vector<cplx> pts;
    while (static_cast<int>(pts.size()) < count) {
        const cplx z(xr(rng), yr(rng));
        if (std::abs(z.imag()) < 1e-3) continue;
        pts.push_back(z);
    }
    return pts;
}

/// Full self-validation with m samples per interval.
inline ResidualReport validate(const Parametrix& M, int m = 50, unsigned seed = 7) {
    if (m < 10) throw ContractViolation("validate needs m >= 10");
    const SurfaceConfig& cfg = M.config();
    const int N = cfg.num_cuts();
    ResidualReport rep;
    auto interval_max = [&](double lo, double hi) {
        double worst = 0.0;
        for (int i = 0; i < m; ++i) worst = std::max(worst, M.jump_residual(lo + (hi - lo) * (i + 0.5) / m));
        return worst;
    };
    for (int k = 0; k < N; ++k) rep.cut_residuals.push_back(interval_max(cfg.a(k), cfg.b(k)));
    for (int k = 0; k + 1 < N; ++k) rep.gap_residuals.push_back(interval_max(cfg.b(k), cfg.a(k + 1)));
    const double span = std::max(1.0, cfg.b(N - 1) - cfg.a(0));
    rep.outside_residuals[0] = interval_max(cfg.a(0) - span, cfg.a(0));
    rep.outside_residuals[1] = interval_max(cfg.b(N - 1), cfg.b(N - 1) + span);

    for (const cplx& z : sample_points(cfg, 100, seed))
        rep.det_deviation = std::max(rep.det_deviation, std::abs(M.eval(z).determinant() - 1.0));

    for (double r : {1e2, 1e3, 1e4}) {
        double c = 0.0;
        for (double ang : {0.4, 1.3, 2.2, -0.7, -1.9, -2.8}) {
            const cplx z = std::polar(r, ang);
            c = std::max(c, entry_norm(M.eval(z) - Mat2::Identity()) * r);
        }
        rep.asymptotic_radii.push_back(r);
        rep.asymptotic_constants.push_back(c);
    }
    const auto [cmin, cmax] =
        std::minmax_element(rep.asymptotic_constants.begin(), rep.asymptotic_constants.end());
    rep.asymptotic_spread = *cmax / *cmin - 1.0;

    const auto radii = detail::fit_radii();
    for (double e : cfg.endpoints()) {
        EndpointFit fit{e, std::numeric_limits<double>::infinity()};
        std::vector<double> lx;
        std::array<std::vector<double>, 4> ly;
        for (double r : radii) {
            const Mat2 v = M.eval(e + r * std::polar(1.0, 0.25 * std::numbers::pi));
            lx.push_back(std::log(r));
            for (int i = 0; i < 4; ++i) ly[static_cast<std::size_t>(i)].push_back(std::log(std::abs(v(i / 2, i % 2))));
        }
        for (const auto& y : ly) fit.min_slope = std::min(fit.min_slope, detail::fit_slope(lx, y));
        rep.endpoint_exponents.push_back(fit);
    }

    for (int nu = 1; nu <= 2; ++nu) {
        const auto& div = M.row(nu).omega().divisor();
        for (int k = 0; k + 1 < N; ++k) {
            const auto& q = div[static_cast<std::size_t>(k)];
            if (q.at_branch) continue;
            ZeroFit z{nu, k, q.sheet, q.x, 0.0, 0.0};
            const cplx J = M.jump_matrix(q.x)(q.sheet - 1, q.sheet - 1);
            std::vector<double> lx, up, down;
            for (double r : radii) {
                lx.push_back(std::log(r));
                const cplx zu = q.x + r * std::polar(1.0, 0.25 * std::numbers::pi);
                up.push_back(std::log(std::abs(M.eval(zu)(nu - 1, q.sheet - 1))));
                // The upper restriction continues into the lower half-plane as M_- J.
                const Mat2 ml = M.eval(std::conj(zu));
                down.push_back(std::log(std::abs(ml(nu - 1, q.sheet - 1) * J)));
            }
            z.order_upper = detail::fit_slope(lx, up);
            z.order_lower = detail::fit_slope(lx, down);
            rep.zeros.push_back(z);
        }
    }
    return rep;
}

struct SweepReport {
    double envelope = 0.0;          ///< max over the beta grid of sup |M| on the test set
    double inverse_envelope = 0.0;
    int grid_points = 0;
    int grid_failures = 0;
    double n0_norm = 0.0;
    std::vector<double> norms;          ///< sup |M(.; n alpha)| for n = 1..n_max
    std::vector<double> inverse_norms;  ///< same for M^{-1}
    std::vector<std::string> failures;  ///< logged build failures

    /// True when every n stays within factor times the grid envelope.
    bool within(double factor = 1.05) const {
        for (std::size_t i = 0; i < norms.size(); ++i)
            if (!(norms[i] <= factor * envelope) || !(inverse_norms[i] <= factor * inverse_envelope)) return false;
        return true;
    }
};

/// Fixed test set in {|z - e| >= eps for every endpoint e}, off the real axis.
inline std::vector<cplx> boundedness_test_set(const SurfaceConfig& cfg, double eps) {
    if (!(eps > 0.0)) throw ContractViolation("eps must be > 0");
    std::vector<cplx> pts;
    for (double e : cfg.endpoints())
        for (double ang : {0.25, 0.5, 0.75}) {
            pts.push_back(e + eps * std::polar(1.0, ang * std::numbers::pi));
            pts.push_back(e + eps * std::polar(1.0, -ang * std::numbers::pi));
        }
    const int N = cfg.num_cuts();
    for (int k = 0; k < N; ++k) {
        const double mid = 0.5 * (cfg.a(k) + cfg.b(k));
        pts.push_back(cplx(mid, eps));
        pts.push_back(cplx(mid, -eps));
        if (k + 1 < N) {
            const double g = 0.5 * (cfg.b(k) + cfg.a(k + 1));
            pts.push_back(cplx(g, eps));
            pts.push_back(cplx(g, -eps));
        }
    }
    for (int i = 0; i < 8; ++i) pts.push_back(std::polar(cfg.r0(), (i + 0.5) * std::numbers::pi / 4.0));
    return pts;
}

namespace detail {

inline std::pair<double, double> sup_norms(const Parametrix& M, const std::vector<cplx>& pts) {
    double n = 0.0, ni = 0.0;
    for (const cplx& z : pts) {
        const Mat2 m = M.eval(z);
        n = std::max(n, entry_norm(m));
        ni = std::max(ni, entry_norm(m.inverse()));
    }
    return {n, ni};
}

} // namespace detail

/// Envelope of sup |M(.; beta)| over an m^{N-1} beta grid, then the norms of
/// M(.; n alpha) for n = 1..n_max. Reduction order is the grid order.
inline SweepReport boundedness_sweep(const SurfaceConfig& cfg, const std::vector<double>& alphas, int n_max, int m,
                                     double eps, const ParametrixOptions& opts = {}) {
    const int g = cfg.genus();
    if (static_cast<int>(alphas.size()) != g) throw ContractViolation("need N - 1 alphas");
    if (m < 1 || n_max < 0) throw ContractViolation("grid size must be >= 1 and n_max >= 0");
    const auto pts = boundedness_test_set(cfg, eps);
    SweepReport rep;
    long total = 1;
    for (int k = 0; k < g; ++k) total *= m;
    for (long idx = 0; idx < total; ++idx) {
        std::vector<double> beta;
        long rest = idx;
        for (int k = 0; k < g; ++k) {
            beta.push_back(static_cast<double>(rest % m) / m);
            rest /= m;
        }
        ++rep.grid_points;
        try {
            const auto [n, ni] = detail::sup_norms(Parametrix(cfg, beta, opts), pts);
            rep.envelope = std::max(rep.envelope, n);
            rep.inverse_envelope = std::max(rep.inverse_envelope, ni);
        } catch (const Error& e) {
            ++rep.grid_failures;
            rep.failures.push_back(e.what());
        }
    }
    if (rep.grid_failures * 100 >= rep.grid_points && rep.grid_failures > 0)
        throw ConstructionError("more than 1% of the beta grid failed to build");
    rep.n0_norm = detail::sup_norms(build_parametrix(cfg, alphas, 0, opts), pts).first;
    for (int n = 1; n <= n_max; ++n) {
        const auto [nn, ni] = detail::sup_norms(build_parametrix(cfg, alphas, n, opts), pts);
        rep.norms.push_back(nn);
        rep.inverse_norms.push_back(ni);
    }
    return rep;
}

} // namespace rhp
