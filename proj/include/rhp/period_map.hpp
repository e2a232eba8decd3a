#pragma once

// The period map P -> beta, beta_k = (1/2 pi i) * (B_k period of omega_P), taken
// mod 1, and its inverse by damped Newton on the theta torus.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rhp/differential.hpp"
#include "rhp/error.hpp"
#include "rhp/surface.hpp"

namespace rhp {

/// x - round(x), in [-1/2, 1/2].
inline double wrap_half(double x) { return x - std::round(x); }

/// Representative in [0, 1).
inline double wrap_unit(double x) {
    double r = x - std::floor(x);
    return r >= 1.0 ? 0.0 : r;
}

struct PeriodVector {
    std::vector<double> beta;   ///< representatives in [0, 1)
    std::vector<double> raw;    ///< real parts before reduction
    double imag_residue = 0.0;  ///< max |Im beta_k| before reduction

    std::size_t size() const { return beta.size(); }
};

/// Max-norm distance on the torus (R/Z)^n.
inline double torus_distance(const std::vector<double>& u, const std::vector<double>& v) {
    if (u.size() != v.size()) throw ContractViolation("period vectors differ in length");
    double d = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) d = std::max(d, std::abs(wrap_half(u[i] - v[i])));
    return d;
}

inline PeriodVector psi(const SurfaceConfig& cfg, const std::vector<OvalPoint>& points, int nu,
                        const DifferentialOptions& opts = {}) {
    const MeromorphicDifferential omega(cfg, points, nu, opts);
    PeriodVector out;
    for (int k = 0; k < cfg.genus(); ++k) {
        const cplx raw = omega.b_period_collapsed(k) / (2.0 * std::numbers::pi * cplx(0.0, 1.0));
        out.raw.push_back(raw.real());
        out.beta.push_back(wrap_unit(raw.real()));
        out.imag_residue = std::max(out.imag_residue, std::abs(raw.imag()));
    }
    return out;
}

struct InversionOptions {
    double tol = 1e-10;
    double fd_step = 1e-6;
    int max_newton = 40;           ///< budget of the direct attempt
    int continuation_newton = 20;  ///< budget per continuation segment
    int initial_segments = 8;
    int max_segments = 1024;
    double max_condition = 1e10;
    DifferentialOptions differential{};
};

struct InversionReport {
    std::vector<OvalPoint> solution;
    PeriodVector beta;
    double residual = 0.0;
    int iterations = 0;
    int continuation_steps = 0;
    /// Smallest singular value of the Jacobian at each accepted Newton step.
    std::vector<double> singular_log;
    double min_singular = std::numeric_limits<double>::infinity();
};

namespace detail {

class NewtonTorus {
public:
    NewtonTorus(const SurfaceConfig& cfg, int nu, const InversionOptions& opts)
        : cfg_(cfg), nu_(nu), opts_(opts), g_(cfg.genus()) {}

    std::vector<OvalPoint> points(const std::vector<double>& theta) const {
        std::vector<OvalPoint> p;
        for (int j = 0; j < g_; ++j) p.push_back({j, wrap_unit(theta[static_cast<std::size_t>(j)])});
        return p;
    }

    PeriodVector eval(const std::vector<double>& theta) const {
        return psi(cfg_, points(theta), nu_, opts_.differential);
    }

    Eigen::VectorXd residual(const PeriodVector& b, const std::vector<double>& target) const {
        Eigen::VectorXd r(g_);
        for (int k = 0; k < g_; ++k)
            r(k) = wrap_half(b.raw[static_cast<std::size_t>(k)] - target[static_cast<std::size_t>(k)]);
        return r;
    }

    Eigen::MatrixXd jacobian(const std::vector<double>& theta) const {
        Eigen::MatrixXd J(g_, g_);
        const double h = opts_.fd_step;
        for (int i = 0; i < g_; ++i) {
            std::vector<double> tp = theta, tm = theta;
            tp[static_cast<std::size_t>(i)] += h;
            tm[static_cast<std::size_t>(i)] -= h;
            const PeriodVector bp = eval(tp), bm = eval(tm);
            for (int k = 0; k < g_; ++k)
                J(k, i) = wrap_half(bp.raw[static_cast<std::size_t>(k)] - bm.raw[static_cast<std::size_t>(k)]) /
                          (2.0 * h);
        }
        return J;
    }

    // Damped Newton from theta toward target; returns true on convergence to tol.
    bool solve(std::vector<double>& theta, const std::vector<double>& target, double tol, int budget,
               InversionReport& rep) const {
        PeriodVector b = eval(theta);
        Eigen::VectorXd r = residual(b, target);
        double res = r.lpNorm<Eigen::Infinity>();
        for (int it = 0; it < budget; ++it) {
            if (res <= tol) return true;
            Eigen::MatrixXd J = jacobian(theta);
            Eigen::JacobiSVD<Eigen::MatrixXd> svd(J);
            double smin = svd.singularValues()(g_ - 1);
            double cond = smin > 0.0 ? svd.singularValues()(0) / smin : std::numeric_limits<double>::infinity();
            if (!(cond <= opts_.max_condition)) {
                // Perturb once off the near-singular point and retry.
                for (int j = 0; j < g_; ++j) theta[static_cast<std::size_t>(j)] += 1e-3 * (j + 1);
                b = eval(theta);
                r = residual(b, target);
                res = r.lpNorm<Eigen::Infinity>();
                J = jacobian(theta);
                svd.compute(J);
                smin = svd.singularValues()(g_ - 1);
                cond = smin > 0.0 ? svd.singularValues()(0) / smin : std::numeric_limits<double>::infinity();
                if (!(cond <= opts_.max_condition))
                    throw InversionError("period-map Jacobian is singular", res);
            }
            Eigen::VectorXd step = -J.partialPivLu().solve(r);
            const double big = step.lpNorm<Eigen::Infinity>();
            if (big > 0.2) step *= 0.2 / big;
            double lambda = 1.0;
            bool accepted = false;
            for (int half = 0; half < 12; ++half, lambda *= 0.5) {
                std::vector<double> trial = theta;
                for (int j = 0; j < g_; ++j) trial[static_cast<std::size_t>(j)] += lambda * step(j);
                const PeriodVector bt = eval(trial);
                const Eigen::VectorXd rt = residual(bt, target);
                const double rest = rt.lpNorm<Eigen::Infinity>();
                if (rest < res) {
                    theta = trial;
                    b = bt;
                    r = rt;
                    res = rest;
                    accepted = true;
                    break;
                }
            }
            ++rep.iterations;
            if (!accepted) return res <= tol;
            rep.singular_log.push_back(smin);
            rep.min_singular = std::min(rep.min_singular, smin);
        }
        return res <= tol;
    }

    double distance(const std::vector<double>& theta, const std::vector<double>& target) const {
        return residual(eval(theta), target).lpNorm<Eigen::Infinity>();
    }

private:
    const SurfaceConfig& cfg_;
    int nu_;
    InversionOptions opts_;
    int g_;
};

} // namespace detail

/// Divisor points P with psi(P) = target (mod 1). Newton from the gap midpoints
/// first; on stagnation, continuation along the straight torus path from
/// psi(midpoints) to target with S = 8, 16, ... segments.
inline InversionReport invert_psi(const SurfaceConfig& cfg, const std::vector<double>& target, int nu,
                                  const InversionOptions& opts = {}) {
    const int g = cfg.genus();
    if (static_cast<int>(target.size()) != g) throw ContractViolation("target length must equal N - 1");
    for (double t : target)
        if (!(t >= 0.0 && t < 1.0)) throw ContractViolation("target entries must lie in [0, 1)");
    InversionReport rep;
    if (g == 0) return rep;
    const detail::NewtonTorus newton(cfg, nu, opts);
    const std::vector<double> start(static_cast<std::size_t>(g), 0.25);
    std::vector<double> theta = start;
    bool ok = newton.solve(theta, target, opts.tol, opts.max_newton, rep);
    double best = newton.distance(theta, target);
    std::vector<double> best_theta = theta;

    if (!ok) {
        const PeriodVector b0 = newton.eval(start);
        std::vector<double> dir(static_cast<std::size_t>(g));
        for (int k = 0; k < g; ++k)
            dir[static_cast<std::size_t>(k)] =
                wrap_half(target[static_cast<std::size_t>(k)] - b0.raw[static_cast<std::size_t>(k)]);
        for (int S = opts.initial_segments; S <= opts.max_segments && !ok; S *= 2) {
            theta = start;
            bool path_ok = true;
            for (int s = 1; s <= S; ++s) {
                std::vector<double> sub(static_cast<std::size_t>(g));
                for (int k = 0; k < g; ++k)
                    sub[static_cast<std::size_t>(k)] =
                        b0.raw[static_cast<std::size_t>(k)] + dir[static_cast<std::size_t>(k)] * s / S;
                ++rep.continuation_steps;
                const double sub_tol = s == S ? opts.tol : std::max(opts.tol, 1e-6);
                if (!newton.solve(theta, sub, sub_tol, opts.continuation_newton, rep)) {
                    path_ok = false;
                    break;
                }
            }
            const double d = newton.distance(theta, target);
            if (d < best) {
                best = d;
                best_theta = theta;
            }
            ok = path_ok && d <= opts.tol;
        }
        if (!ok) throw InversionError("period-map inversion did not converge", best);
    }

    rep.solution = newton.points(theta);
    rep.beta = psi(cfg, rep.solution, nu, opts.differential);
    rep.residual = torus_distance(rep.beta.beta, target);
    return rep;
}

/// Winding of theta_j -> beta_j over the oval of gap j with the other points
/// frozen at `others` (gap midpoints by default).
inline int degree_check(const SurfaceConfig& cfg, int nu, int gap, int m,
                        std::vector<OvalPoint> others = {}, const DifferentialOptions& opts = {}) {
    if (gap < 0 || gap >= cfg.genus()) throw ContractViolation("gap index out of range");
    if (m < 4) throw ContractViolation("degree_check needs m >= 4");
    if (others.empty())
        for (int j = 0; j < cfg.genus(); ++j) others.push_back({j, 0.25});
    auto beta_at = [&](double theta) {
        std::vector<OvalPoint> pts = others;
        pts[static_cast<std::size_t>(gap)].theta = theta;
        return psi(cfg, pts, nu, opts).raw[static_cast<std::size_t>(gap)];
    };
    double prev = beta_at(0.0);
    double total = 0.0;
    for (int i = 1; i <= m; ++i) {
        const double cur = beta_at(static_cast<double>(i % m) / m);
        const double step = wrap_half(cur - prev);
        if (std::abs(step) > 0.25)
            throw ContractViolation("degree_check lift is ambiguous; increase the resolution");
        total += step;
        prev = cur;
    }
    return static_cast<int>(std::lround(total));
}

} // namespace rhp
