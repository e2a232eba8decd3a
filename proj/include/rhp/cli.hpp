#pragma once

// Command implementations behind the rhp executable. Each command loads a
// config, runs the library, writes its files into the output directory and
// returns the process exit code:
//   0 ok, 1 config or input error, 2 validation failure, 3 solver failure.
//
// Files (all in --out):
//   build     report.json, parametrix.json
//   validate  report.json
//   eval      eval.csv
//   sweep     sweep.csv, sweep.json
//   invert    divisor.csv
//
// Reports carry a "timing" object; everything else is a pure function of the
// config and flags, so two runs agree byte for byte once "timing" is dropped.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rhp/config.hpp"
#include "rhp/error.hpp"
#include "rhp/parametrix.hpp"
#include "rhp/period_map.hpp"

namespace rhp::cli {

using nlohmann::json;

struct Args {
    std::string command;
    std::string config;
    std::optional<std::string> out;
    std::optional<double> tol;
    std::optional<std::string> grid;
    std::optional<int> n_max;
    std::optional<double> eps;
    std::optional<unsigned> seed;
};

enum ExitCode : int { ok = 0, config_error = 1, validation_failure = 2, solver_failure = 3 };

/// One evaluation point of a grid; side is above/below on the real axis.
struct GridPoint {
    cplx z;
    Side side = Side::none;
};

namespace detail {

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : s) {
        if (ch == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

inline double to_double(const std::string& s, const std::string& spec) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != s.size() || !std::isfinite(v)) throw ConfigError("bad number '" + s + "' in grid '" + spec + "'");
    return v;
}

inline int to_count(const std::string& s, const std::string& spec) {
    const double v = to_double(s, spec);
    if (v < 0.0 || v != std::floor(v) || v > 1e7) throw ConfigError("bad point count '" + s + "' in grid '" + spec + "'");
    return static_cast<int>(v);
}

inline void push_real(std::vector<GridPoint>& out, double x) {
    out.push_back({cplx(x, 0.0), Side::above});
    out.push_back({cplx(x, 0.0), Side::below});
}

// Off-axis points keep side none; points that land on the axis get above.
inline GridPoint plane_point(cplx z) { return {z, z.imag() == 0.0 ? Side::above : Side::none}; }

} // namespace detail

/// Grid spec strings:
///   empty                        no points
///   circle:R:COUNT[:CX:CY]       COUNT points c + R e^{2 pi i k / COUNT}
///   line:X0:Y0:X1:Y1:COUNT       COUNT equispaced points, both ends included
///   real:X0:X1:COUNT             COUNT interior points of [X0, X1], each above and below
///   validate[:M]                 the jump-check points of validate with M per interval
///                                (default 50), each above and below
inline std::vector<GridPoint> parse_grid(const std::string& spec, const SurfaceConfig& cfg) {
    using detail::to_count;
    using detail::to_double;
    const auto f = detail::split(spec, ':');
    const std::string& kind = f[0];
    std::vector<GridPoint> out;
    if (kind == "empty" && f.size() == 1) return out;
    if (kind == "circle" && (f.size() == 3 || f.size() == 5)) {
        const double R = to_double(f[1], spec);
        const int count = to_count(f[2], spec);
        const cplx c = f.size() == 5 ? cplx(to_double(f[3], spec), to_double(f[4], spec)) : cplx(0.0);
        if (!(R > 0.0)) throw ConfigError("circle radius must be > 0 in grid '" + spec + "'");
        for (int k = 0; k < count; ++k) {
            cplx z = c + std::polar(R, 2.0 * std::numbers::pi * k / count);
            if (std::abs(z.imag()) < 1e-14 * R) z = cplx(z.real(), 0.0);
            out.push_back(detail::plane_point(z));
        }
        return out;
    }
    if (kind == "line" && f.size() == 6) {
        const cplx z0(to_double(f[1], spec), to_double(f[2], spec)), z1(to_double(f[3], spec), to_double(f[4], spec));
        const int count = to_count(f[5], spec);
        for (int k = 0; k < count; ++k) {
            const double t = count == 1 ? 0.5 : static_cast<double>(k) / (count - 1);
            out.push_back(detail::plane_point(z0 + t * (z1 - z0)));
        }
        return out;
    }
    if (kind == "real" && f.size() == 4) {
        const double x0 = to_double(f[1], spec), x1 = to_double(f[2], spec);
        const int count = to_count(f[3], spec);
        for (int k = 0; k < count; ++k) detail::push_real(out, x0 + (x1 - x0) * (k + 0.5) / count);
        return out;
    }
    if (kind == "validate" && f.size() <= 2) {
        const int m = f.size() == 2 ? to_count(f[1], spec) : 50;
        const int N = cfg.num_cuts();
        auto interval = [&](double lo, double hi) {
            for (int i = 0; i < m; ++i) detail::push_real(out, lo + (hi - lo) * (i + 0.5) / m);
        };
        for (int k = 0; k < N; ++k) interval(cfg.a(k), cfg.b(k));
        for (int k = 0; k + 1 < N; ++k) interval(cfg.b(k), cfg.a(k + 1));
        const double span = std::max(1.0, cfg.b(N - 1) - cfg.a(0));
        interval(cfg.a(0) - span, cfg.a(0));
        interval(cfg.b(N - 1), cfg.b(N - 1) + span);
        return out;
    }
    throw ConfigError("unrecognized grid spec '" + spec + "'");
}

/// %.17g, the round-trip format of every CSV number.
inline std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline const char* kEvalHeader = "re_z,im_z,side,re_m11,im_m11,re_m12,im_m12,re_m21,im_m21,re_m22,im_m22,det_dev";

inline void write_eval_csv(std::ostream& os, const Parametrix& M, const std::vector<GridPoint>& grid) {
    os << kEvalHeader << '\n';
    for (const auto& p : grid) {
        const Mat2 m = M.eval(p.z, p.side);
        os << fmt(p.z.real()) << ',' << fmt(p.z.imag()) << ',' << to_string(p.side);
        for (int i = 0; i < 4; ++i) {
            const cplx v = m(i / 2, i % 2);
            os << ',' << fmt(v.real()) << ',' << fmt(v.imag());
        }
        os << ',' << fmt(std::abs(m.determinant() - 1.0)) << '\n';
    }
}

inline json divisor_json(const Parametrix& M) {
    json rows = json::array();
    for (int nu = 1; nu <= 2; ++nu) {
        const auto& ev = M.row(nu);
        const auto& pts = ev.omega().points();
        const auto& div = ev.omega().divisor();
        for (std::size_t k = 0; k < div.size(); ++k)
            rows.push_back({{"nu", nu},
                            {"gap", pts[k].gap + 1},
                            {"theta", pts[k].theta},
                            {"x", div[k].x},
                            {"w", div[k].w},
                            {"sheet", div[k].sheet},
                            {"at_branch", div[k].at_branch}});
    }
    return rows;
}

struct Check {
    std::string name;
    double value;
    double threshold;
    bool pass;
};

inline std::vector<Check> evaluate_checks(const ResidualReport& r, const Thresholds& t) {
    std::vector<Check> out;
    const double jump = r.max_jump_residual();
    out.push_back({"jump", jump, t.jump, jump <= t.jump});
    out.push_back({"det", r.det_deviation, t.det, r.det_deviation <= t.det});
    out.push_back({"asymptotic_spread", r.asymptotic_spread, t.asymptotic_spread,
                   r.asymptotic_spread <= t.asymptotic_spread});
    // Fourth-root bound: no entry may grow faster than |z - e|^{-1/4}.
    double worst_slope = std::numeric_limits<double>::infinity();
    for (const auto& e : r.endpoint_exponents) worst_slope = std::min(worst_slope, e.min_slope);
    if (r.endpoint_exponents.empty()) worst_slope = -0.25;
    const double excess = -0.25 - worst_slope;
    out.push_back({"endpoint_exponent", excess, t.endpoint_exponent, excess <= t.endpoint_exponent});
    double worst_order = 0.0;
    for (const auto& z : r.zeros)
        worst_order = std::max({worst_order, std::abs(z.order_upper - 1.0), std::abs(z.order_lower - 1.0)});
    out.push_back({"zero_order", worst_order, t.zero_order, worst_order <= t.zero_order});
    return out;
}

inline json residual_json(const ResidualReport& r) {
    json ends = json::array(), zeros = json::array();
    for (const auto& e : r.endpoint_exponents) ends.push_back({{"endpoint", e.endpoint}, {"min_slope", e.min_slope}});
    for (const auto& z : r.zeros)
        zeros.push_back({{"nu", z.nu},
                         {"gap", z.gap + 1},
                         {"sheet", z.sheet},
                         {"x", z.x},
                         {"order_upper", z.order_upper},
                         {"order_lower", z.order_lower}});
    return {{"cut_residuals", r.cut_residuals},
            {"gap_residuals", r.gap_residuals},
            {"outside_residuals", {r.outside_residuals[0], r.outside_residuals[1]}},
            {"max_jump_residual", r.max_jump_residual()},
            {"det_deviation", r.det_deviation},
            {"asymptotic_radii", r.asymptotic_radii},
            {"asymptotic_constants", r.asymptotic_constants},
            {"asymptotic_spread", r.asymptotic_spread},
            {"endpoint_exponents", ends},
            {"zeros", zeros}};
}

inline json problem_json(const ProblemConfig& c) {
    json cuts = json::array();
    for (const auto& [a, b] : c.cuts) cuts.push_back({a, b});
    return {{"cuts", cuts}, {"alpha", c.alpha}, {"n", c.n}};
}

inline json build_json(const ProblemConfig& c, const Parametrix& M) {
    json inv = json::array();
    for (int nu = 1; nu <= 2; ++nu) {
        const auto& r = M.inversion(nu);
        inv.push_back({{"nu", nu},
                       {"beta_achieved", r.beta.beta},
                       {"residual", r.residual},
                       {"iterations", r.iterations},
                       {"continuation_steps", r.continuation_steps}});
    }
    return {{"problem", problem_json(c)},
            {"genus", M.config().genus()},
            {"beta", M.beta()},
            {"sign_convention", to_string(M.convention())},
            {"sign_retry_attempted", M.retried()},
            {"divisor", divisor_json(M)},
            {"inversion", inv}};
}

/// Self-contained description sufficient to rebuild M: surface, phases and
/// the two differentials.
inline json parametrix_json(const Parametrix& M) {
    json cuts = json::array();
    for (int k = 0; k < M.config().num_cuts(); ++k) cuts.push_back({M.config().a(k), M.config().b(k)});
    json rows = json::array();
    for (int nu = 1; nu <= 2; ++nu) {
        const auto& om = M.row(nu).omega();
        json pts = json::array();
        for (const auto& p : om.points()) pts.push_back({{"gap", p.gap + 1}, {"theta", p.theta}});
        rows.push_back({{"nu", nu}, {"points", pts}, {"gamma", om.gamma()}, {"b_periods_over_2pi_i", M.row(nu).beta()}});
    }
    return {{"cuts", cuts}, {"beta", M.beta()}, {"sign_convention", to_string(M.convention())}, {"rows", rows}};
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw ConfigError("cannot write '" + p.string() + "'");
    out << text;
}

inline ProblemConfig effective_config(const Args& a) {
    ProblemConfig c = load_config(a.config);
    if (a.tol) {
        if (!(*a.tol > 0.0)) throw ConfigError("--tol must be > 0");
        c.inversion_tol = *a.tol;
    }
    if (a.grid) c.grid = *a.grid;
    if (a.n_max) {
        if (*a.n_max < 1) throw ConfigError("--n-max must be >= 1");
        c.sweep.n_max = *a.n_max;
    }
    if (a.eps) {
        if (!(*a.eps > 0.0)) throw ConfigError("--eps must be > 0");
        c.sweep.eps = *a.eps;
    }
    if (a.seed) c.seed = *a.seed;
    if (a.out) c.output = *a.out;
    return c;
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline int cmd_build_or_validate(const ProblemConfig& c, bool write_parametrix, std::ostream& log) {
    const auto t0 = std::chrono::steady_clock::now();
    const Parametrix M = build_parametrix(c.surface(), c.alpha, c.n, c.parametrix_options());
    const double t_build = seconds_since(t0);
    const auto t1 = std::chrono::steady_clock::now();
    const ResidualReport r = validate(M, c.validate_m, c.seed);
    const double t_validate = seconds_since(t1);

    json report = build_json(c, M);
    report["validate"] = {{"m", c.validate_m}, {"seed", c.seed}};
    report["residuals"] = residual_json(r);
    bool pass = true;
    json checks = json::array();
    for (const auto& ch : evaluate_checks(r, c.thresholds)) {
        checks.push_back({{"name", ch.name}, {"value", ch.value}, {"threshold", ch.threshold}, {"pass", ch.pass}});
        pass = pass && ch.pass;
    }
    report["checks"] = checks;
    report["status"] = pass ? "ok" : "validation_failure";
    report["timing"] = {{"build_seconds", t_build}, {"validate_seconds", t_validate}};

    const std::filesystem::path dir(c.output);
    write_text(dir / "report.json", report.dump(2) + "\n");
    if (write_parametrix) write_text(dir / "parametrix.json", parametrix_json(M).dump(2) + "\n");
    log << (pass ? "ok" : "validation failure") << ": max jump residual " << fmt(r.max_jump_residual())
        << ", det deviation " << fmt(r.det_deviation) << ", sign convention " << to_string(M.convention()) << '\n';
    return pass ? ok : validation_failure;
}

inline int cmd_eval(const ProblemConfig& c, std::ostream& log) {
    const SurfaceConfig cfg = c.surface();
    const auto grid = parse_grid(c.grid, cfg);
    for (const auto& p : grid)
        for (double e : cfg.endpoints())
            if (p.z == cplx(e, 0.0)) throw ConfigError("grid point " + fmt(e) + " is a branch point");
    const Parametrix M = build_parametrix(cfg, c.alpha, c.n, c.parametrix_options());
    std::ostringstream os;
    write_eval_csv(os, M, grid);
    write_text(std::filesystem::path(c.output) / "eval.csv", os.str());
    log << "ok: " << grid.size() << " rows\n";
    return ok;
}

inline int cmd_sweep(const ProblemConfig& c, std::ostream& log) {
    const auto t0 = std::chrono::steady_clock::now();
    const SweepReport s =
        boundedness_sweep(c.surface(), c.alpha, c.sweep.n_max, c.sweep.m, c.sweep.eps, c.parametrix_options());
    const double t = seconds_since(t0);
    std::ostringstream os;
    os << "n,norm,inverse_norm,norm_ratio,inverse_ratio,pass\n";
    for (std::size_t i = 0; i < s.norms.size(); ++i) {
        const double r = s.norms[i] / s.envelope, ri = s.inverse_norms[i] / s.inverse_envelope;
        const bool pass = r <= c.sweep.factor && ri <= c.sweep.factor;
        os << i + 1 << ',' << fmt(s.norms[i]) << ',' << fmt(s.inverse_norms[i]) << ',' << fmt(r) << ',' << fmt(ri)
           << ',' << (pass ? 1 : 0) << '\n';
    }
    const bool pass = s.within(c.sweep.factor);
    json j = {{"problem", problem_json(c)},
              {"n_max", c.sweep.n_max},
              {"m", c.sweep.m},
              {"eps", c.sweep.eps},
              {"factor", c.sweep.factor},
              {"envelope", s.envelope},
              {"inverse_envelope", s.inverse_envelope},
              {"grid_points", s.grid_points},
              {"grid_failures", s.grid_failures},
              {"failures", s.failures},
              {"n0_norm", s.n0_norm},
              {"status", pass ? "ok" : "validation_failure"},
              {"timing", {{"sweep_seconds", t}}}};
    const std::filesystem::path dir(c.output);
    write_text(dir / "sweep.csv", os.str());
    write_text(dir / "sweep.json", j.dump(2) + "\n");
    log << (pass ? "ok" : "validation failure") << ": envelope " << fmt(s.envelope) << " over " << s.grid_points
        << " grid points\n";
    return pass ? ok : validation_failure;
}

inline int cmd_invert(const ProblemConfig& c, std::ostream& log) {
    const SurfaceConfig cfg = c.surface();
    const auto target = reduced_targets(c.alpha, c.n);
    InversionOptions opts = c.parametrix_options().inversion;
    std::ostringstream os;
    os << "nu,gap,theta,x,w,sheet,at_branch,beta_target,beta_achieved,residual\n";
    for (int nu = 1; nu <= 2; ++nu) {
        const InversionReport r = invert_psi(cfg, target, nu, opts);
        for (std::size_t k = 0; k < r.solution.size(); ++k) {
            const OvalCoords q = oval_coords(cfg, r.solution[k]);
            os << nu << ',' << r.solution[k].gap + 1 << ',' << fmt(r.solution[k].theta) << ',' << fmt(q.x) << ','
               << fmt(q.w) << ',' << q.sheet << ',' << (q.at_branch ? 1 : 0) << ',' << fmt(target[k]) << ','
               << fmt(r.beta.beta[k]) << ',' << fmt(r.residual) << '\n';
        }
    }
    write_text(std::filesystem::path(c.output) / "divisor.csv", os.str());
    log << "ok: divisor for " << cfg.genus() << " gap(s)\n";
    return ok;
}

/// Runs one command; errors are reported on err and mapped to exit codes.
inline int run(const Args& a, std::ostream& log = std::cout, std::ostream& err = std::cerr) {
    ProblemConfig c;
    try {
        c = effective_config(a);
        std::filesystem::create_directories(c.output);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return config_error;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "config error: " << e.what() << '\n';
        return config_error;
    }
    try {
        if (a.command == "build") return cmd_build_or_validate(c, true, log);
        if (a.command == "validate") return cmd_build_or_validate(c, false, log);
        if (a.command == "eval") return cmd_eval(c, log);
        if (a.command == "sweep") return cmd_sweep(c, log);
        if (a.command == "invert") return cmd_invert(c, log);
        err << "config error: unknown command '" << a.command << "'\n";
        return config_error;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return config_error;
    } catch (const ContractViolation& e) {
        err << "input error: " << e.what() << '\n';
        return config_error;
    } catch (const Error& e) {
        err << "solver failure: " << e.what() << '\n';
        return solver_failure;
    }
}

} // namespace rhp::cli
