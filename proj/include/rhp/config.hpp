#pragma once

// Problem configuration files. JSON, schema:
//
//   {
//     "cuts":  [[a_1, b_1], ..., [a_N, b_N]],     required, strictly increasing
//     "alpha": [alpha_1, ..., alpha_{N-1}],         required, reals
//     "n":     integer >= 0,                        required
//     "tolerances": {                               optional
//       "inversion": 1e-10,   Newton target on the torus
//       "quad_abs": 1e-13, "quad_rel": 1e-12,
//       "jump": 1e-7, "det": 1e-9, "asymptotic_spread": 0.2,
//       "endpoint_exponent": 0.02, "zero_order": 0.02
//     },
//     "validate": {"m": 50, "seed": 7},             optional
//     "sweep": {"n_max": 200, "m": 64, "eps": 0.1, "factor": 1.05},  optional
//     "grid": "circle:5:100",                       optional, see parse_grid
//     "output": "out"                               optional directory
//   }
//
// Unknown keys are rejected so that typos do not silently fall back to defaults.

#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rhp/error.hpp"
#include "rhp/parametrix.hpp"
#include "rhp/surface.hpp"

namespace rhp {

struct Thresholds {
    double jump = 1e-7;
    double det = 1e-9;
    double asymptotic_spread = 0.2;
    double endpoint_exponent = 0.02; ///< allowed excess over the -1/4 bound
    double zero_order = 0.02;
};

struct SweepSettings {
    int n_max = 200;
    int m = 64;
    double eps = 0.1;
    double factor = 1.05;
};

struct ProblemConfig {
    std::vector<std::pair<double, double>> cuts;
    std::vector<double> alpha;
    long n = 0;
    double inversion_tol = 1e-10;
    Tolerance quad{};
    Thresholds thresholds{};
    int validate_m = 50;
    unsigned seed = 7;
    SweepSettings sweep{};
    std::string grid = "empty";
    std::string output = ".";

    SurfaceConfig surface() const { return SurfaceConfig(cuts); }

    ParametrixOptions parametrix_options() const {
        ParametrixOptions o;
        o.inversion.tol = inversion_tol;
        o.inversion.differential.tol = quad;
        o.abelian.tol = quad;
        return o;
    }
};

namespace detail {

inline void reject_unknown(const nlohmann::json& j, const std::set<std::string>& known, const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!known.count(it.key())) throw ConfigError("unknown key '" + it.key() + "' in " + where);
}

inline double number(const nlohmann::json& j, const std::string& what) {
    if (!j.is_number()) throw ConfigError(what + " must be a number");
    return j.get<double>();
}

inline double positive(const nlohmann::json& j, const std::string& what) {
    const double v = number(j, what);
    if (!(v > 0.0)) throw ConfigError(what + " must be > 0");
    return v;
}

inline long integer(const nlohmann::json& j, const std::string& what, long min) {
    if (!j.is_number_integer()) throw ConfigError(what + " must be an integer");
    const long v = j.get<long>();
    if (v < min) throw ConfigError(what + " must be >= " + std::to_string(min));
    return v;
}

} // namespace detail

inline ProblemConfig parse_config(const nlohmann::json& j) {
    using detail::integer;
    using detail::number;
    using detail::positive;
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    detail::reject_unknown(j, {"cuts", "alpha", "n", "tolerances", "validate", "sweep", "grid", "output"}, "config");
    ProblemConfig c;

    if (!j.contains("cuts") || !j["cuts"].is_array()) throw ConfigError("'cuts' must be a list of [a, b] pairs");
    for (const auto& cut : j["cuts"]) {
        if (!cut.is_array() || cut.size() != 2) throw ConfigError("each cut must be a pair [a, b]");
        c.cuts.emplace_back(number(cut[0], "cut endpoint"), number(cut[1], "cut endpoint"));
    }
    const SurfaceConfig surface(c.cuts); // ordering invariants

    if (!j.contains("alpha") || !j["alpha"].is_array()) throw ConfigError("'alpha' must be a list of reals");
    for (const auto& a : j["alpha"]) c.alpha.push_back(number(a, "alpha entry"));
    if (static_cast<int>(c.alpha.size()) != surface.genus())
        throw ConfigError("'alpha' needs N - 1 = " + std::to_string(surface.genus()) + " entries, got " +
                          std::to_string(c.alpha.size()));

    if (!j.contains("n")) throw ConfigError("'n' is required");
    c.n = integer(j["n"], "'n'", 0);

    if (j.contains("tolerances")) {
        const auto& t = j["tolerances"];
        if (!t.is_object()) throw ConfigError("'tolerances' must be an object");
        detail::reject_unknown(t, {"inversion", "quad_abs", "quad_rel", "jump", "det", "asymptotic_spread",
                                   "endpoint_exponent", "zero_order"}, "tolerances");
        if (t.contains("inversion")) c.inversion_tol = positive(t["inversion"], "tolerances.inversion");
        if (t.contains("quad_abs")) c.quad.abs_tol = positive(t["quad_abs"], "tolerances.quad_abs");
        if (t.contains("quad_rel")) c.quad.rel_tol = positive(t["quad_rel"], "tolerances.quad_rel");
        if (t.contains("jump")) c.thresholds.jump = positive(t["jump"], "tolerances.jump");
        if (t.contains("det")) c.thresholds.det = positive(t["det"], "tolerances.det");
        if (t.contains("asymptotic_spread"))
            c.thresholds.asymptotic_spread = positive(t["asymptotic_spread"], "tolerances.asymptotic_spread");
        if (t.contains("endpoint_exponent"))
            c.thresholds.endpoint_exponent = positive(t["endpoint_exponent"], "tolerances.endpoint_exponent");
        if (t.contains("zero_order")) c.thresholds.zero_order = positive(t["zero_order"], "tolerances.zero_order");
    }
    if (j.contains("validate")) {
        const auto& v = j["validate"];
        if (!v.is_object()) throw ConfigError("'validate' must be an object");
        detail::reject_unknown(v, {"m", "seed"}, "validate");
        if (v.contains("m")) c.validate_m = static_cast<int>(integer(v["m"], "validate.m", 10));
        if (v.contains("seed")) c.seed = static_cast<unsigned>(integer(v["seed"], "validate.seed", 0));
    }
    if (j.contains("sweep")) {
        const auto& s = j["sweep"];
        if (!s.is_object()) throw ConfigError("'sweep' must be an object");
        detail::reject_unknown(s, {"n_max", "m", "eps", "factor"}, "sweep");
        if (s.contains("n_max")) c.sweep.n_max = static_cast<int>(integer(s["n_max"], "sweep.n_max", 1));
        if (s.contains("m")) c.sweep.m = static_cast<int>(integer(s["m"], "sweep.m", 1));
        if (s.contains("eps")) c.sweep.eps = positive(s["eps"], "sweep.eps");
        if (s.contains("factor")) c.sweep.factor = positive(s["factor"], "sweep.factor");
    }
    if (j.contains("grid")) {
        if (!j["grid"].is_string()) throw ConfigError("'grid' must be a string");
        c.grid = j["grid"].get<std::string>();
    }
    if (j.contains("output")) {
        if (!j["output"].is_string()) throw ConfigError("'output' must be a string");
        c.output = j["output"].get<std::string>();
    }
    return c;
}

inline ProblemConfig parse_config_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("malformed JSON: ") + e.what());
    }
    return parse_config(j);
}

inline ProblemConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return parse_config_text(os.str());
}

} // namespace rhp
