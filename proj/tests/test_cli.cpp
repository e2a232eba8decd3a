#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <sys/wait.h>

#include "rhp/cli.hpp"

using namespace rhp;
using namespace rhp::cli;
namespace fs = std::filesystem;

namespace {

std::string sample(const std::string& name) { return std::string(RHP_SOURCE_DIR) + "/samples/" + name; }

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("rhp_cli_test_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

int run_quiet(Args a, std::string* err_text = nullptr) {
    std::ostringstream log, err;
    const int code = run(a, log, err);
    if (err_text) *err_text = err.str();
    return code;
}

Args args(const std::string& cmd, const std::string& cfg, const fs::path& out) {
    Args a;
    a.command = cmd;
    a.config = cfg;
    a.out = out.string();
    return a;
}

std::vector<std::string> lines(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream is(s);
    for (std::string l; std::getline(is, l);) out.push_back(l);
    return out;
}

} // namespace

TEST(Config, ParsesSampleAndDefaults) {
    const auto c = load_config(sample("two_cut.json"));
    ASSERT_EQ(c.cuts.size(), 2u);
    EXPECT_EQ(c.n, 7);
    EXPECT_DOUBLE_EQ(c.alpha[0], 0.3);
    EXPECT_DOUBLE_EQ(c.inversion_tol, 1e-10);
    EXPECT_DOUBLE_EQ(c.thresholds.jump, 1e-7);
    EXPECT_EQ(c.sweep.m, 64);
}

TEST(Config, RejectsMalformedInput) {
    auto message = [](const std::string& text) {
        try {
            parse_config_text(text);
        } catch (const ConfigError& e) {
            return std::string(e.what());
        }
        return std::string("no error");
    };
    EXPECT_NE(message(R"({"cuts": [[-2, 0.5], [0, 2]], "alpha": [0.3], "n": 1})").find("b_k < a_{k+1}"), std::string::npos);
    EXPECT_NE(message(R"({"cuts": [[1, -1]], "alpha": [], "n": 1})").find("a_k < b_k"), std::string::npos);
    EXPECT_NE(message(R"({"cuts": [[-2, -1], [1, 2]], "alpha": [], "n": 1})").find("N - 1"), std::string::npos);
    EXPECT_NE(message(R"({"cuts": [[-1, 1]], "alpha": [], "n": -1})").find("'n'"), std::string::npos);
    EXPECT_NE(message(R"({"cuts": [[-1, 1]], "alpha": [], "n": 1, "tolerence": {}})").find("unknown key"), std::string::npos);
    EXPECT_NE(message("{not json").find("malformed"), std::string::npos);
}

TEST(Grid, SpecStrings) {
    const SurfaceConfig cfg({{-2.0, -1.0}, {1.0, 2.0}});
    EXPECT_TRUE(parse_grid("empty", cfg).empty());
    const auto circle = parse_grid("circle:5:100", cfg);
    ASSERT_EQ(circle.size(), 100u);
    for (const auto& p : circle) EXPECT_NEAR(std::abs(p.z), 5.0, 1e-14);
    EXPECT_EQ(circle[0].side, Side::above);
    EXPECT_EQ(circle[1].side, Side::none);
    EXPECT_EQ(parse_grid("line:0:1:2:3:5", cfg).size(), 5u);
    const auto real = parse_grid("real:-2:-1:4", cfg);
    ASSERT_EQ(real.size(), 8u);
    EXPECT_EQ(real[0].side, Side::above);
    EXPECT_EQ(real[1].side, Side::below);
    // 2 cuts, 1 gap, 2 outside intervals, both sides.
    EXPECT_EQ(parse_grid("validate:10", cfg).size(), 100u);
    for (const char* bad : {"circle:5", "circle:-1:10", "line:0:0:1:1", "real:0:1:x", "spiral:3", "empty:2"})
        EXPECT_THROW(parse_grid(bad, cfg), ConfigError) << bad;
}

TEST(Commands, OneCutBuild) {
    const auto out = scratch("one_cut");
    ASSERT_EQ(run_quiet(args("build", sample("one_cut.json"), out)), ok);
    const auto report = nlohmann::json::parse(slurp(out / "report.json"));
    EXPECT_TRUE(report["divisor"].empty());
    EXPECT_LE(report["residuals"]["det_deviation"].get<double>(), 1e-9);
    EXPECT_EQ(report["status"], "ok");
    EXPECT_TRUE(fs::exists(out / "parametrix.json"));
}

TEST(Commands, TwoCutReportsReducedBeta) {
    const auto out = scratch("two_cut");
    ASSERT_EQ(run_quiet(args("build", sample("two_cut.json"), out)), ok);
    const auto report = nlohmann::json::parse(slurp(out / "report.json"));
    EXPECT_NEAR(report["beta"][0].get<double>(), 0.1, 1e-12);
    EXPECT_EQ(report["sign_convention"], "direct");
    ASSERT_EQ(report["divisor"].size(), 2u);
    for (const auto& inv : report["inversion"]) EXPECT_NEAR(inv["beta_achieved"][0].get<double>(), 0.1, 1e-8);
}

TEST(Commands, OverlappingCutsAreConfigErrors) {
    std::string err;
    EXPECT_EQ(run_quiet(args("build", sample("overlap.json"), scratch("overlap")), &err), config_error);
    EXPECT_NE(err.find("ordering violated"), std::string::npos);
    EXPECT_EQ(run_quiet(args("build", sample("missing.json"), scratch("missing"))), config_error);
    EXPECT_EQ(run_quiet(args("frobnicate", sample("one_cut.json"), scratch("unknown"))), config_error);
}

TEST(Commands, EvalTables) {
    const auto out = scratch("eval");
    Args a = args("eval", sample("one_cut.json"), out);
    a.grid = "circle:5:100";
    ASSERT_EQ(run_quiet(a), ok);
    const auto rows = lines(slurp(out / "eval.csv"));
    ASSERT_EQ(rows.size(), 101u);
    EXPECT_EQ(rows[0], kEvalHeader);

    const auto empty = scratch("eval_empty");
    a = args("eval", sample("one_cut.json"), empty);
    a.grid = "empty";
    ASSERT_EQ(run_quiet(a), ok);
    EXPECT_EQ(slurp(empty / "eval.csv"), std::string(kEvalHeader) + "\n");

    a.grid = "line:-1:0:1:0:3"; // hits both branch points
    EXPECT_EQ(run_quiet(a), config_error);
}

TEST(Commands, EvalRowsRoundTrip) {
    const auto out = scratch("eval_roundtrip");
    Args a = args("eval", sample("two_cut.json"), out);
    a.grid = "line:-3:0.5:3:-0.7:9";
    ASSERT_EQ(run_quiet(a), ok);
    const auto M = build_parametrix(SurfaceConfig({{-2.0, -1.0}, {1.0, 2.0}}), {0.3}, 7);
    const auto rows = lines(slurp(out / "eval.csv"));
    ASSERT_EQ(rows.size(), 10u);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        std::vector<std::string> f;
        std::istringstream is(rows[i]);
        for (std::string t; std::getline(is, t, ',');) f.push_back(t);
        ASSERT_EQ(f.size(), 12u);
        const cplx z(std::stod(f[0]), std::stod(f[1]));
        const Mat2 m = M.eval(z);
        for (int k = 0; k < 4; ++k) {
            EXPECT_EQ(std::stod(f[3 + 2 * k]), m(k / 2, k % 2).real());
            EXPECT_EQ(std::stod(f[4 + 2 * k]), m(k / 2, k % 2).imag());
        }
    }
}

TEST(Commands, InvertBetaStar) {
    const auto out = scratch("invert");
    ASSERT_EQ(run_quiet(args("invert", sample("invert_beta_star.json"), out)), ok);
    const auto rows = lines(slurp(out / "divisor.csv"));
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_EQ(rows[0], "nu,gap,theta,x,w,sheet,at_branch,beta_target,beta_achieved,residual");
    std::vector<std::string> f;
    std::istringstream is(rows[1]);
    for (std::string t; std::getline(is, t, ',');) f.push_back(t);
    EXPECT_EQ(f[0], "1");
    EXPECT_EQ(f[1], "1");
    EXPECT_NEAR(std::stod(f[3]), 0.0, 1e-8);
    EXPECT_EQ(f[5], "1");
}

TEST(Commands, NegatedAlphaStillValidates) {
    const auto out = scratch("negated");
    ASSERT_EQ(run_quiet(args("validate", sample("two_cut_negated.json"), out)), ok);
    const auto report = nlohmann::json::parse(slurp(out / "report.json"));
    EXPECT_EQ(report["sign_convention"], "direct");
    EXPECT_FALSE(report["sign_retry_attempted"].get<bool>());
    EXPECT_NEAR(report["beta"][0].get<double>(), 0.9, 1e-12);
}

TEST(Commands, ValidationAndSolverFailures) {
    const auto dir = scratch("failures");
    fs::create_directories(dir);
    const auto strict = dir / "strict.json";
    std::ofstream(strict) << R"({"cuts": [[-2, -1], [1, 2]], "alpha": [0.3], "n": 7, "tolerances": {"det": 1e-30}})";
    EXPECT_EQ(run_quiet(args("validate", strict.string(), dir / "a")), validation_failure);
    const auto quad = dir / "quad.json";
    std::ofstream(quad) << R"({"cuts": [[-2, -1], [1, 2]], "alpha": [0.3], "n": 7,
                              "tolerances": {"quad_abs": 1e-300, "quad_rel": 1e-300}})";
    EXPECT_EQ(run_quiet(args("build", quad.string(), dir / "b")), solver_failure);
    Args a = args("build", sample("two_cut.json"), dir / "c");
    a.tol = 1e-30;
    EXPECT_EQ(run_quiet(a), solver_failure);
}

TEST(Commands, ReportsAreDeterministic) {
    auto payload = [](const fs::path& out) {
        auto j = nlohmann::json::parse(slurp(out / "report.json"));
        j.erase("timing");
        return j.dump(2);
    };
    const auto a = scratch("det_a"), b = scratch("det_b");
    ASSERT_EQ(run_quiet(args("build", sample("two_cut.json"), a)), ok);
    ASSERT_EQ(run_quiet(args("build", sample("two_cut.json"), b)), ok);
    EXPECT_EQ(payload(a), payload(b));
    EXPECT_EQ(slurp(a / "parametrix.json"), slurp(b / "parametrix.json"));
}

TEST(Commands, SmallSweep) {
    const auto dir = scratch("sweep");
    fs::create_directories(dir);
    const auto cfg = dir / "sweep.json";
    std::ofstream(cfg) << R"({"cuts": [[-2, -1], [0.5, 2]], "alpha": [0.41421356237309515], "n": 1,
                             "sweep": {"m": 16}})";
    Args a = args("sweep", cfg.string(), dir / "out");
    a.n_max = 10;
    a.eps = 0.2;
    ASSERT_EQ(run_quiet(a), ok);
    const auto rows = lines(slurp(dir / "out" / "sweep.csv"));
    ASSERT_EQ(rows.size(), 11u);
    EXPECT_EQ(rows[0], "n,norm,inverse_norm,norm_ratio,inverse_ratio,pass");
    const auto j = nlohmann::json::parse(slurp(dir / "out" / "sweep.json"));
    EXPECT_DOUBLE_EQ(j["eps"].get<double>(), 0.2);
    EXPECT_EQ(j["grid_points"], 16);
}

#ifdef RHP_CLI_PATH
TEST(Binary, ExitCodes) {
    const std::string bin = RHP_CLI_PATH;
    auto code = [&](const std::string& cmdline) {
        const int raw = std::system((bin + " " + cmdline + " >/dev/null 2>&1").c_str());
        return WEXITSTATUS(raw);
    };
    const auto out = scratch("binary");
    EXPECT_EQ(code("build --config " + sample("one_cut.json") + " --out " + out.string()), 0);
    EXPECT_EQ(code("build --config " + sample("overlap.json") + " --out " + out.string()), 1);
    EXPECT_EQ(code("build --out " + out.string()), 1);
    EXPECT_EQ(code("build --config " + sample("two_cut.json") + " --out " + out.string() + " --tol 1e-30"), 3);
}
#endif
