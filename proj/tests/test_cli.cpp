#include "doctest.h"

#include "nlcomp/cli.hpp"
#include "nlcomp/error.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unistd.h>

using namespace nlc;
namespace fs = std::filesystem;

namespace {

const fs::path scenario_dir{NLCOMP_SCENARIO_DIR};

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("nlcomp_cli_" + std::to_string(::getpid())) / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

fs::path write_cfg(const fs::path& dir, const std::string& text) {
    const fs::path p = dir / "scenario.cfg";
    std::ofstream(p) << text;
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> lines_of(const fs::path& p) {
    std::vector<std::string> out;
    std::ifstream in(p);
    for (std::string line; std::getline(in, line);) out.push_back(line);
    return out;
}

/// Value of `key` in a report line "k1=v1; k2=v2".
std::string field(const std::string& line, const std::string& key) {
    const std::string needle = key + "=";
    std::size_t pos = line.rfind(needle, 0) == 0 ? 0 : line.find("; " + needle);
    if (pos == std::string::npos) return {};
    pos += pos == 0 ? needle.size() : needle.size() + 2;
    return line.substr(pos, line.find(';', pos) - pos);
}

ErrorCode code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an error");
    return ErrorCode::IoFailure;
}

const char* heat_cfg = R"(name = tiny-heat
mode = solve
grid.L = 10
grid.N = 101
kernel.family = zero
operator.reaction = none
solver.dt = 0.05
solver.T = 0.5
initial.profile = gaussian
)";

} // namespace

TEST_CASE("shipped scenarios round-trip through the canonical form") {
    int count = 0;
    for (const auto& entry : fs::directory_iterator(scenario_dir)) {
        if (entry.path().extension() != ".cfg") continue;
        ++count;
        CAPTURE(entry.path().string());
        const Scenario a = load_scenario(entry.path());
        validate_scenario(a);
        const std::string text = serialize_scenario(a);
        const Scenario b = parse_scenario_text(text);
        CHECK(a == b);
        CHECK(serialize_scenario(b) == text);
    }
    CHECK(count >= 8);
}

TEST_CASE("number formatting survives the canonical form") {
    Scenario s = parse_scenario_text("name = x\nmode = solve\nsolver.dt = 0.1\ngrid.L = 3.3333333333333335\n");
    const Scenario t = parse_scenario_text(serialize_scenario(s));
    CHECK(t.number("solver.dt") == 0.1);
    CHECK(t.number("grid.L") == s.number("grid.L"));
    CHECK(t.number("tol.residual") == 1e-6);
    CHECK(!t.has("grid.far_left"));
}

TEST_CASE("malformed configurations are rejected") {
    CHECK(code_of([] { parse_scenario_text("name = x\nbogus.key = 1\n"); }) == ErrorCode::Config);
    CHECK(code_of([] { parse_scenario_text("name = x\nname = y\n"); }) == ErrorCode::Config);
    CHECK(code_of([] { parse_scenario_text("grid.N = 4.5\n"); }) == ErrorCode::Config);
    CHECK(code_of([] { parse_scenario_text("grid.L = abc\n"); }) == ErrorCode::Config);
    CHECK(code_of([] { parse_scenario_text("kernel.family = lorentzian\n"); }) == ErrorCode::Config);
    CHECK(code_of([] { parse_scenario_text("solver.truncation_monitor = yes\n"); }) == ErrorCode::Config);
    CHECK(code_of([] { parse_scenario_text("just text\n"); }) == ErrorCode::Config);
    CHECK(code_of([] { validate_scenario(parse_scenario_text("name = x\nmode = solve\noperator.reaction = none\n")); }) ==
          ErrorCode::Config);
    CHECK(code_of([] { validate_scenario(parse_scenario_text("name = x\n")); }) == ErrorCode::Config);
    CHECK(code_of([] {
              validate_scenario(parse_scenario_text(
                  "name = x\nmode = weak-minimum\nkernel.family = zero\noperator.reaction = none\ninitial.profile = one\n"));
          }) == ErrorCode::Config);

    Scenario s = parse_scenario_text(heat_cfg);
    apply_override(s, "grid.N=51");
    CHECK(s.integer("grid.N") == 51);
    CHECK(code_of([&] { apply_override(s, "grid.M=51"); }) == ErrorCode::Config);
    CHECK(code_of([&] { apply_override(s, "grid.N"); }) == ErrorCode::Config);
}

TEST_CASE("exit codes") {
    const fs::path dir = scratch("exit");
    std::ostringstream log;

    // missing kernel for solve mode
    const fs::path no_kernel = write_cfg(dir, "name = k\nmode = solve\noperator.reaction = none\ninitial.profile = zero\n");
    CHECK(run_scenario(no_kernel, dir / "a", {}, log) == 4);
    CHECK(run_scenario(dir / "missing.cfg", dir / "b", {}, log) == 4);

    const fs::path ok = write_cfg(dir, heat_cfg);
    CHECK(run_scenario(ok, dir / "c", {}, log) == 0);
    CHECK(run_scenario(ok, dir / "d", {"solver.T=0.52"}, log) == 4);
    CHECK(run_scenario(ok, dir / "e", {"nope=1"}, log) == 4);
    // exponential growth past the divergence guard
    CHECK(run_scenario(ok, dir / "f", {"operator.reaction=linear", "linear.c0=90", "solver.dt=0.01", "solver.T=1"}, log) ==
          3);

    CHECK(exit_code_for(ErrorCode::StepDiverged) == 3);
    CHECK(exit_code_for(ErrorCode::IoFailure) == 3);
    CHECK(exit_code_for(ErrorCode::Config) == 4);

    // unbounded coefficients: only the bounded-coefficient regime is requested
    const fs::path fronts = scenario_dir / "comparison-fronts.cfg";
    CHECK(run_scenario(fronts, dir / "g",
                       {"operator.coefficients=unbounded-a", "operator.D=0.2", "comparison.regime=fundamental-solution"},
                       log) == 2);
    // positive c is admissible: the declared bound C follows the parameters
    CHECK(run_scenario(scenario_dir / "weak-minimum.cfg", dir / "h", {"linear.c0=0.5", "linear.c_amp=0"}, log) == 0);
}

TEST_CASE("report layout") {
    const fs::path dir = scratch("layout");
    std::ostringstream log;

    REQUIRE(run_scenario(scenario_dir / "kernel-gaussian.cfg", dir / "kernel", {}, log) == 0);
    const auto kernel_lines = lines_of(dir / "kernel" / "report.kv");
    REQUIRE(!kernel_lines.empty());
    for (const auto& l : kernel_lines) CHECK(l.rfind("moment=", 0) == 0);
    CHECK(fs::exists(dir / "kernel" / "summary.txt"));

    REQUIRE(run_scenario(scenario_dir / "comparison-fronts.cfg", dir / "cmp", {}, log) == 0);
    int second = 0, fundamental = 0, conclusions = 0;
    for (const auto& l : lines_of(dir / "cmp" / "report.kv")) {
        if (l.rfind("condition=", 0) == 0) {
            const std::string ref = field(l, "ref");
            CHECK(!field(l, "pass").empty());
            CHECK(!field(l, "margin").empty());
            if (ref.rfind("comparison-second-moment:", 0) == 0 || ref == "operator:kernel-integrable-nonnegative") ++second;
            if (ref.rfind("comparison-fundamental-solution:", 0) == 0) ++fundamental;
        }
        if (l.rfind("conclusion=", 0) == 0) ++conclusions;
    }
    CHECK(second == 9);
    CHECK(fundamental == 8);
    CHECK(conclusions == 2);
    CHECK(fs::exists(dir / "cmp" / "fields" / "lower" / "index.csv"));
    CHECK(fs::exists(dir / "cmp" / "fields" / "upper" / "level_00000.csv"));
    const auto header = lines_of(dir / "cmp" / "fields" / "lower" / "level_00000.csv").front();
    CHECK(header == "x,value");
}

TEST_CASE("runs are deterministic") {
    const fs::path dir = scratch("det");
    std::ostringstream log;
    for (const char* name : {"comparison-fronts.cfg", "fundsol-heat.cfg", "weak-minimum.cfg"}) {
        CAPTURE(name);
        REQUIRE(run_scenario(scenario_dir / name, dir / "one", {}, log) == 0);
        REQUIRE(run_scenario(scenario_dir / name, dir / "two", {}, log) == 0);
        CHECK(slurp(dir / "one" / "report.kv") == slurp(dir / "two" / "report.kv"));
        CHECK(slurp(dir / "one" / "summary.txt") == slurp(dir / "two" / "summary.txt"));
    }
}

TEST_CASE("shipped counterexample and invariant-region scenarios") {
    const fs::path dir = scratch("shipped");
    std::ostringstream log;
    CHECK(run_scenario(scenario_dir / "counterexample-3-7.cfg", dir / "ce", {}, log) == 0);
    bool has_t_star = false;
    for (const auto& l : lines_of(dir / "ce" / "report.kv")) {
        if (field(l, "metric") == "t_star") {
            has_t_star = true;
            const double t = std::stod(field(l, "value"));
            CHECK(t > 0.0);
            CHECK(t <= 1.0);
        }
    }
    CHECK(has_t_star);

    CHECK(run_scenario(scenario_dir / "invariant-4-5.cfg", dir / "inv", {}, log) == 0);
    double max_u = -1.0;
    for (const auto& l : lines_of(dir / "inv" / "report.kv")) {
        const std::string m = field(l, "metric");
        if (m == "clipped_max" || m == "source_max") max_u = std::max(max_u, std::stod(field(l, "value")));
    }
    CHECK(max_u >= 0.0);
    CHECK(max_u <= 1.0 + 1e-6);
}

TEST_CASE("output directory resolution") {
    const Scenario s = parse_scenario_text(heat_cfg);
    CHECK(resolve_output_dir(s, fs::path("/x/y")) == fs::path("/x/y"));
    ::setenv("NLCOMP_OUT", "/tmp/nl-root", 1);
    CHECK(resolve_output_dir(s, std::nullopt) == fs::path("/tmp/nl-root/tiny-heat"));
    ::unsetenv("NLCOMP_OUT");
    CHECK(resolve_output_dir(s, std::nullopt) == fs::path("nlcomp-out/tiny-heat"));
    Scenario t = s;
    t.set("output.dir", "custom/place");
    CHECK(resolve_output_dir(t, std::nullopt) == fs::path("custom/place"));
}
