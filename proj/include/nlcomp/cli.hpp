#pragma once

#include "nlcomp/error.hpp"
#include "nlcomp/grid.hpp"
#include "nlcomp/kernels.hpp"
#include "nlcomp/operator.hpp"
#include "nlcomp/principles.hpp"
#include "nlcomp/solver.hpp"

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace nlc {

enum class ScenarioMode {
    KernelReport,
    Solve,
    WeakMinimum,
    Comparison,
    Counterexample,
    InvariantRegion,
    FundsolVerify,
    Gronwall,
};

ScenarioMode scenario_mode_from_string(const std::string& name);
std::string to_string(ScenarioMode mode);

using ScenarioValue = std::variant<bool, long, double, std::string>;

enum class ValueType { Flag, Integer, Number, Text };

/// One accepted configuration key.
struct KeySchema {
    std::string key;
    ValueType type = ValueType::Number;
    /// Empty means the key has no default and is read only when set.
    std::optional<ScenarioValue> fallback;
    /// Allowed values for enumerated text keys; empty accepts any text.
    std::vector<std::string> choices;
    /// Modes that must set the key.
    std::vector<ScenarioMode> required_by;
    std::string doc;
};

/// Canonical text of one value: true/false, decimal integers, numbers at 17 digits.
std::string render_scenario_value(const ScenarioValue& v);
std::string to_string(ValueType type);

/// All accepted keys, in serialization order.
const std::vector<KeySchema>& scenario_schema();

/// Flat dotted key-value configuration.  Only explicitly set keys are stored;
/// accessors fall back to the schema default.
struct Scenario {
    std::map<std::string, ScenarioValue> values;

    std::string name() const;
    ScenarioMode mode() const;

    bool has(const std::string& key) const;
    bool flag(const std::string& key) const;
    long integer(const std::string& key) const;
    double number(const std::string& key) const;
    std::string text(const std::string& key) const;
    /// Comma-separated numbers held in a text key.
    std::vector<double> numbers(const std::string& key) const;

    /// Parses `raw` against the schema and stores it.  Throws CONFIG_ERROR.
    void set(const std::string& key, const std::string& raw);

    friend bool operator==(const Scenario&, const Scenario&) = default;
};

/// Lines `key = value`; `#` starts a comment.  Unknown or repeated keys and
/// malformed values throw CONFIG_ERROR.  Does not check mode requirements.
Scenario parse_scenario(std::istream& in, const std::string& source = "<input>");
Scenario parse_scenario_text(const std::string& text);
/// Throws CONFIG_ERROR if the file cannot be read.
Scenario load_scenario(const std::filesystem::path& path);

/// Canonical text: one `key = value` line per set key in schema order, numbers
/// at 17 significant digits.
std::string serialize_scenario(const Scenario& s);

/// Applies `key=value`.  Throws CONFIG_ERROR.
void apply_override(Scenario& s, const std::string& assignment);

/// Checks mode requirements and cross-key constraints.  Throws CONFIG_ERROR.
void validate_scenario(const Scenario& s);

KernelSpec scenario_kernel(const Scenario& s);
OperatorSpec scenario_operator(const Scenario& s);
SolverConfig scenario_solver(const Scenario& s);
PrincipleTolerances scenario_tolerances(const Scenario& s);
/// Initial profile under `prefix` (initial, lower or upper).
PointFunction scenario_profile(const Scenario& s, const std::string& prefix);
/// Grid with the far field taken from grid.far_* keys or, when unset, from the
/// profile on the window faces.
Grid scenario_grid(const Scenario& s, const PointFunction& profile);

/// One report.kv line as ordered key-value pairs.
struct ReportLine {
    std::vector<std::pair<std::string, std::string>> fields;

    std::string render() const;
};

struct ReportTable {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

struct RunResult {
    std::string scenario;
    ScenarioMode mode = ScenarioMode::Solve;
    int exit_code = 0;
    std::string status;
    std::vector<ReportLine> lines;
    std::vector<std::string> summary;
    std::vector<ReportTable> tables;
    std::vector<std::pair<std::string, SpaceTimeField>> fields;
};

/// Numbers in reports: 12 significant digits.
std::string format_number(double v);

ReportLine condition_line(const Condition& c, const std::string& kind = "condition");
ReportLine metric_line(const std::string& name, double value);

/// Runs the mode's pipeline.  Library errors propagate.
RunResult execute_scenario(const Scenario& s);

/// Writes summary.txt, report.kv, tables/<name>.csv and fields/<label>/.
/// Throws IO_FAILURE.
void emit_report(const RunResult& result, const std::filesystem::path& dir, int csv_stride = 0, bool write_fields = true);

/// Exit codes: 0 checks pass, 1 conclusion violated with hypotheses satisfied,
/// 2 hypotheses not satisfied, 3 numerical or IO failure, 4 configuration error.
int exit_code_for(ErrorCode code);

/// Output directory: `out` if given, else output.dir, else $NLCOMP_OUT/<name>,
/// else nlcomp-out/<name>.
std::filesystem::path resolve_output_dir(const Scenario& s, const std::optional<std::filesystem::path>& out);

/// Load, override, validate, execute, emit.  Diagnostics go to `log`.
int run_scenario(const std::filesystem::path& path, const std::optional<std::filesystem::path>& out,
                 const std::vector<std::string>& overrides, std::ostream& log);

} // namespace nlc
