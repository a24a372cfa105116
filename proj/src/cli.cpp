#include "nlcomp/cli.hpp"

#include "nlcomp/error.hpp"
#include "nlcomp/fundsol.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

namespace nlc {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

const std::vector<std::pair<ScenarioMode, std::string>>& mode_names() {
    static const std::vector<std::pair<ScenarioMode, std::string>> names{
        {ScenarioMode::KernelReport, "kernel-report"},
        {ScenarioMode::Solve, "solve"},
        {ScenarioMode::WeakMinimum, "weak-minimum"},
        {ScenarioMode::Comparison, "comparison"},
        {ScenarioMode::Counterexample, "counterexample-3-7"},
        {ScenarioMode::InvariantRegion, "invariant-4-5"},
        {ScenarioMode::FundsolVerify, "fundsol-verify"},
        {ScenarioMode::Gronwall, "gronwall"},
    };
    return names;
}

std::vector<std::string> mode_choices() {
    std::vector<std::string> out;
    for (const auto& [m, n] : mode_names()) out.push_back(n);
    return out;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<KeySchema> build_schema() {
    using M = ScenarioMode;
    const std::vector<M> all_kernel{M::KernelReport, M::Solve,          M::WeakMinimum,    M::Comparison,
                                    M::Counterexample, M::InvariantRegion, M::Gronwall};
    const std::vector<std::string> profiles{"smoothstep-front", "gaussian", "constant", "zero", "one"};
    std::vector<KeySchema> s;
    auto add = [&](std::string key, ValueType type, std::optional<ScenarioValue> fallback, std::string doc,
                   std::vector<std::string> choices = {}, std::vector<M> required = {}) {
        s.push_back({std::move(key), type, std::move(fallback), std::move(choices), std::move(required), std::move(doc)});
    };
    const auto F = ValueType::Flag;
    const auto I = ValueType::Integer;
    const auto N = ValueType::Number;
    const auto T = ValueType::Text;
    std::vector<M> every;
    for (const auto& [m, n] : mode_names()) every.push_back(m);

    add("name", T, std::nullopt, "scenario name, also the default output subdirectory", {}, every);
    add("mode", T, std::nullopt, "pipeline to run", mode_choices(), every);
    add("output.dir", T, std::nullopt, "output directory");
    add("output.csv_stride", I, 0L, "store every k-th level in field CSVs; 0 picks about 20 levels");
    add("output.fields", F, true, "write field CSVs");

    add("grid.dim", I, 1L, "spatial dimension, 1 or 2");
    add("grid.L", N, 20.0, "window half-width");
    add("grid.N", I, 401L, "points per axis");
    add("grid.far_left", N, std::nullopt, "far-field value beyond x1 = -L");
    add("grid.far_right", N, std::nullopt, "far-field value beyond x1 = L");
    add("grid.far_bottom", N, std::nullopt, "far-field value beyond x2 = -L");
    add("grid.far_top", N, std::nullopt, "far-field value beyond x2 = L");

    add("kernel.family", T, std::nullopt, "kernel family",
        {"gaussian", "box", "triangle", "exponential", "cauchy", "tabulated", "zero"}, all_kernel);
    add("kernel.sigma", N, 1.0, "gaussian standard deviation");
    add("kernel.halfwidth", N, 1.0, "box or triangle half-width");
    add("kernel.height", N, 0.5, "box height");
    add("kernel.rate", N, 1.0, "exponential decay rate");
    add("kernel.scale", N, 1.0, "cauchy scale");
    add("kernel.file", T, std::nullopt, "two-column table for the tabulated family");

    add("operator.coefficients", T, std::string("heat"), "diffusion and drift family",
        {"heat", "drifted-heat", "unbounded-a"});
    add("operator.D", N, 1.0, "diffusion coefficient");
    add("operator.b1", N, 0.0, "drift along x1 (drifted-heat)");
    add("operator.b2", N, 0.0, "drift along x2 (drifted-heat)");
    add("operator.reaction", T, std::nullopt, "reaction term, or linear for c u + d Ju",
        {"none", "fkpp-nonlocal", "fkpp-clipped", "fkpp-source", "logistic-local", "linear"},
        {M::Solve, M::WeakMinimum, M::Comparison, M::Gronwall});
    add("linear.c0", N, 0.0, "constant part of c");
    add("linear.c_amp", N, 0.0, "amplitude of cos(omega x1) in c");
    add("linear.d0", N, 0.0, "constant part of d");
    add("linear.d_amp", N, 0.0, "amplitude of cos(omega x1) in d");
    add("linear.omega", N, 1.0, "wavenumber of the coefficient modulation");

    add("solver.dt", N, 1e-2, "time step");
    add("solver.T", N, 1.0, "final time, a whole multiple of dt");
    add("solver.scheme", T, std::string("backward-euler"), "implicit part of the IMEX step",
        {"backward-euler", "crank-nicolson"});
    add("solver.store_every", I, 1L, "store every k-th step");
    add("solver.backend", T, std::string("fast"), "convolution backend", {"fast", "direct"});
    add("solver.truncation_monitor", F, false, "re-run on a doubled window and compare");

    for (const std::string prefix : {"initial", "lower", "upper"}) {
        std::vector<M> req;
        if (prefix == "initial") req = {M::Solve, M::WeakMinimum};
        else req = {M::Comparison, M::Gronwall};
        add(prefix + ".profile", T, std::nullopt, "initial profile shape", profiles, req);
        add(prefix + ".amplitude", N, 1.0, "profile amplitude");
        add(prefix + ".shift", N, 0.0, "profile position along x1");
        add(prefix + ".width", N, 1.0, "profile width");
    }

    add("comparison.regime", T, std::string("both"), "comparison principle to audit",
        {"second-moment", "fundamental-solution", "both"});

    add("tol.residual", N, 1e-6, "residual sign tolerance, relative");
    add("tol.ordering", N, 1e-8, "boundary ordering tolerance, relative");
    add("tol.conclusion", N, 1e-8, "conclusion tolerance, relative");
    add("tol.region", N, 1e-6, "invariant region tolerance");
    add("tol.jquotient", N, 1e-6, "kernel quotient bound tolerance");
    add("tol.delta", N, 1e-2, "delta family tolerance at the smallest time");
    add("tol.representation", N, 1e-3, "representation shortfall, relative");
    add("tol.gronwall", N, 1e-10, "initial smallness for the Groenwall step");

    add("counterexample.class_halfwidth", N, 1.0, "support half-width the kernel must cover");
    add("counterexample.delta", N, 1e-3, "required exceedance over 1");
    add("counterexample.refinement", T, std::string("0.0005,0.00025"), "extra forward-difference steps");
    add("counterexample.control_tol", N, 1e-8, "bound tolerance for the local control run");

    add("fundsol.c", N, 0.0, "zeroth-order coefficient of the constant-coefficient operator");
    add("fundsol.horizon", N, 1.0, "largest time lag for the bound fit");
    add("fundsol.samples", I, 10000L, "random samples for the bound check");
    add("fundsol.seed", I, 20240601L, "seed for the bound check");
    add("fundsol.test_function", T, std::string("bump"), "delta family test function",
        {"constant", "cosine", "bump"});
    add("fundsol.times", T, std::string("0.1,0.01,0.001"), "delta family times, decreasing");
    add("fundsol.lambda_fraction", N, 0.9, "lambda as a fraction of min(D, 1/D)");
    add("fundsol.safety", N, 1.05, "safety factor on kappa");

    add("gronwall.representation", F, true, "also check the integral representation");
    add("gronwall.samples", I, 20L, "representation sample points");
    return s;
}

const KeySchema* find_key(const std::string& key) {
    for (const auto& k : scenario_schema()) {
        if (k.key == key) return &k;
    }
    return nullptr;
}

const KeySchema& require_key(const std::string& key) {
    const KeySchema* k = find_key(key);
    if (!k) throw Error(ErrorCode::Config, "unknown key '" + key + "'");
    return *k;
}

ScenarioValue parse_value(const KeySchema& k, const std::string& raw) {
    const std::string v = trim(raw);
    auto bad = [&](const std::string& what) {
        return Error(ErrorCode::Config, "key '" + k.key + "': " + what + " '" + v + "'");
    };
    switch (k.type) {
    case ValueType::Flag:
        if (v == "true") return true;
        if (v == "false") return false;
        throw bad("expected true or false, got");
    case ValueType::Integer: {
        long out = 0;
        auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
        if (ec != std::errc{} || p != v.data() + v.size() || v.empty()) throw bad("expected an integer, got");
        return out;
    }
    case ValueType::Number: {
        double out = 0.0;
        auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
        if (ec != std::errc{} || p != v.data() + v.size() || v.empty()) throw bad("expected a number, got");
        if (!std::isfinite(out)) throw bad("expected a finite number, got");
        return out;
    }
    case ValueType::Text:
        if (v.empty()) throw bad("empty value");
        if (!k.choices.empty() && std::find(k.choices.begin(), k.choices.end(), v) == k.choices.end()) {
            std::string opts;
            for (const auto& c : k.choices) opts += (opts.empty() ? "" : ", ") + c;
            throw bad("expected one of {" + opts + "}, got");
        }
        return v;
    }
    throw bad("unsupported value");
}

std::string render_value(const ScenarioValue& v) {
    if (const bool* b = std::get_if<bool>(&v)) return *b ? "true" : "false";
    if (const long* i = std::get_if<long>(&v)) return std::to_string(*i);
    if (const double* d = std::get_if<double>(&v)) return fmt17(*d);
    return std::get<std::string>(v);
}

template <class T>
T typed(const Scenario& s, const std::string& key) {
    const KeySchema& k = require_key(key);
    auto it = s.values.find(key);
    if (it != s.values.end()) return std::get<T>(it->second);
    if (!k.fallback) throw Error(ErrorCode::Config, "missing required key '" + key + "'");
    return std::get<T>(*k.fallback);
}

std::string pass_text(bool pass) { return pass ? "true" : "false"; }

std::string witness_text(const std::optional<Witness>& w, int dim) {
    if (!w) return "-";
    std::string out = "x=" + format_number(w->x[0]);
    if (dim == 2) out += ",y=" + format_number(w->x[1]);
    return out + ",t=" + format_number(w->t);
}

void summarize_condition(RunResult& r, const Condition& c, int dim) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%-28s", c.id.c_str());
    r.summary.push_back(std::string("  ") + (c.pass ? "PASS " : "FAIL ") + buf + " margin " + format_number(c.margin) +
                        "  at " + witness_text(c.witness, dim) + "  [" + c.ref + "]");
}

void report_verdict(RunResult& r, const ComparisonVerdict& v, int dim) {
    r.lines.push_back({{{"verdict", v.principle},
                        {"applicability", to_string(v.applicability)},
                        {"inconsistency", pass_text(v.internal_inconsistency)},
                        {"gap", format_number(v.gap)}}});
    for (const auto& h : v.hypotheses) r.lines.push_back(condition_line(h));
    r.lines.push_back(condition_line(v.conclusion, "conclusion"));

    r.summary.push_back(v.principle + ": " + to_string(v.applicability) +
                        (v.internal_inconsistency ? " (INTERNAL_INCONSISTENCY)" : ""));
    for (const auto& h : v.hypotheses) summarize_condition(r, h, dim);
    r.summary.push_back(" conclusion:");
    summarize_condition(r, v.conclusion, dim);
    for (const auto& n : v.notes) r.summary.push_back("  note: " + n);
}

void add_metric(RunResult& r, const std::string& name, double value) {
    r.lines.push_back(metric_line(name, value));
    r.summary.push_back("  " + name + " = " + format_number(value));
}

void finish(RunResult& r, int code, const std::string& status) {
    r.exit_code = code;
    r.status = status;
    r.lines.push_back({{{"status", status}, {"exit", std::to_string(code)}}});
}

/// Exit code for a set of audited principles: 1 on any inconsistency, 2 when no
/// principle applies, else 0.
void finish_principles(RunResult& r, const std::vector<const ComparisonVerdict*>& verdicts) {
    bool inconsistent = false, applies = false;
    for (const auto* v : verdicts) {
        inconsistent = inconsistent || v->internal_inconsistency;
        applies = applies || v->applicability == Applicability::TheoremApplies;
    }
    if (inconsistent) finish(r, 1, "INTERNAL_INCONSISTENCY");
    else if (!applies) finish(r, 2, "HYPOTHESES_FAIL");
    else finish(r, 0, "PASS");
}

SpaceTimeField solve_profile(const Scenario& s, const OperatorSpec& op, const std::string& prefix) {
    const PointFunction profile = scenario_profile(s, prefix);
    const Grid g = scenario_grid(s, profile);
    return solve_ibvp(op, discretize(g, profile), scenario_solver(s));
}

Scheme scheme_of(const Scenario& s) {
    return s.text("solver.scheme") == "crank-nicolson" ? Scheme::CrankNicolson : Scheme::BackwardEuler;
}

ConstCoeffParams constant_params(const Scenario& s, const OperatorSpec& op, double reaction) {
    if (!op.coeffs.constant_diffusion || !op.coeffs.constant_drift) {
        throw Error(ErrorCode::Config, "mode needs constant coefficients (heat or drifted-heat)");
    }
    ConstCoeffParams p{*op.coeffs.constant_diffusion, *op.coeffs.constant_drift, reaction,
                       static_cast<int>(s.integer("grid.dim"))};
    p.validate();
    return p;
}

void run_kernel_report(const Scenario& s, RunResult& r) {
    const KernelSpec k = scenario_kernel(s);
    const AdmissibilityCertificate cert = classify_kernel(k, s.number("counterexample.class_halfwidth"));
    const MomentReport& m = cert.moments;
    r.summary.push_back("kernel " + k.describe());
    auto moment = [&](const std::string& name, const std::string& value) {
        r.lines.push_back({{{"moment", name}, {"value", value}}});
        r.summary.push_back("  " + name + " = " + value);
    };
    moment("l1_norm", format_number(m.l1_norm));
    moment("second_moment", m.second_moment ? format_number(*m.second_moment) : "divergent");
    moment("support_halfwidth", m.support_halfwidth ? format_number(*m.support_halfwidth) : "unbounded");
    moment("even", pass_text(m.is_even));
    moment("normalized", pass_text(m.normalized));
    moment("analytic", pass_text(m.analytic));
    moment("min_sample", format_number(m.min_sample));
    for (const Check* c : cert.checks()) {
        r.lines.push_back({{{"moment", c->id}, {"value", format_number(c->measured)}, {"pass", pass_text(c->pass)}}});
        r.summary.push_back(std::string("  ") + (c->pass ? "PASS " : "FAIL ") + c->id + " measured " +
                            format_number(c->measured));
    }
    if (m.divergent()) {
        for (const auto& [radius, partial] : m.evidence) {
            r.summary.push_back("  partial second moment to " + format_number(radius) + " = " + format_number(partial));
        }
    }
    ReportTable trail{"moment_evidence", {"radius", "partial_second_moment"}, {}};
    for (const auto& [radius, partial] : m.evidence) trail.rows.push_back({radius, partial});
    r.tables.push_back(std::move(trail));

    bool bound_ok = true;
    if (!m.divergent() && cert.l1_nonnegative.pass) {
        const Grid g(static_cast<int>(s.integer("grid.dim")), s.number("grid.L"), static_cast<int>(s.integer("grid.N")));
        const JQuotientCheck q = jquotient_bound_check(k, g, s.number("tol.jquotient"));
        r.lines.push_back({{{"moment", "jquotient_max"},
                            {"value", format_number(q.measured_max)},
                            {"bound", format_number(q.bound)},
                            {"pass", pass_text(q.pass)}}});
        r.summary.push_back(std::string("  ") + (q.pass ? "PASS " : "FAIL ") + "jquotient max " +
                            format_number(q.measured_max) + " at |x| = " + format_number(q.argmax) + " against bound " +
                            format_number(q.bound));
        bound_ok = q.pass;
    }
    r.exit_code = bound_ok ? 0 : 1;
    r.status = bound_ok ? "PASS" : "INTERNAL_INCONSISTENCY";
}

void run_solve(const Scenario& s, RunResult& r) {
    const OperatorSpec op = scenario_operator(s);
    SpaceTimeField u = solve_profile(s, op, "initial");
    const Extremum lo = field_min(u), hi = field_max(u);
    const int dim = u.grid().dim();
    add_metric(r, "levels", static_cast<double>(u.num_levels()));
    add_metric(r, "min_u", lo.value);
    add_metric(r, "max_u", hi.value);
    r.summary.push_back("  min at " + witness_text(lo.at, dim) + ", max at " + witness_text(hi.at, dim));
    if (u.meta().truncation_discrepancy) add_metric(r, "truncation_discrepancy", *u.meta().truncation_discrepancy);
    r.fields.emplace_back("u", std::move(u));
    finish(r, 0, "PASS");
}

void run_weak_minimum(const Scenario& s, RunResult& r) {
    const OperatorSpec op = scenario_operator(s);
    if (!op.is_linear()) throw Error(ErrorCode::Config, "weak-minimum mode needs operator.reaction = linear");
    SpaceTimeField u = solve_profile(s, op, "initial");
    const ComparisonVerdict v = verify_weak_minimum(op, u, scenario_tolerances(s));
    report_verdict(r, v, u.grid().dim());

    const double T = u.times().back();
    const AuxiliaryTransform aux = auxiliary_transform(op, u.grid(), {0.0, 0.5 * T, T});
    r.lines.push_back({{{"auxiliary", "nu"},
                        {"nu", format_number(aux.nu)},
                        {"formula", format_number(aux.nu_formula)},
                        {"doublings", std::to_string(aux.doublings)},
                        {"max_transformed_one", format_number(aux.max_transformed_one)},
                        {"pass", pass_text(aux.formula_sufficient())}}});
    r.summary.push_back("auxiliary transform: nu = " + format_number(aux.nu) + " (formula " +
                        format_number(aux.nu_formula) + "), max of transformed P[1] = " +
                        format_number(aux.max_transformed_one) + " at " + witness_text(aux.max_at, u.grid().dim()));
    r.fields.emplace_back("u", std::move(u));
    finish_principles(r, {&v});
    if (r.exit_code == 0 && !aux.formula_sufficient()) {
        r.lines.pop_back();
        finish(r, 1, "INTERNAL_INCONSISTENCY");
    }
}

void run_comparison(const Scenario& s, RunResult& r) {
    const OperatorSpec op = scenario_operator(s);
    SpaceTimeField lo = solve_profile(s, op, "lower");
    SpaceTimeField up = solve_profile(s, op, "upper");
    const std::string regime = s.text("comparison.regime");
    std::vector<ComparisonVerdict> verdicts;
    if (regime != "fundamental-solution") {
        verdicts.push_back(verify_comparison(op, lo, up, ComparisonRegime::SecondMoment, scenario_tolerances(s)));
    }
    if (regime != "second-moment") {
        verdicts.push_back(verify_comparison(op, lo, up, ComparisonRegime::FundamentalSolution, scenario_tolerances(s)));
    }
    std::vector<const ComparisonVerdict*> ptrs;
    for (const auto& v : verdicts) {
        report_verdict(r, v, lo.grid().dim());
        ptrs.push_back(&v);
    }
    r.fields.emplace_back("lower", std::move(lo));
    r.fields.emplace_back("upper", std::move(up));
    finish_principles(r, ptrs);
}

void run_counterexample(const Scenario& s, RunResult& r) {
    CounterexampleConfig cfg;
    cfg.diffusion = s.number("operator.D");
    cfg.kernel = scenario_kernel(s);
    cfg.class_halfwidth = s.number("counterexample.class_halfwidth");
    cfg.halfwidth = s.number("grid.L");
    cfg.points = static_cast<int>(s.integer("grid.N"));
    cfg.dt = s.number("solver.dt");
    cfg.T = s.number("solver.T");
    cfg.delta = s.number("counterexample.delta");
    cfg.scheme = scheme_of(s);
    cfg.truncation_monitor = s.flag("solver.truncation_monitor");
    cfg.refinement_dts = s.numbers("counterexample.refinement");
    cfg.control_tol = s.number("counterexample.control_tol");
    CounterexampleReport rep = reproduce_counterexample(cfg);

    add_metric(r, "ju0_at_origin", rep.ju0_at_origin);
    add_metric(r, "predictor", rep.predictor);
    add_metric(r, "forward_difference", rep.forward_difference);
    ReportTable table{"forward_difference", {"dt", "value", "relative_error"}, {}};
    for (const auto& row : rep.refinement) {
        table.rows.push_back({row.dt, row.value, row.relative_error});
        r.lines.push_back({{{"refinement", format_number(row.dt)},
                            {"value", format_number(row.value)},
                            {"relative_error", format_number(row.relative_error)}}});
        r.summary.push_back("  forward difference at dt " + format_number(row.dt) + ": " + format_number(row.value) +
                            " (relative error " + format_number(row.relative_error) + ")");
    }
    r.tables.push_back(std::move(table));
    r.lines.push_back({{{"check", "forward_positive"}, {"pass", pass_text(rep.forward_positive)}}});
    r.lines.push_back({{{"check", "within_20_percent"}, {"pass", pass_text(rep.within_20_percent)}}});
    r.lines.push_back({{{"check", "exceedance"}, {"pass", pass_text(rep.exceedance)}}});
    r.lines.push_back({{{"check", "control"}, {"pass", pass_text(rep.control_ok)}}});
    add_metric(r, "max_u", rep.max_u);
    if (rep.t_star) add_metric(r, "t_star", *rep.t_star);
    if (rep.x_star) add_metric(r, "x_star", *rep.x_star);
    add_metric(r, "control_max_u", rep.control_max_u);
    if (rep.truncation_discrepancy) add_metric(r, "truncation_discrepancy", *rep.truncation_discrepancy);
    report_verdict(r, rep.verdict, 1);
    if (rep.solution) r.fields.emplace_back("solution", std::move(*rep.solution));
    // inverted semantics: success means the violation was reproduced
    if (rep.reproduced()) finish(r, 0, "VIOLATION_REPRODUCED");
    else finish(r, 1, "NOT_REPRODUCED");
}

void run_invariant_region(const Scenario& s, RunResult& r) {
    InvariantRegionConfig cfg;
    cfg.diffusion = s.number("operator.D");
    cfg.kernel = scenario_kernel(s);
    cfg.halfwidth = s.number("grid.L");
    cfg.points = static_cast<int>(s.integer("grid.N"));
    cfg.dt = s.number("solver.dt");
    cfg.T = s.number("solver.T");
    cfg.tol = s.number("tol.region");
    cfg.initial = initial_profile_from_string(s.has("initial.profile") ? s.text("initial.profile") : "smoothstep-front");
    cfg.front_position = s.number("initial.shift");
    cfg.front_width = s.has("initial.width") ? s.number("initial.width") : cfg.front_width;
    cfg.scheme = scheme_of(s);
    InvariantRegionReport rep = invariant_region_check(cfg);

    add_metric(r, "clipped_min", rep.clipped_min);
    add_metric(r, "clipped_max", rep.clipped_max);
    add_metric(r, "source_min", rep.source_min);
    add_metric(r, "source_max", rep.source_max);
    add_metric(r, "max_difference", rep.max_difference);
    const double lower_slack = std::min(rep.clipped_min, rep.source_min) + cfg.tol;
    const double upper_slack = 1.0 + cfg.tol - std::max(rep.clipped_max, rep.source_max);
    const std::string ref = "invariant-region:";
    Witness bound_at = rep.clipped_max >= rep.source_max ? rep.clipped_max_at : rep.source_max_at;
    if (lower_slack < upper_slack) bound_at = rep.clipped_min <= rep.source_min ? rep.clipped_min_at : rep.source_min_at;
    Condition bounds{"bounds_hold", ref + "zero-one", rep.bounds_hold, std::min(lower_slack, upper_slack), bound_at};
    Condition agree{"solutions_agree", ref + "reactions-coincide", rep.solutions_agree, cfg.tol - rep.max_difference,
                    rep.difference_at};
    for (const auto* c : {&bounds, &agree}) {
        r.lines.push_back(condition_line(*c));
        summarize_condition(r, *c, 1);
    }
    if (rep.clipped) r.fields.emplace_back("clipped", std::move(*rep.clipped));
    if (rep.source) r.fields.emplace_back("source", std::move(*rep.source));
    if (rep.pass()) finish(r, 0, "PASS");
    else finish(r, 1, "INVARIANT_REGION_VIOLATED");
}

void run_fundsol(const Scenario& s, RunResult& r) {
    const OperatorSpec full = [&] {
        ParamMap params{{"D", s.number("operator.D")}};
        if (s.text("operator.coefficients") == "drifted-heat") {
            params["b1"] = s.number("operator.b1");
            params["b2"] = s.number("operator.b2");
        }
        const int dim = static_cast<int>(s.integer("grid.dim"));
        return OperatorSpec{make_coefficients(s.text("operator.coefficients"), params, dim), make_reaction("none"),
                            KernelSpec::zero(dim)};
    }();
    const ConstCoeffParams p = constant_params(s, full, s.number("fundsol.c"));
    const int dim = p.dim;
    const std::string ref = "fundamental-solution:";
    std::vector<Condition> checks;
    auto pt = [dim](double a) { return dim == 2 ? Point{a, -0.5 * a} : Point{a, 0.0}; };

    // mass: int Gamma dxi = e^{c (t - tau)}
    double mass_defect = 0.0;
    Witness mass_at;
    for (const auto& [t, tau] : std::vector<std::pair<double, double>>{{1.0, 0.0}, {0.1, 0.0}, {2.0, 0.5}}) {
        for (double a : {0.0, 0.7}) {
            const double d = std::abs(gamma_mass(p, pt(a), t, tau) * std::exp(-p.reaction * (t - tau)) - 1.0);
            if (d >= mass_defect) {
                mass_defect = d;
                mass_at = {pt(a), t};
            }
        }
    }
    checks.push_back({"mass_identity", ref + "mass", mass_defect <= 1e-8, 1e-8 - mass_defect, mass_at});

    double adjoint_gap = 0.0;
    for (double a : {-1.0, 0.0, 0.4}) {
        for (const auto& [t, tau] : std::vector<std::pair<double, double>>{{1.0, 0.0}, {0.3, 0.1}}) {
            const double g = gamma_eval(p, pt(a), t, pt(0.2), tau);
            const double gs = gamma_adjoint_eval(p, pt(0.2), tau, pt(a), t);
            adjoint_gap = std::max(adjoint_gap, std::abs(g - gs));
        }
    }
    checks.push_back({"adjoint_identity", ref + "adjoint", adjoint_gap == 0.0, -adjoint_gap, std::nullopt});

    const double ck = std::max(chapman_kolmogorov_defect(p, pt(0.4), 1.0, 0.6, pt(-0.3), 0.1),
                               chapman_kolmogorov_defect(p, pt(1.0), 2.0, 0.05, pt(0.0), 0.0));
    checks.push_back({"chapman_kolmogorov", ref + "semigroup", ck <= 1e-6, 1e-6 - ck, std::nullopt});

    const double res = std::max(std::abs(gamma_residual(p, pt(0.5), 1.0, pt(0.0), 0.3)),
                                std::abs(gamma_adjoint_residual(p, pt(0.5), 0.3, pt(0.0), 1.0)));
    checks.push_back({"residual", ref + "solves-equation", res <= 1e-4, 1e-4 - res, std::nullopt});

    const std::vector<double> ts = s.numbers("fundsol.times");
    const TestFunction f = test_function_from_string(s.text("fundsol.test_function"));
    const DeltaFamilyReport delta =
        delta_family_check(p, f, {pt(0.0), pt(0.4), pt(-1.3)}, ts, 0.0, s.number("tol.delta"));
    ReportTable dtable{"delta_family", {"t", "max_deviation"}, {}};
    double min_drop = inf;
    for (std::size_t i = 0; i < delta.rows.size(); ++i) {
        dtable.rows.push_back({delta.rows[i].t, delta.rows[i].max_deviation});
        if (i > 0) min_drop = std::min(min_drop, delta.rows[i - 1].max_deviation - delta.rows[i].max_deviation);
    }
    r.tables.push_back(std::move(dtable));
    checks.push_back({"delta_family_decreasing", ref + "initial-delta", delta.strictly_decreasing, min_drop, std::nullopt});
    const double last_dev = delta.rows.empty() ? 0.0 : delta.rows.back().max_deviation;
    checks.push_back({"delta_family_tolerance", ref + "initial-delta", delta.below_tolerance,
                      s.number("tol.delta") - last_dev, std::nullopt});

    const GammaBoundFit fit = gaussian_bound_check(
        p, derive_bound_constants(p, s.number("fundsol.horizon"), s.number("fundsol.lambda_fraction"),
                                  s.number("fundsol.safety")),
        static_cast<std::size_t>(s.integer("fundsol.samples")), static_cast<std::uint64_t>(s.integer("fundsol.seed")));
    add_metric(r, "kappa", fit.kappa);
    add_metric(r, "lambda", fit.lambda);
    add_metric(r, "max_ratio_value", fit.max_ratio_value);
    add_metric(r, "max_ratio_gradient", fit.max_ratio_gradient);
    add_metric(r, "min_gamma", fit.min_gamma);
    checks.push_back({"gaussian_bounds", ref + "gaussian-bounds", fit.pass,
                      1.0 - std::max(fit.max_ratio_value, fit.max_ratio_gradient),
                      Witness{fit.worst_offset, fit.worst_lag}});

    bool ok = true;
    for (const auto& c : checks) {
        r.lines.push_back(condition_line(c));
        summarize_condition(r, c, dim);
        ok = ok && c.pass;
    }
    if (ok) finish(r, 0, "PASS");
    else finish(r, 1, "CHECK_FAILED");
}

void run_gronwall(const Scenario& s, RunResult& r) {
    const OperatorSpec op = scenario_operator(s);
    if (op.is_linear()) throw Error(ErrorCode::Config, "gronwall mode needs a reaction, not linear coefficients");
    SpaceTimeField lo = solve_profile(s, op, "lower");
    SpaceTimeField up = solve_profile(s, op, "upper");
    TransformedPair tp = transform_pair(op, lo, up);
    add_metric(r, "shift_k", tp.k);
    add_metric(r, "c_sup", tp.c_sup);
    add_metric(r, "d_sup", tp.d_sup);
    add_metric(r, "identity_residual", tp.identity_residual);

    const ConstCoeffParams p = constant_params(s, op, 0.0);
    const GammaBoundFit fit = gaussian_bound_check(
        p, derive_bound_constants(p, tp.w.times().back(), s.number("fundsol.lambda_fraction"), s.number("fundsol.safety")),
        static_cast<std::size_t>(s.integer("fundsol.samples")), static_cast<std::uint64_t>(s.integer("fundsol.seed")));
    const double l1 = kernel_norms(op.kernel).l1_norm;
    const double C = gronwall_constant(fit.kappa, fit.lambda, tp.c_sup, tp.d_sup, l1, p.dim);
    add_metric(r, "kappa", fit.kappa);
    add_metric(r, "lambda", fit.lambda);
    add_metric(r, "gronwall_constant", C);
    const std::string ref = "comparison-fundamental-solution:";
    std::vector<Condition> checks;
    checks.push_back({"gaussian_bounds", ref + "gaussian-bounds", fit.pass,
                      1.0 - std::max(fit.max_ratio_value, fit.max_ratio_gradient), Witness{fit.worst_offset, fit.worst_lag}});
    checks.push_back({"transformed_nonnegative", ref + "transformed-coefficients",
                      tp.c.min() >= 0.0 && tp.d.min() >= 0.0, std::min(tp.c.min(), tp.d.min()), std::nullopt});

    bool representation_ok = true;
    if (s.flag("gronwall.representation")) {
        const long n = std::max(1L, s.integer("gronwall.samples"));
        const auto& times = tp.w.times();
        const double half = 0.5 * tp.w.grid().halfwidth();
        std::vector<Witness> samples;
        for (long i = 0; i < n; ++i) {
            const double a = -half + 2.0 * half * static_cast<double>(i) / static_cast<double>(std::max(1L, n - 1));
            const std::size_t level = 1 + static_cast<std::size_t>(i) * (times.size() - 2) / static_cast<std::size_t>(n);
            samples.push_back({{a, 0.0}, times[std::min(level, times.size() - 1)]});
        }
        RepresentationConfig rc;
        rc.tolerance = s.number("tol.representation");
        const RepresentationReport rep = integral_representation_check(p, op.kernel, tp.c, tp.d, tp.w, samples, rc);
        ReportTable table{"representation", {"x", "t", "lhs", "rhs"}, {}};
        for (const auto& row : rep.rows) table.rows.push_back({row.x[0], row.t, row.lhs, row.rhs});
        r.tables.push_back(std::move(table));
        const double scale = std::max(1.0, tp.w.max_abs());
        checks.push_back({"integral_representation", ref + "representation", rep.pass,
                          rep.min_slack + rep.tolerance * scale, std::nullopt});
        representation_ok = rep.pass;
    }

    const std::vector<double> psi = negative_part_series(tp.w);
    const GronwallVerdict g = discrete_gronwall(tp.w.times(), psi, C, s.number("tol.gronwall"));
    ReportTable series{"negative_part", {"t", "psi"}, {}};
    for (std::size_t i = 0; i < psi.size(); ++i) series.rows.push_back({tp.w.times()[i], psi[i]});
    r.tables.push_back(std::move(series));
    const std::optional<Witness> at =
        g.first_violation ? std::optional<Witness>(Witness{{0.0, 0.0}, tp.w.times()[*g.first_violation]}) : std::nullopt;
    checks.push_back({"gronwall_premise", ref + "groenwall", g.premise_holds, -g.max_premise_excess, at});
    checks.push_back({"gronwall_conclusion", ref + "groenwall", g.status == GronwallStatus::Holds,
                      1.0 - g.max_conclusion_ratio, at});
    for (const auto& c : checks) {
        r.lines.push_back(condition_line(c));
        summarize_condition(r, c, p.dim);
    }
    r.lines.push_back({{{"gronwall", to_string(g.status)}}});
    r.summary.push_back("groenwall: " + to_string(g.status));

    r.fields.emplace_back("lower", std::move(lo));
    r.fields.emplace_back("upper", std::move(up));
    r.fields.emplace_back("w", std::move(tp.w));
    if (g.status == GronwallStatus::PremiseFailed) finish(r, 2, "PREMISE_FAILED");
    else if (g.status == GronwallStatus::ConclusionFailed) finish(r, 1, "INTERNAL_INCONSISTENCY");
    else if (!fit.pass || !representation_ok) finish(r, 1, "CHECK_FAILED");
    else finish(r, 0, "PASS");
}

void write_table(const std::filesystem::path& path, const ReportTable& t) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
    for (std::size_t i = 0; i < t.columns.size(); ++i) out << (i ? "," : "") << t.columns[i];
    out << '\n';
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_number(row[i]);
        out << '\n';
    }
    if (!out) throw Error(ErrorCode::IoFailure, "failed writing " + path.string());
}

} // namespace

std::string render_scenario_value(const ScenarioValue& v) { return render_value(v); }

std::string to_string(ValueType type) {
    switch (type) {
    case ValueType::Flag: return "flag";
    case ValueType::Integer: return "integer";
    case ValueType::Number: return "number";
    case ValueType::Text: return "text";
    }
    return "unknown";
}

ScenarioMode scenario_mode_from_string(const std::string& name) {
    for (const auto& [m, n] : mode_names()) {
        if (n == name) return m;
    }
    throw Error(ErrorCode::Config, "unknown mode '" + name + "'");
}

std::string to_string(ScenarioMode mode) {
    for (const auto& [m, n] : mode_names()) {
        if (m == mode) return n;
    }
    return "unknown";
}

const std::vector<KeySchema>& scenario_schema() {
    static const std::vector<KeySchema> schema = build_schema();
    return schema;
}

std::string Scenario::name() const { return text("name"); }
ScenarioMode Scenario::mode() const { return scenario_mode_from_string(text("mode")); }

bool Scenario::has(const std::string& key) const {
    require_key(key);
    return values.count(key) > 0;
}

bool Scenario::flag(const std::string& key) const { return typed<bool>(*this, key); }
long Scenario::integer(const std::string& key) const { return typed<long>(*this, key); }

double Scenario::number(const std::string& key) const {
    const KeySchema& k = require_key(key);
    auto it = values.find(key);
    if (it == values.end()) {
        if (!k.fallback) throw Error(ErrorCode::Config, "missing required key '" + key + "'");
        return std::get<double>(*k.fallback);
    }
    return std::get<double>(it->second);
}

std::string Scenario::text(const std::string& key) const { return typed<std::string>(*this, key); }

std::vector<double> Scenario::numbers(const std::string& key) const {
    const std::string raw = text(key);
    std::vector<double> out;
    if (raw == "none") return out;
    std::stringstream ss(raw);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const std::string v = trim(item);
        double d = 0.0;
        auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), d);
        if (v.empty() || ec != std::errc{} || p != v.data() + v.size() || !std::isfinite(d)) {
            throw Error(ErrorCode::Config, "key '" + key + "': bad list entry '" + v + "'");
        }
        out.push_back(d);
    }
    return out;
}

void Scenario::set(const std::string& key, const std::string& raw) {
    const KeySchema& k = require_key(key);
    values[key] = parse_value(k, raw);
}

Scenario parse_scenario(std::istream& in, const std::string& source) {
    Scenario s;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        const std::string where = source + ":" + std::to_string(lineno) + ": ";
        if (eq == std::string::npos) throw Error(ErrorCode::Config, where + "expected key = value");
        const std::string key = trim(line.substr(0, eq));
        if (s.values.count(key)) throw Error(ErrorCode::Config, where + "repeated key '" + key + "'");
        try {
            s.set(key, line.substr(eq + 1));
        } catch (const Error& e) {
            throw Error(ErrorCode::Config, where + std::string(e.what()).substr(std::string("CONFIG_ERROR: ").size()));
        }
    }
    return s;
}

Scenario parse_scenario_text(const std::string& text) {
    std::istringstream in(text);
    return parse_scenario(in);
}

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Config, "cannot read scenario " + path.string());
    return parse_scenario(in, path.string());
}

std::string serialize_scenario(const Scenario& s) {
    std::string out;
    for (const auto& k : scenario_schema()) {
        auto it = s.values.find(k.key);
        if (it != s.values.end()) out += k.key + " = " + render_value(it->second) + "\n";
    }
    return out;
}

void apply_override(Scenario& s, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::Config, "override '" + assignment + "' is not key=value");
    s.set(trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

void validate_scenario(const Scenario& s) {
    if (!s.values.count("mode")) throw Error(ErrorCode::Config, "missing required key 'mode'");
    const ScenarioMode mode = s.mode();
    for (const auto& k : scenario_schema()) {
        if (std::find(k.required_by.begin(), k.required_by.end(), mode) != k.required_by.end() && !s.values.count(k.key)) {
            throw Error(ErrorCode::Config, "mode " + to_string(mode) + " needs key '" + k.key + "'");
        }
    }
    const long dim = s.integer("grid.dim");
    if (dim != 1 && dim != 2) throw Error(ErrorCode::Config, "grid.dim must be 1 or 2");
    if (s.integer("grid.N") < 3) throw Error(ErrorCode::Config, "grid.N must be at least 3");
    if (!(s.number("grid.L") > 0.0)) throw Error(ErrorCode::Config, "grid.L must be positive");
    if (!(s.number("solver.dt") > 0.0) || !(s.number("solver.T") > 0.0)) {
        throw Error(ErrorCode::Config, "solver.dt and solver.T must be positive");
    }
    if (s.integer("output.csv_stride") < 0) throw Error(ErrorCode::Config, "output.csv_stride must be nonnegative");
    if (s.has("kernel.family") && s.text("kernel.family") == "tabulated" && !s.has("kernel.file")) {
        throw Error(ErrorCode::Config, "tabulated kernel needs kernel.file");
    }
    if (mode == ScenarioMode::WeakMinimum && s.text("operator.reaction") != "linear") {
        throw Error(ErrorCode::Config, "weak-minimum mode needs operator.reaction = linear");
    }
    if ((mode == ScenarioMode::Counterexample || mode == ScenarioMode::InvariantRegion) && dim != 1) {
        throw Error(ErrorCode::Config, "mode " + to_string(mode) + " runs in one dimension");
    }
    if (mode == ScenarioMode::FundsolVerify || mode == ScenarioMode::Gronwall) {
        if (s.text("operator.coefficients") == "unbounded-a") {
            throw Error(ErrorCode::Config, "mode " + to_string(mode) + " needs constant coefficients");
        }
        s.numbers("fundsol.times");
    }
    if (mode == ScenarioMode::Counterexample) s.numbers("counterexample.refinement");
}

KernelSpec scenario_kernel(const Scenario& s) {
    const int dim = static_cast<int>(s.integer("grid.dim"));
    const std::string family = s.text("kernel.family");
    if (family == "gaussian") return KernelSpec::gaussian(s.number("kernel.sigma"), dim);
    if (family == "box") return KernelSpec::box(s.number("kernel.halfwidth"), s.number("kernel.height"), dim);
    if (family == "triangle") return KernelSpec::triangle(s.number("kernel.halfwidth"), dim);
    if (family == "exponential") return KernelSpec::exponential(s.number("kernel.rate"), dim);
    if (family == "cauchy") return KernelSpec::cauchy(s.number("kernel.scale"), dim);
    if (family == "tabulated") return KernelSpec::from_file(s.text("kernel.file"), dim);
    return KernelSpec::zero(dim);
}

OperatorSpec scenario_operator(const Scenario& s) {
    const int dim = static_cast<int>(s.integer("grid.dim"));
    const std::string family = s.text("operator.coefficients");
    ParamMap params{{"D", s.number("operator.D")}};
    if (family == "drifted-heat") {
        params["b1"] = s.number("operator.b1");
        params["b2"] = s.number("operator.b2");
    }
    OperatorSpec op{make_coefficients(family, params, dim), make_reaction("none"), scenario_kernel(s)};
    const std::string reaction = s.text("operator.reaction");
    if (reaction == "linear") {
        op.term = make_linear({{"c0", s.number("linear.c0")},
                               {"c_amp", s.number("linear.c_amp")},
                               {"d0", s.number("linear.d0")},
                               {"d_amp", s.number("linear.d_amp")},
                               {"omega", s.number("linear.omega")}});
    } else {
        op.term = make_reaction(reaction);
    }
    op.validate();
    return op;
}

SolverConfig scenario_solver(const Scenario& s) {
    SolverConfig cfg;
    cfg.dt = s.number("solver.dt");
    cfg.T = s.number("solver.T");
    cfg.scheme = scheme_of(s);
    cfg.store_every = static_cast<int>(s.integer("solver.store_every"));
    cfg.backend = s.text("solver.backend") == "direct" ? ConvBackend::Direct : ConvBackend::Fast;
    cfg.truncation_monitor = s.flag("solver.truncation_monitor");
    return cfg;
}

PrincipleTolerances scenario_tolerances(const Scenario& s) {
    PrincipleTolerances tol;
    tol.residual = s.number("tol.residual");
    tol.ordering = s.number("tol.ordering");
    tol.conclusion = s.number("tol.conclusion");
    return tol;
}

PointFunction scenario_profile(const Scenario& s, const std::string& prefix) {
    const std::string shape = s.text(prefix + ".profile");
    const double amp = s.number(prefix + ".amplitude");
    const double shift = s.number(prefix + ".shift");
    const double width = s.number(prefix + ".width");
    const int dim = static_cast<int>(s.integer("grid.dim"));
    if (!(width > 0.0)) throw Error(ErrorCode::Config, prefix + ".width must be positive");
    if (shape == "smoothstep-front") {
        return [=](const Point& x, double) { return amp * counterexample_profile((x[0] - shift) / width); };
    }
    if (shape == "gaussian") {
        return [=](const Point& x, double) {
            const double r2 = (x[0] - shift) * (x[0] - shift) + (dim == 2 ? x[1] * x[1] : 0.0);
            return amp * std::exp(-0.5 * r2 / (width * width));
        };
    }
    if (shape == "constant") return [=](const Point&, double) { return amp; };
    if (shape == "one") return [](const Point&, double) { return 1.0; };
    return [](const Point&, double) { return 0.0; };
}

Grid scenario_grid(const Scenario& s, const PointFunction& profile) {
    const int dim = static_cast<int>(s.integer("grid.dim"));
    const double L = s.number("grid.L");
    auto far = [&](const std::string& key, Point at) { return s.has(key) ? s.number(key) : profile(at, 0.0); };
    FarField ff;
    ff.left = far("grid.far_left", {-L, 0.0});
    ff.right = far("grid.far_right", {L, 0.0});
    if (dim == 2) {
        ff.bottom = far("grid.far_bottom", {0.0, -L});
        ff.top = far("grid.far_top", {0.0, L});
    }
    return Grid(dim, L, static_cast<int>(s.integer("grid.N")), ff);
}

std::string ReportLine::render() const {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out += "; ";
        out += fields[i].first + "=" + fields[i].second;
    }
    return out;
}

std::string format_number(double v) {
    if (v == 0.0) v = 0.0;  // fold negative zero
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

ReportLine condition_line(const Condition& c, const std::string& kind) {
    return {{{kind, c.id}, {"ref", c.ref}, {"pass", pass_text(c.pass)}, {"margin", format_number(c.margin)}}};
}

ReportLine metric_line(const std::string& name, double value) {
    return {{{"metric", name}, {"value", format_number(value)}}};
}

RunResult execute_scenario(const Scenario& s) {
    validate_scenario(s);
    RunResult r;
    r.scenario = s.name();
    r.mode = s.mode();
    r.summary.push_back("scenario: " + r.scenario);
    r.summary.push_back("mode: " + to_string(r.mode));
    switch (r.mode) {
    case ScenarioMode::KernelReport: run_kernel_report(s, r); break;
    case ScenarioMode::Solve: run_solve(s, r); break;
    case ScenarioMode::WeakMinimum: run_weak_minimum(s, r); break;
    case ScenarioMode::Comparison: run_comparison(s, r); break;
    case ScenarioMode::Counterexample: run_counterexample(s, r); break;
    case ScenarioMode::InvariantRegion: run_invariant_region(s, r); break;
    case ScenarioMode::FundsolVerify: run_fundsol(s, r); break;
    case ScenarioMode::Gronwall: run_gronwall(s, r); break;
    }
    r.summary.push_back("status: " + r.status + " (exit " + std::to_string(r.exit_code) + ")");
    return r;
}

void emit_report(const RunResult& result, const std::filesystem::path& dir, int csv_stride, bool write_fields) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + dir.string());
    {
        std::ofstream kv(dir / "report.kv");
        if (!kv) throw Error(ErrorCode::IoFailure, "cannot write " + (dir / "report.kv").string());
        for (const auto& line : result.lines) kv << line.render() << '\n';
        if (!kv) throw Error(ErrorCode::IoFailure, "failed writing report.kv");
    }
    {
        std::ofstream txt(dir / "summary.txt");
        if (!txt) throw Error(ErrorCode::IoFailure, "cannot write " + (dir / "summary.txt").string());
        for (const auto& line : result.summary) txt << line << '\n';
        if (!txt) throw Error(ErrorCode::IoFailure, "failed writing summary.txt");
    }
    if (!result.tables.empty()) {
        std::filesystem::create_directories(dir / "tables", ec);
        if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + (dir / "tables").string());
        for (const auto& t : result.tables) write_table(dir / "tables" / (t.name + ".csv"), t);
    }
    if (write_fields) {
        for (const auto& [label, field] : result.fields) {
            int stride = csv_stride;
            if (stride <= 0) stride = static_cast<int>(std::max<std::size_t>(1, (field.num_levels() + 18) / 20));
            write_space_time_csv(dir / "fields" / label, field, stride);
        }
    }
}

int exit_code_for(ErrorCode code) {
    switch (code) {
    case ErrorCode::Config:
    case ErrorCode::UnsupportedFamily:
    case ErrorCode::DimMismatch:
    case ErrorCode::AsymmetricA:
    case ErrorCode::NegativeKernel:
    case ErrorCode::DivergentMoment: return 4;
    default: return 3;
    }
}

std::filesystem::path resolve_output_dir(const Scenario& s, const std::optional<std::filesystem::path>& out) {
    if (out) return *out;
    if (s.has("output.dir")) return s.text("output.dir");
    const char* root = std::getenv("NLCOMP_OUT");
    const std::filesystem::path base = root && *root ? std::filesystem::path(root) : std::filesystem::path("nlcomp-out");
    return base / s.name();
}

int run_scenario(const std::filesystem::path& path, const std::optional<std::filesystem::path>& out,
                 const std::vector<std::string>& overrides, std::ostream& log) {
    Scenario s;
    try {
        s = load_scenario(path);
        for (const auto& o : overrides) apply_override(s, o);
        validate_scenario(s);
    } catch (const Error& e) {
        log << "error: " << e.what() << '\n';
        return 4;
    }
    try {
        const RunResult r = execute_scenario(s);
        const std::filesystem::path dir = resolve_output_dir(s, out);
        emit_report(r, dir, static_cast<int>(s.integer("output.csv_stride")), s.flag("output.fields"));
        for (const auto& line : r.summary) log << line << '\n';
        log << "report: " << (dir / "report.kv").string() << '\n';
        return r.exit_code;
    } catch (const Error& e) {
        log << "error: " << e.what() << '\n';
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        log << "error: " << e.what() << '\n';
        return 3;
    }
}

} // namespace nlc
