#include "doctest.h"
#include "oracles.hpp"

#include "nlcomp/error.hpp"
#include "nlcomp/principles.hpp"

#include <cmath>
#include <set>

using namespace nlc;
using doctest::Approx;

namespace {

double bump(double x) {
    return std::abs(x) < 1.0 ? std::pow(1.0 - x * x, 3) : 0.0;
}

OperatorSpec linear_op(double c0, double d0, double d_amp, const KernelSpec& k, double diffusion = 1.0) {
    return {heat_coefficients(diffusion), make_linear({{"c0", c0}, {"d0", d0}, {"d_amp", d_amp}, {"omega", 1.0}}), k};
}

SpaceTimeField solve_bump(const OperatorSpec& op, double L, int N, double dt, double T,
                          ConvBackend backend = ConvBackend::Fast) {
    Grid g(1, L, N);
    SolverConfig cfg{dt, T};
    cfg.backend = backend;
    return solve_ibvp(op, discretize(g, [](const Point& x, double) { return bump(x[0]); }), cfg);
}

/// Ordered smoothstep fronts with far field (a, 0).
SpaceTimeField solve_front(const OperatorSpec& op, const Grid& g, double amplitude, double shift, double dt, double T) {
    Grid gg = g.with_far_field({amplitude, 0.0});
    Field u0 = discretize(gg, [&](const Point& x, double) { return amplitude * oracle::smoothstep_front(x[0] - shift); });
    return solve_ibvp(op, u0, SolverConfig{dt, T});
}

std::set<std::string> ids(const ComparisonVerdict& v) {
    std::set<std::string> s;
    for (const auto& c : v.hypotheses) s.insert(c.id);
    return s;
}

} // namespace

TEST_CASE("weak minimum: constant solution with negative c") {
    Grid g(1, 5.0, 51, {1.0, 1.0});
    auto u = SpaceTimeField::constant(g, {0.0, 0.1, 0.2, 0.3}, 1.0);
    OperatorSpec op{heat_coefficients(1.0), constant_linear(-1.0, 0.0), KernelSpec::gaussian(1.0)};
    auto v = verify_weak_minimum(op, u);
    CHECK(v.hypotheses.size() == 8);
    CHECK(ids(v).size() == 8);
    for (const auto& c : v.hypotheses) CHECK_MESSAGE(c.pass, c.id);
    CHECK(v.applicability == Applicability::TheoremApplies);
    CHECK(v.conclusion.pass);
    CHECK(v.conclusion.margin == Approx(1.0));
    CHECK(v.find("residual_nonpositive")->margin == Approx(1.0).epsilon(1e-12));
    CHECK_FALSE(v.internal_inconsistency);
}

TEST_CASE("weak minimum: positive residual makes the hypotheses fail") {
    Grid g(1, 5.0, 101);
    std::vector<double> times{0.0, 0.05, 0.1, 0.15};
    std::vector<std::vector<double>> levels;
    for (double t : times) {
        std::vector<double> v(g.size());
        for (std::size_t p = 0; p < g.size(); ++p) v[p] = -t * bump(g.point(p)[0]);
        levels.push_back(v);
    }
    SpaceTimeField u(g, times, levels);
    OperatorSpec op{heat_coefficients(1.0), constant_linear(0.0, 0.0), KernelSpec::zero()};
    auto v = verify_weak_minimum(op, u);
    CHECK(v.find("boundary_nonnegative")->pass);
    const Condition* r = v.find("residual_nonpositive");
    CHECK_FALSE(r->pass);
    REQUIRE(r->witness);
    CHECK(v.applicability == Applicability::HypothesesFail);
    CHECK_FALSE(v.conclusion.pass);
    CHECK_FALSE(v.internal_inconsistency);
}

TEST_CASE("weak minimum holds for a solver run and is invariant under rescaling") {
    auto op = linear_op(0.0, 0.5, 0.5, KernelSpec::gaussian(1.0));
    auto u = solve_bump(op, 10.0, 201, 1e-2, 0.5);
    auto v = verify_weak_minimum(op, u);
    for (const auto& c : v.hypotheses) CHECK_MESSAGE(c.pass, c.id);
    CHECK(v.applicability == Applicability::TheoremApplies);
    CHECK(v.conclusion.pass);
    CHECK(u.min() >= -1e-8);

    auto scaled = u.map([](std::size_t, std::size_t, double x) { return 7.5 * x; });
    scaled.meta() = u.meta();
    auto w = verify_weak_minimum(op, scaled);
    REQUIRE(w.hypotheses.size() == v.hypotheses.size());
    for (std::size_t i = 0; i < v.hypotheses.size(); ++i) CHECK(w.hypotheses[i].pass == v.hypotheses[i].pass);
    CHECK(w.conclusion.pass == v.conclusion.pass);
}

TEST_CASE("weak minimum flags coefficient bounds that do not hold") {
    auto lin = make_linear({{"c0", 1.0}, {"d0", 0.5}});
    lin.C = 0.0;
    OperatorSpec op{heat_coefficients(1.0), lin, KernelSpec::gaussian(1.0)};
    auto u = solve_bump(op, 8.0, 81, 1e-2, 0.1);
    auto v = verify_weak_minimum(op, u);
    const Condition* c = v.find("c_upper");
    CHECK_FALSE(c->pass);
    CHECK(c->margin == Approx(-1.0));
    CHECK(c->witness);
    CHECK(v.applicability == Applicability::HypothesesFail);

    OperatorSpec cauchy{heat_coefficients(1.0), constant_linear(0.0, 0.5), KernelSpec::cauchy(1.0)};
    auto w = verify_weak_minimum(cauchy, solve_bump(cauchy, 8.0, 81, 1e-2, 0.1));
    CHECK_FALSE(w.find("psi_integrable")->pass);
}

TEST_CASE("strong minimum: instantaneous positivity on the inner window") {
    auto op = linear_op(0.0, 1.0, 0.0, KernelSpec::gaussian(1.0));
    auto u = solve_bump(op, 10.0, 201, 1e-3, 0.02, ConvBackend::Direct);
    auto s = strong_minimum_check(op, u, 0.01);
    CHECK(s.applicable);
    CHECK_FALSE(s.zero_data);
    CHECK(s.pass);
    CHECK(s.inner_min > 0.0);
    CHECK(s.probe_time == Approx(0.01));

    auto at0 = strong_minimum_check(op, u, 0.0);
    CHECK_FALSE(at0.applicable);
    CHECK(at0.inner_min == 0.0);

    Grid g(1, 10.0, 201);
    auto zero = solve_ibvp(op, discretize(g, [](const Point&, double) { return 0.0; }), SolverConfig{1e-3, 0.02});
    auto z = strong_minimum_check(op, zero, 0.01);
    CHECK(z.zero_data);
    CHECK(z.pass);
}

TEST_CASE("auxiliary transform: rate formula and discrete negativity") {
    Grid g(1, 10.0, 201);
    OperatorSpec op{heat_coefficients(1.0), constant_linear(0.0, 1.0), KernelSpec::gaussian(1.0)};
    CHECK(auxiliary_rate(op) == Approx(9.0).epsilon(1e-9));
    auto t = auxiliary_transform(op, g);
    CHECK(t.nu == Approx(9.0).epsilon(1e-9));
    CHECK(t.formula_sufficient());
    CHECK(t.max_transformed_one < 0.0);

    // direct maximization of 2 theta - nu + theta sum phi(x - y) / theta(y) h over a wide lattice
    const double h = g.spacing();
    double oracle_max = -1e300;
    for (int i = 0; i < g.points(); ++i) {
        const double x = g.coord(i), th = 1.0 / (x * x + 1.0);
        double sum = 0.0;
        for (int j = -400; j < g.points() + 400; ++j) {
            const double y = g.coord(j);
            sum += std::exp(-0.5 * (x - y) * (x - y)) / std::sqrt(2.0 * std::numbers::pi) * (y * y + 1.0) * h;
        }
        oracle_max = std::max(oracle_max, 2.0 * th - 9.0 + th * sum);
    }
    CHECK(t.max_transformed_one == Approx(oracle_max).epsilon(1e-6));

    CHECK(t.theta[g.flat(100)] == Approx(1.0));
    CHECK(t.theta[0] == Approx(1.0 / 101.0));
    for (double th : t.theta) CHECK((th > 0.0 && th <= 1.0));
}

TEST_CASE("auxiliary transform: identity diffusion without lower-order terms") {
    Grid g(1, 5.0, 101);
    OperatorSpec op{heat_coefficients(1.0), constant_linear(0.0, 0.0), KernelSpec::zero()};
    auto t = auxiliary_transform(op, g);
    CHECK(t.nu == Approx(3.0));
    for (std::size_t p = 0; p < g.size(); ++p) CHECK(t.c_bar[0][p] == Approx(2.0 * t.theta[p] - 3.0));
    CHECK(t.max_transformed_one == Approx(-1.0));
    CHECK(t.max_at.x[0] == Approx(0.0));
}

TEST_CASE("auxiliary transform doubles the rate when the declared bound is wrong") {
    Grid g(1, 5.0, 101);
    auto lin = constant_linear(5.0, 0.0);
    lin.C = 0.0;
    OperatorSpec op{heat_coefficients(1.0), lin, KernelSpec::zero()};
    auto t = auxiliary_transform(op, g);
    CHECK(t.nu_formula == Approx(3.0));
    CHECK(t.doublings == 2);
    CHECK(t.nu == Approx(12.0));
    CHECK_THROWS_AS(auxiliary_transform(op, g, {0.0}, 1), Error);
    try {
        auxiliary_transform(op, g, {0.0}, 1);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NuInsufficient);
    }
    OperatorSpec cauchy{heat_coefficients(1.0), constant_linear(0.0, 1.0), KernelSpec::cauchy(1.0)};
    CHECK_THROWS_AS(auxiliary_transform(cauchy, g), Error);
}

TEST_CASE("comparison: ordered fronts under the non-local source") {
    Grid g(1, 20.0, 401);
    OperatorSpec op{heat_coefficients(1.0), make_reaction("fkpp-source"), KernelSpec::gaussian(1.0)};
    auto lo = solve_front(op, g, 0.6, -1.0, 1e-2, 0.5);
    auto hi = solve_front(op, g, 0.9, 1.0, 1e-2, 0.5);
    for (auto regime : {ComparisonRegime::SecondMoment, ComparisonRegime::FundamentalSolution}) {
        auto v = verify_comparison(op, lo, hi, regime);
        CHECK(v.hypotheses.size() == (regime == ComparisonRegime::SecondMoment ? 9u : 8u));
        CHECK(ids(v).size() == v.hypotheses.size());
        for (const auto& c : v.hypotheses) CHECK_MESSAGE(c.pass, c.id);
        CHECK(v.applicability == Applicability::TheoremApplies);
        CHECK(v.conclusion.pass);
        CHECK(v.conclusion.margin >= -1e-15);
        CHECK_FALSE(v.internal_inconsistency);
    }
    auto same = verify_comparison(op, lo, lo, ComparisonRegime::SecondMoment);
    CHECK(same.conclusion.pass);
    CHECK(same.conclusion.margin == 0.0);
    CHECK(same.gap == 0.0);

    auto reversed = verify_comparison(op, hi, lo, ComparisonRegime::SecondMoment);
    CHECK_FALSE(reversed.find("boundary_ordering")->pass);
    CHECK_FALSE(reversed.conclusion.pass);
    CHECK(reversed.conclusion.witness);
    CHECK_FALSE(reversed.internal_inconsistency);
}

TEST_CASE("comparison: unbounded diffusion fails only the bounded regime") {
    Grid g(1, 6.0, 121);
    OperatorSpec op{unbounded_coefficients(0.1), make_reaction("fkpp-source"), KernelSpec::gaussian(1.0)};
    auto lo = solve_front(op, g, 0.5, 0.0, 1e-3, 0.05);
    auto v = verify_comparison(op, lo, lo, ComparisonRegime::FundamentalSolution);
    CHECK_FALSE(v.find("coefficient_bounds")->pass);
    CHECK_FALSE(v.find("coefficient_regularity")->pass);
    CHECK(v.applicability == Applicability::HypothesesFail);
    auto w = verify_comparison(op, lo, lo, ComparisonRegime::SecondMoment);
    CHECK(w.applicability == Applicability::TheoremApplies);
}

TEST_CASE("counterexample: predictor, forward difference, exceedance and control") {
    // Ju0(0) = 0.5 (1 + integral of the smoothstep over [0, 1])
    const double eta = oracle::simpson([](double x) { return oracle::smoothstep_front(x); }, 0.0, 1.0);
    CHECK(eta == Approx(0.5).epsilon(1e-12));

    CounterexampleConfig cfg;
    cfg.halfwidth = 20.0;
    cfg.points = 1025;
    cfg.T = 0.05;
    cfg.truncation_monitor = false;
    auto rep = reproduce_counterexample(cfg);
    CHECK(rep.ju0_at_origin == Approx(0.5 * (1.0 + eta)).epsilon(1e-10));
    CHECK(rep.predictor == Approx(0.25).epsilon(1e-10));
    CHECK(rep.forward_difference > 0.0);
    CHECK(rep.forward_positive);
    CHECK(rep.within_20_percent);
    CHECK(rep.exceedance);
    REQUIRE(rep.t_star);
    CHECK(*rep.t_star > 0.0);
    CHECK(*rep.t_star <= cfg.T);
    CHECK(rep.control_ok);
    CHECK(rep.control_max_u <= 1.0 + 1e-8);

    const Condition* mono = rep.verdict.find("monotone_v");
    REQUIRE(mono);
    CHECK_FALSE(mono->pass);
    CHECK(mono->witness);
    for (const auto& c : rep.verdict.hypotheses) {
        if (c.id != "monotone_v") CHECK_MESSAGE(c.pass, c.id);
    }
    CHECK(rep.verdict.applicability == Applicability::HypothesesFail);
    CHECK_FALSE(rep.verdict.conclusion.pass);
    CHECK(rep.verdict.gap > 1e-3);
    CHECK(rep.reproduced());
}

TEST_CASE("counterexample rejects kernels outside its class") {
    CounterexampleConfig cfg;
    cfg.kernel = KernelSpec::box(0.5, 1.0);
    CHECK_THROWS_AS(reproduce_counterexample(cfg), Error);
    cfg.kernel = KernelSpec::box(1.0, 0.5);
    cfg.diffusion = 0.0;
    CHECK_THROWS_AS(reproduce_counterexample(cfg), Error);
}

TEST_CASE("invariant region for both forms of the non-local source") {
    InvariantRegionConfig cfg;
    cfg.halfwidth = 20.0;
    cfg.points = 401;
    cfg.T = 0.5;
    auto rep = invariant_region_check(cfg);
    CHECK(rep.bounds_hold);
    CHECK(rep.solutions_agree);
    CHECK(rep.clipped_min >= -1e-6);
    CHECK(rep.clipped_max <= 1.0 + 1e-6);

    cfg.initial = InitialProfile::Zero;
    auto zero = invariant_region_check(cfg);
    CHECK(zero.clipped->max_abs() == 0.0);
    CHECK(zero.source->max_abs() == 0.0);

    cfg.initial = InitialProfile::One;
    auto one = invariant_region_check(cfg);
    CHECK(one.clipped_min == Approx(1.0).epsilon(1e-12));
    CHECK(one.source_max == Approx(1.0).epsilon(1e-12));
    CHECK(one.pass());

    CHECK(initial_profile_from_string(to_string(InitialProfile::SmoothstepFront)) == InitialProfile::SmoothstepFront);
    CHECK_THROWS_AS(initial_profile_from_string("ramp"), Error);
}
