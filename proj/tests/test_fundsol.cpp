#include "doctest.h"
#include "oracles.hpp"

#include "nlcomp/error.hpp"
#include "nlcomp/fundsol.hpp"
#include "nlcomp/solver.hpp"

#include <cmath>
#include <numbers>

using namespace nlc;
using doctest::Approx;

namespace {

constexpr double pi = std::numbers::pi;

/// Independent closed form in one dimension.
double heat_kernel_1d(double D, double b, double c, double r, double s) {
    return std::exp(-(r + b * s) * (r + b * s) / (4.0 * D * s) + c * s) / std::sqrt(4.0 * pi * D * s);
}

ErrorCode code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an error");
    return ErrorCode::Config;
}

} // namespace

TEST_CASE("closed-form value, translation invariance and time order") {
    ConstCoeffParams p;
    CHECK(gamma_eval(p, {0.0, 0.0}, 1.0, {0.0, 0.0}, 0.0) == Approx(1.0 / std::sqrt(4.0 * pi)).epsilon(1e-14));
    CHECK(gamma_eval(p, {0.0, 0.0}, 1.0, {0.0, 0.0}, 0.0) == Approx(0.28209479177).epsilon(1e-10));

    ConstCoeffParams q{0.7, {0.3, 0.0}, -0.2, 1};
    for (double r : {-2.0, -0.3, 0.0, 0.8, 3.0}) {
        CHECK(gamma_eval(q, {r + 1.5, 0.0}, 2.4, {1.5, 0.0}, 0.4) == Approx(gamma_eval(q, {r, 0.0}, 2.0, {0.0, 0.0}, 0.0)));
        CHECK(gamma_eval(q, {r, 0.0}, 2.0, {0.0, 0.0}, 0.0) == Approx(heat_kernel_1d(0.7, 0.3, -0.2, r, 2.0)).epsilon(1e-13));
    }
    CHECK(code_of([&] { gamma_eval(p, {0.0, 0.0}, 1.0, {0.0, 0.0}, 1.0); }) == ErrorCode::TimeOrder);
    CHECK(code_of([&] { gamma_adjoint_eval(p, {0.0, 0.0}, 1.0, {0.0, 0.0}, 1.0); }) == ErrorCode::TimeOrder);
    CHECK(code_of([&] { gamma_adjoint_eval(p, {0.0, 0.0}, 2.0, {0.0, 0.0}, 1.0); }) == ErrorCode::TimeOrder);
}

TEST_CASE("adjoint identity and symmetry") {
    ConstCoeffParams p{1.3, {0.4, -0.2}, 0.1, 2};
    const Point x{0.3, -0.7}, xi{-0.1, 0.5};
    CHECK(gamma_adjoint_eval(p, xi, 0.2, x, 0.9) == gamma_eval(p, x, 0.9, xi, 0.2));

    ConstCoeffParams sym{1.0, {0.0, 0.0}, 0.0, 1};
    CHECK(gamma_adjoint_eval(sym, {0.4, 0.0}, 0.0, {-0.2, 0.0}, 1.0) ==
          Approx(gamma_adjoint_eval(sym, {-0.2, 0.0}, 0.0, {0.4, 0.0}, 1.0)).epsilon(1e-15));
}

TEST_CASE("finite-difference residuals vanish away from the pole") {
    // test-side five-point differences of the independent closed form
    const double D = 1.0, b = 0.5, c = 0.2, h = 1e-3;
    auto G = [&](double x, double t) { return heat_kernel_1d(D, b, c, x, t); };
    const double x = 0.5, t = 0.7;
    auto d1x = (-G(x + 2 * h, t) + 8 * G(x + h, t) - 8 * G(x - h, t) + G(x - 2 * h, t)) / (12 * h);
    auto d2x = (-G(x + 2 * h, t) + 16 * G(x + h, t) - 30 * G(x, t) + 16 * G(x - h, t) - G(x - 2 * h, t)) / (12 * h * h);
    auto d1t = (-G(x, t + 2 * h) + 8 * G(x, t + h) - 8 * G(x, t - h) + G(x, t - 2 * h)) / (12 * h);
    CHECK(std::abs(D * d2x + b * d1x + c * G(x, t) - d1t) < 1e-8);

    ConstCoeffParams p{D, {b, 0.0}, c, 1};
    CHECK(std::abs(gamma_residual(p, {x, 0.0}, t, {0.0, 0.0}, 0.0)) < 1e-4);

    ConstCoeffParams heat;
    CHECK(std::abs(gamma_adjoint_residual(heat, {0.5, 0.0}, 0.3, {0.0, 0.0}, 1.0)) <= 1e-4);
    CHECK(std::abs(gamma_adjoint_residual(p, {0.5, 0.0}, 0.3, {0.0, 0.0}, 1.0)) <= 1e-4);
    ConstCoeffParams p2{0.8, {0.3, -0.6}, 0.0, 2};
    CHECK(std::abs(gamma_residual(p2, {0.2, 0.4}, 0.6, {0.0, 0.0}, 0.0)) < 1e-4);
    CHECK(std::abs(gamma_adjoint_residual(p2, {0.2, 0.4}, 0.1, {0.0, 0.0}, 0.6)) < 1e-4);
}

TEST_CASE("mass identity and Chapman-Kolmogorov") {
    for (int dim : {1, 2}) {
        ConstCoeffParams p{0.6, {0.9, -0.4}, 0.0, dim};
        for (double tau : {0.0, 0.5}) {
            for (double t : {0.501, 0.6, 2.0}) {
                if (t <= tau) continue;
                CHECK(std::abs(gamma_mass(p, {0.3, -1.0}, t, tau) - 1.0) <= 1e-8);
            }
        }
        CHECK(chapman_kolmogorov_defect(p, {0.4, 0.1}, 1.0, 0.6, {-0.3, 0.2}, 0.1) <= 1e-6);
        CHECK(chapman_kolmogorov_defect(p, {1.0, 0.0}, 2.0, 0.05, {0.0, 0.0}, 0.0) <= 1e-6);
    }
    ConstCoeffParams grow{1.0, {0.0, 0.0}, 0.3, 1};
    CHECK(gamma_mass(grow, {0.0, 0.0}, 2.0, 0.0) == Approx(std::exp(0.6)).epsilon(1e-10));
}

TEST_CASE("delta family approaches the test function") {
    ConstCoeffParams p;
    const std::vector<Point> xs{{0.0, 0.0}, {0.4, 0.0}, {-1.3, 0.0}, {2.0, 0.0}};
    const std::vector<double> ts{1e-1, 1e-2, 1e-3};

    auto constant = delta_family_check(p, TestFunction::Constant, xs, ts);
    for (const auto& r : constant.rows) CHECK(r.max_deviation <= 1e-12);

    // Fourier decay: integral = e^{-t} cos x, deviation max_x (1 - e^{-t}) |cos x|
    auto cosine = delta_family_check(p, TestFunction::Cosine, xs, ts);
    REQUIRE(cosine.rows.size() == 3);
    CHECK(cosine.rows[2].t == Approx(1e-3));
    CHECK(cosine.rows[2].max_deviation == Approx(1.0 - std::exp(-1e-3)).epsilon(1e-8));
    CHECK(cosine.rows[0].max_deviation == Approx(1.0 - std::exp(-1e-1)).epsilon(1e-8));
    CHECK(cosine.strictly_decreasing);

    auto bump = delta_family_check(p, TestFunction::Bump, xs, ts);
    CHECK(bump.strictly_decreasing);
    CHECK(bump.below_tolerance);

    ConstCoeffParams p2{1.0, {0.0, 0.0}, 0.0, 2};
    auto bump2 = delta_family_check(p2, TestFunction::Bump, {{0.0, 0.0}, {0.3, 0.2}}, ts);
    CHECK(bump2.strictly_decreasing);

    CHECK(code_of([&] { delta_family_check(p, TestFunction::Bump, xs, ts, 0.02); }) == ErrorCode::QuadratureUnderresolved);
    CHECK(test_function_from_string("cosine") == TestFunction::Cosine);
}

TEST_CASE("Gaussian bounds with derived constants") {
    ConstCoeffParams p;
    auto fit = derive_bound_constants(p, 1.0);
    CHECK(fit.lambda == Approx(0.9));
    // value factor (4 pi)^{-1/2}; gradient factor (4 pi)^{-1/2} e^{-1/2} / sqrt(2 (1 - sqrt 0.9))
    const double eps = 1.0 - std::sqrt(0.9);
    const double expected = 1.05 * std::exp(-0.5) / std::sqrt(4.0 * pi * 2.0 * eps);
    CHECK(fit.kappa == Approx(expected).epsilon(1e-12));
    auto checked = gaussian_bound_check(p, fit, 10000);
    CHECK(checked.samples == 10000);
    CHECK(checked.pass);
    CHECK(checked.max_ratio_value < 1.0);
    CHECK(checked.max_ratio_gradient < 1.0);
    CHECK(checked.min_gamma > 0.0);

    for (int dim : {1, 2}) {
        ConstCoeffParams q{0.4, {1.5, -0.7}, 0.8, dim};
        auto f = derive_bound_constants(q, 2.0);
        CHECK(f.lambda < 0.4);
        CHECK(gaussian_bound_check(q, f, 10000).pass);
    }

    auto tight = GammaBoundFit::make(0.5 / std::sqrt(4.0 * pi), 0.9, 1.0, 1.0);
    auto failed = gaussian_bound_check(p, tight, 2000);
    CHECK_FALSE(failed.pass);
    CHECK(failed.worst_lag > 0.0);

    CHECK(code_of([] { GammaBoundFit::make(1.0, 1.0, 1.0, 1.0); }) == ErrorCode::Config);
    CHECK(code_of([] { GammaBoundFit::make(1.0, 1.2, 1.0, 1.0); }) == ErrorCode::Config);
}

TEST_CASE("integral representation: mass identity and heat solutions") {
    Grid g(1, 10.0, 201, {1.0, 1.0});
    std::vector<double> times;
    for (int k = 0; k <= 20; ++k) times.push_back(0.05 * k);
    auto one = SpaceTimeField::constant(g, times, 1.0);
    auto zero = SpaceTimeField::constant(g, times, 0.0);
    ConstCoeffParams p;
    std::vector<Witness> samples;
    for (int i = 0; i < 20; ++i) samples.push_back({{-4.0 + 0.4 * i, 0.0}, times[1 + i % 20]});
    auto rep = integral_representation_check(p, KernelSpec::gaussian(1.0), zero, zero, one, samples);
    CHECK(rep.rows.size() == 20);
    CHECK(rep.pass);
    CHECK(rep.max_relative_gap <= 1e-6);

    // c = d = 0 and w a heat solution: equality up to discretization error
    Grid h(1, 12.0, 481);
    OperatorSpec heat{heat_coefficients(1.0), constant_linear(0.0, 0.0), KernelSpec::zero()};
    SolverConfig cfg{1e-2, 1.0};
    cfg.scheme = Scheme::CrankNicolson;
    auto w = solve_ibvp(heat, discretize(h, [](const Point& x, double) { return std::exp(-0.5 * x[0] * x[0]); }), cfg);
    std::vector<Witness> pts;
    for (int i = 0; i < 20; ++i) pts.push_back({{-3.0 + 0.3 * i, 0.0}, w.times()[5 * (1 + i % 20)]});
    auto heat_rep = integral_representation_check(heat, w, pts);
    CHECK(heat_rep.pass);
    CHECK(heat_rep.max_relative_gap <= 1e-3);
    for (const auto& r : heat_rep.rows) {
        CHECK(r.lhs == Approx(oracle::heat_gaussian(r.x[0] * r.x[0], 1.0, 1.0, r.t, 1)).epsilon(1e-3));
    }
}

TEST_CASE("ordered pair: transform, representation and Groenwall") {
    Grid g(1, 20.0, 401);
    OperatorSpec op{heat_coefficients(1.0), make_reaction("fkpp-source"), KernelSpec::gaussian(1.0)};
    auto front = [&](double a, double shift) {
        Grid gg = g.with_far_field({a, 0.0});
        return solve_ibvp(op, discretize(gg, [&](const Point& x, double) { return a * oracle::smoothstep_front(x[0] - shift); }),
                          SolverConfig{2.5e-3, 1.0});
    };
    auto lo = front(0.5, -1.0), hi = front(0.8, 0.5);
    auto tp = transform_pair(op, lo, hi);
    CHECK(tp.k >= 0.0);
    CHECK(tp.identity_residual <= 1e-12);
    CHECK(tp.c.min() >= 0.0);
    CHECK(tp.d.min() >= 0.0);
    CHECK(tp.w.min() >= -1e-14);

    std::vector<Witness> pts;
    for (int i = 0; i < 20; ++i) pts.push_back({{-6.0 + 0.6 * i, 0.0}, tp.w.times()[20 * (1 + i % 20)]});
    ConstCoeffParams p;
    auto rep = integral_representation_check(p, op.kernel, tp.c, tp.d, tp.w, pts);
    CHECK(rep.pass);

    auto fit = gaussian_bound_check(p, derive_bound_constants(p, 1.0));
    REQUIRE(fit.pass);
    const double C = gronwall_constant(fit.kappa, fit.lambda, tp.c_sup, tp.d_sup, 1.0, 1);
    CHECK(C > 0.0);
    auto psi = negative_part_series(tp.w);
    auto verdict = discrete_gronwall(tp.w.times(), psi, C, 1e-10);
    CHECK(verdict.status == GronwallStatus::Holds);
}

TEST_CASE("discrete Groenwall premise audit") {
    std::vector<double> t;
    for (int i = 0; i <= 100; ++i) t.push_back(0.01 * i);
    std::vector<double> zero(t.size(), 0.0);
    auto z = discrete_gronwall(t, zero, 2.0);
    CHECK(z.status == GronwallStatus::Holds);
    CHECK(z.premise_holds);

    std::vector<double> linear(t);
    auto l = discrete_gronwall(t, linear, 1.0);
    CHECK(l.status == GronwallStatus::PremiseFailed);
    CHECK_FALSE(l.premise_holds);
    REQUIRE(l.first_violation);
    CHECK(*l.first_violation == 1);

    // tol e^{C t} sits exactly on the continuous bound; the trapezoid premise holds
    const double tol = 1e-10, C = 3.0;
    std::vector<double> growth;
    for (double s : t) growth.push_back(tol * std::exp(C * s));
    auto e = discrete_gronwall(t, growth, C, tol);
    CHECK(e.premise_holds);
    CHECK(e.status == GronwallStatus::Holds);
    CHECK(e.max_conclusion_ratio <= 1.0);

    std::vector<double> late(t.size(), 0.0);
    late[50] = 1.0;
    auto spike = discrete_gronwall(t, late, 2.0);
    CHECK(spike.status == GronwallStatus::PremiseFailed);
    CHECK(*spike.first_violation == 50);
    CHECK(to_string(GronwallStatus::PremiseFailed) == "PREMISE_FAILED");
}
