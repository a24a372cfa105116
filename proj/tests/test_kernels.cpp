#include "doctest.h"
#include "oracles.hpp"

#include "nlcomp/error.hpp"
#include "nlcomp/grid.hpp"
#include "nlcomp/kernels.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <vector>

using namespace nlc;
using doctest::Approx;

namespace {

std::vector<KernelSpec> closed_corpus(int dim) {
    return {KernelSpec::gaussian(1.0, dim), KernelSpec::gaussian(0.4, dim), KernelSpec::box(1.0, 0.5, dim),
            KernelSpec::triangle(1.5, dim), KernelSpec::exponential(2.0, dim), KernelSpec::cauchy(1.0, dim)};
}

// Mass and second moment by Simpson over a radius where the tail is negligible.
std::pair<double, double> oracle_moments(const KernelSpec& k, double reach) {
    if (k.dim() == 1) {
        double l1 = oracle::simpson([&](double x) { return k.profile(x); }, -reach, reach, 400000);
        double m2 = oracle::simpson([&](double x) { return k.profile(x) * x * x; }, -reach, reach, 400000);
        return {l1, m2};
    }
    const double two_pi = 2.0 * std::numbers::pi;
    double l1 = oracle::simpson([&](double r) { return two_pi * r * k.profile(r); }, 0.0, reach, 400000);
    double m2 = oracle::simpson([&](double r) { return two_pi * r * r * r * k.profile(r); }, 0.0, reach, 400000);
    return {l1, m2};
}

} // namespace

TEST_CASE("eval_kernel examples") {
    CHECK(eval_kernel(KernelSpec::gaussian(1.0), {0.0, 0.0}) == Approx(0.3989422804014327).epsilon(1e-15));
    CHECK(eval_kernel(KernelSpec::box(1.0, 0.5), {2.0, 0.0}) == 0.0);
    CHECK(eval_kernel(KernelSpec::zero(), {0.3, 0.0}) == 0.0);
    CHECK(eval_kernel(KernelSpec::zero(), {-123.0, 0.0}) == 0.0);
}

TEST_CASE("eval_kernel is nonnegative and compact families vanish outside support") {
    for (int dim : {1, 2}) {
        for (const auto& k : closed_corpus(dim)) {
            for (double x = -6.0; x <= 6.0; x += 0.37) {
                CHECK(k({x, 0.5 * x}) >= 0.0);
            }
        }
        CHECK(KernelSpec::triangle(1.5, dim)({1.6, 0.0}) == 0.0);
        CHECK(KernelSpec::box(1.0, 0.5, dim)({0.8, 0.7}) == (dim == 2 ? 0.0 : 0.5));
    }
}

TEST_CASE("tabulated kernels interpolate linearly and vanish outside their window") {
    auto k = KernelSpec::tabulated({-1.0, 0.5, {0.0, 1.0, 2.0, 1.0, 0.0}});
    CHECK(k.profile(-0.25) == Approx(1.5));
    CHECK(k.profile(0.0) == Approx(2.0));
    CHECK(k.profile(1.01) == 0.0);
    CHECK(k.profile(-1.5) == 0.0);
}

TEST_CASE("kernel_norms closed forms agree with a Simpson oracle") {
    for (int dim : {1, 2}) {
        for (const auto& k : closed_corpus(dim)) {
            if (k.family() == KernelFamily::Cauchy) continue;
            MomentReport rep = kernel_norms(k);
            // compact families are integrated exactly over their support
            double reach = k.family() == KernelFamily::Box ? k.parameter() : 40.0;
            auto [l1, m2] = oracle_moments(k, reach);
            CAPTURE(k.describe());
            CHECK(rep.analytic);
            CHECK(rep.l1_norm == Approx(l1).epsilon(1e-7));
            REQUIRE(rep.second_moment);
            CHECK(*rep.second_moment == Approx(m2).epsilon(1e-7));
        }
    }
}

TEST_CASE("kernel_norms examples") {
    auto g = kernel_norms(KernelSpec::gaussian(1.0));
    CHECK(g.l1_norm == Approx(1.0));
    CHECK(*g.second_moment == Approx(1.0));
    CHECK(g.normalized);
    CHECK(g.is_even);
    CHECK_FALSE(g.support_halfwidth);

    auto b = kernel_norms(KernelSpec::box(1.0, 0.5));
    CHECK(b.l1_norm == Approx(1.0));
    CHECK(*b.second_moment == Approx(1.0 / 3.0));
    CHECK(*b.support_halfwidth == 1.0);

    auto z = kernel_norms(KernelSpec::zero());
    CHECK(z.l1_norm == 0.0);
    CHECK(*z.second_moment == 0.0);
    CHECK_FALSE(z.normalized);
}

TEST_CASE("cauchy second moment is DIVERGENT with linear-growth evidence") {
    for (int dim : {1, 2}) {
        auto rep = kernel_norms(KernelSpec::cauchy(1.0, dim));
        CHECK(rep.l1_norm == Approx(1.0));
        CHECK(rep.divergent());
        REQUIRE(rep.evidence.size() >= 3);
        for (std::size_t i = 1; i < rep.evidence.size(); ++i) {
            auto [r0, i0] = rep.evidence[i - 1];
            auto [r1, i1] = rep.evidence[i];
            CHECK(r1 == Approx(3.0 * r0));
            // partial integrals grow like the cutoff, approaching the ratio 3 from above
            CHECK(i1 / i0 > 2.5);
            CHECK(i1 / i0 < 3.5);
        }
    }
}

TEST_CASE("partial second moments converge for rapidly decaying kernels") {
    // exercised through the cutoff route with a kernel lacking closed moments
    std::vector<double> values;
    for (int i = -400; i <= 400; ++i) values.push_back(std::exp(-0.5 * (i * 0.02) * (i * 0.02)) / std::sqrt(2.0 * std::numbers::pi));
    auto k = KernelSpec::tabulated({-8.0, 0.02, values});
    auto rep = kernel_norms(k);
    CHECK_FALSE(rep.analytic);
    CHECK(rep.l1_norm == Approx(1.0).epsilon(1e-4));
    CHECK(*rep.second_moment == Approx(1.0).epsilon(1e-4));
    CHECK(rep.normalized);
    CHECK(rep.is_even);
    CHECK(*rep.support_halfwidth == Approx(8.0));
}

TEST_CASE("partial L1 integrals are non-decreasing in the cutoff") {
    for (int dim : {1, 2}) {
        for (const auto& k : closed_corpus(dim)) {
            double prev = 0.0;
            for (double r = 0.05; r < 200.0; r *= 1.3) {
                double cur = partial_moment(k, r, 0);
                CHECK(cur >= prev - 1e-14);
                prev = cur;
            }
            CHECK(prev <= kernel_norms(k).l1_norm + 1e-10);
        }
    }
}

TEST_CASE("tail_mass matches the quadrature complement") {
    for (int dim : {1, 2}) {
        for (const auto& k : closed_corpus(dim)) {
            double total = kernel_norms(k).l1_norm;
            for (double r : {0.3, 1.0, 2.5}) {
                CAPTURE(k.describe());
                CHECK(tail_mass(k, r) == Approx(total - partial_moment(k, r, 0)).epsilon(1e-9));
            }
        }
    }
    auto k = KernelSpec::gaussian(1.0);
    double r = mass_radius(k, 1e-8);
    CHECK(tail_mass(k, r) <= 1e-8);
    CHECK(tail_mass(k, 0.99 * r) > 1e-8);
}

TEST_CASE("negative kernels are rejected") {
    std::vector<double> values;
    for (int i = -20; i <= 20; ++i) values.push_back(-std::exp(-(i * 0.1) * (i * 0.1)));
    auto neg = KernelSpec::tabulated({-2.0, 0.1, values});
    CHECK_THROWS_AS(kernel_norms(neg), Error);
    try {
        kernel_norms(neg);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NegativeKernel);
    }
    CHECK_THROWS_AS(require_nonnegative(KernelSpec::box(1.0, -0.5)), Error);
}

TEST_CASE("classify_kernel examples") {
    auto g = classify_kernel(KernelSpec::gaussian(1.0), 5.0);
    for (const Check* c : g.checks()) CHECK(c->pass);

    auto c = classify_kernel(KernelSpec::cauchy(1.0));
    CHECK(c.l1_nonnegative.pass);
    CHECK(c.fundamental_solution.pass);
    CHECK_FALSE(c.second_moment_finite.pass);

    std::vector<double> values;
    for (int i = -20; i <= 20; ++i) values.push_back(-std::exp(-(i * 0.1) * (i * 0.1)));
    auto n = classify_kernel(KernelSpec::tabulated({-2.0, 0.1, values}));
    CHECK_FALSE(n.l1_nonnegative.pass);
    CHECK(n.l1_nonnegative.measured < 0.0);

    auto b = classify_kernel(KernelSpec::box(1.0, 0.5), 1.0);
    CHECK(b.counterexample_class.pass);
    CHECK_FALSE(classify_kernel(KernelSpec::box(1.0, 0.5), 1.5).counterexample_class.pass);
    // wrong mass
    CHECK_FALSE(classify_kernel(KernelSpec::box(1.0, 1.0), 1.0).counterexample_class.pass);
    // uneven table
    CHECK_FALSE(classify_kernel(KernelSpec::tabulated({0.0, 0.5, {1.0, 1.0, 0.0}})).counterexample_class.pass);
}

TEST_CASE("classify: the counterexample class implies the first check") {
    std::vector<KernelSpec> corpus = closed_corpus(1);
    corpus.push_back(KernelSpec::zero());
    corpus.push_back(KernelSpec::tabulated({-1.0, 0.5, {0.0, 1.0, 2.0, 1.0, 0.0}}));
    corpus.push_back(KernelSpec::tabulated({-1.0, 0.5, {0.0, -1.0, 2.0, 1.0, 0.0}}));
    for (const auto& k : corpus) {
        for (double half : {0.1, 1.0, 3.0}) {
            auto cert = classify_kernel(k, half);
            if (cert.counterexample_class.pass) CHECK(cert.l1_nonnegative.pass);
            if (cert.second_moment_finite.pass) CHECK(cert.fundamental_solution.pass);
        }
    }
}

TEST_CASE("kernel tables load from two-column text") {
    auto path = std::filesystem::temp_directory_path() / "nlcomp_kernel_table.txt";
    {
        std::ofstream out(path);
        out << "# x phi\n-1 0\n-0.5 1\n0 2\n0.5 1\n1 0\n";
    }
    auto k = KernelSpec::from_file(path);
    CHECK(k.family() == KernelFamily::Tabulated);
    CHECK(k.profile(0.25) == Approx(1.5));
    CHECK(kernel_norms(k).l1_norm == Approx(2.0));
    {
        std::ofstream out(path);
        out << "0 1\n0.5 1\n1.2 1\n";
    }
    CHECK_THROWS_AS(KernelSpec::from_file(path), Error);
    std::filesystem::remove(path);
}

TEST_CASE("jquotient bound examples") {
    Grid g(1, 20.0, 1024);
    auto gauss = jquotient_bound_check(KernelSpec::gaussian(1.0), g);
    CHECK(gauss.bound == Approx(6.0));
    CHECK(gauss.pass);
    CHECK(gauss.measured_max <= 6.0 + 1e-6);
    // the continuous quotient peaks at 1 + |psi|_1 = 2 at the origin, which lies
    // half a cell from the nearest node
    CHECK(gauss.measured_max == Approx(2.0).epsilon(1e-3));

    auto box = jquotient_bound_check(KernelSpec::box(1.0, 0.5), g);
    CHECK(box.bound == Approx(4.0));
    CHECK(box.pass);

    auto zero = jquotient_bound_check(KernelSpec::zero(), g);
    CHECK(zero.bound == 0.0);
    CHECK(zero.measured_max == 0.0);

    CHECK_THROWS_AS(jquotient_bound_check(KernelSpec::cauchy(1.0), g), Error);
}

TEST_CASE("jquotient bound holds across kernels and grids") {
    for (int dim : {1, 2}) {
        for (const auto& k : closed_corpus(dim)) {
            if (k.family() == KernelFamily::Cauchy) continue;
            for (auto [L, n] : {std::pair{5.0, 33}, std::pair{12.0, 48}}) {
                if (dim == 2 && n > 40) continue;
                auto r = jquotient_bound_check(k, Grid(dim, L, n));
                CAPTURE(k.describe());
                CHECK(r.pass);
            }
        }
    }
}
