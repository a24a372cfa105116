#include "doctest.h"
#include "oracles.hpp"

#include "nlcomp/error.hpp"
#include "nlcomp/grid.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using namespace nlc;
using doctest::Approx;

namespace {

double sup_diff(std::span<const double> a, std::span<const double> b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

std::vector<double> random_values(std::size_t n, unsigned seed, double lo = -1.0, double hi = 1.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(lo, hi);
    std::vector<double> v(n);
    for (auto& x : v) x = dist(rng);
    return v;
}

} // namespace

TEST_CASE("grid geometry") {
    Grid g(1, 10.0, 101);
    CHECK(g.spacing() == Approx(0.2));
    CHECK(g.coord(0) == -10.0);
    CHECK(g.coord(100) == Approx(10.0));
    CHECK(g.on_face(0));
    CHECK(g.on_face(100));
    CHECK_FALSE(g.on_face(50));
    CHECK_THROWS_AS(Grid(1, 1.0, 4), Error);

    Grid g2(2, 1.0, 9, {1.0, 2.0, 3.0, 4.0});
    CHECK(g2.size() == 81);
    CHECK(g2.on_face(g2.flat(3, 0)));
    CHECK_FALSE(g2.on_face(g2.flat(3, 3)));
    CHECK(g2.far_value(-1, 3) == 1.0);
    CHECK(g2.far_value(9, 3) == 2.0);
    CHECK(g2.far_value(3, -2) == 3.0);
    CHECK(g2.far_value(3, 12) == 4.0);
    auto p = g2.point(g2.flat(2, 7));
    CHECK(p[0] == Approx(-0.5));
    CHECK(p[1] == Approx(0.75));
}

TEST_CASE("discretize samples and rejects non-finite values") {
    Grid g(1, 1.0, 11);
    auto f = discretize(g, [](const Point& x, double t) { return x[0] + t; }, 2.0);
    CHECK(f[0] == Approx(1.0));
    CHECK(f.time() == 2.0);
    CHECK_THROWS_AS(discretize(g, [](const Point& x, double) { return 1.0 / (x[0] - x[0]); }), Error);
    CHECK_THROWS_AS(Field(g, std::vector<double>(5, 0.0)), Error);
}

TEST_CASE("interpolation is exact for linear data") {
    Grid g(2, 2.0, 17);
    auto f = discretize(g, [](const Point& x, double) { return 3.0 * x[0] - 2.0 * x[1] + 1.0; });
    CHECK(f.interpolate({0.123, -0.77}) == Approx(3.0 * 0.123 + 2.0 * 0.77 + 1.0));
}

TEST_CASE("constant field with matching far field is preserved by normalized kernels") {
    for (int dim : {1, 2}) {
        const int n = dim == 1 ? 257 : 65;
        for (const KernelSpec& k : {KernelSpec::gaussian(1.0, dim), KernelSpec::box(1.0, dim == 1 ? 0.5 : 1.0 / M_PI, dim),
                                   KernelSpec::exponential(1.5, dim)}) {
            Grid g(dim, 10.0, n, {1.0, 1.0, 1.0, 1.0});
            Field u(g, std::vector<double>(g.size(), 1.0));
            for (auto be : {ConvBackend::Direct, ConvBackend::Fast}) {
                if (dim == 2 && be == ConvBackend::Direct && k.family() != KernelFamily::Box) continue;
                Field ju = convolve(k, u, be);
                CAPTURE(k.describe());
                CHECK(ju.min() >= 1.0 - 1e-8);
                CHECK(ju.max() <= 1.0 + 1e-8);
            }
        }
    }
}

TEST_CASE("zero kernel gives zero") {
    Grid g(1, 5.0, 64, {2.0, 2.0});
    Field u(g, random_values(g.size(), 3));
    Field ju = convolve(KernelSpec::zero(), u);
    CHECK(ju.max_abs() == 0.0);
}

TEST_CASE("direct and fast backends agree") {
    for (int dim : {1, 2}) {
        const int n = dim == 1 ? 200 : 40;
        for (const KernelSpec& k : {KernelSpec::gaussian(0.7, dim), KernelSpec::box(1.2, 0.4, dim),
                                   KernelSpec::triangle(2.0, dim)}) {
            Grid g(dim, 6.0, n, {0.5, -0.25, 0.1, 0.3});
            Convolver conv(k, g);
            auto u = random_values(g.size(), 11 + dim);
            auto a = conv.apply(u, ConvBackend::Direct);
            auto b = conv.apply(u, ConvBackend::Fast);
            double scale = 0.0;
            for (double v : a) scale = std::max(scale, std::abs(v));
            CAPTURE(k.describe());
            CHECK(sup_diff(a, b) <= 1e-12 * scale);
        }
    }
}

TEST_CASE("convolution is linear, order preserving and bounded") {
    auto k = KernelSpec::gaussian(0.8);
    Grid g(1, 8.0, 160);
    Convolver conv(k, g);
    auto u = random_values(g.size(), 5);
    auto v = random_values(g.size(), 6);
    std::vector<double> w(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) w[i] = 2.0 * u[i] - 3.0 * v[i];
    auto ju = conv.apply(u), jv = conv.apply(v), jw = conv.apply(w);
    for (std::size_t i = 0; i < u.size(); ++i) CHECK(jw[i] == Approx(2.0 * ju[i] - 3.0 * jv[i]).epsilon(1e-10).scale(1.0));

    std::vector<double> hi(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) hi[i] = u[i] + std::abs(v[i]);
    auto jhi = conv.apply(hi);
    double umax = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        CHECK(jhi[i] >= ju[i] - 1e-14);
        umax = std::max(umax, std::abs(u[i]));
    }
    for (double x : ju) CHECK(std::abs(x) <= kernel_norms(k).l1_norm * umax + 1e-12);
}

TEST_CASE("gaussian convolved with gaussian matches the closed form") {
    // phi = N(0, 1), u = exp(-x^2/2): Ju = exp(-x^2/4) / sqrt(2)
    Grid g(1, 12.0, 481);
    auto u = discretize(g, [](const Point& x, double) { return std::exp(-0.5 * x[0] * x[0]); });
    auto ju = convolve(KernelSpec::gaussian(1.0), u);
    for (std::size_t i = 0; i < g.size(); i += 10) {
        double x = g.coord(static_cast<long>(i));
        CHECK(ju[i] == Approx(std::exp(-0.25 * x * x) / std::sqrt(2.0)).epsilon(1e-6).scale(1.0));
    }
}

TEST_CASE("far field enters the convolution near the faces") {
    Grid g(1, 5.0, 101, {1.0, 0.0});
    Field u(g, std::vector<double>(g.size(), 0.0));
    auto ju = convolve(KernelSpec::gaussian(1.0), u);
    // at the left face half the mass lies beyond it
    double expected = 0.5 * std::erfc((g.spacing() / 2.0) / std::sqrt(2.0));
    CHECK(ju[0] == Approx(expected).epsilon(0.05));
    CHECK(ju[100] == Approx(0.0).scale(1.0));
}

TEST_CASE("pad checks") {
    Grid g(1, 5.0, 64, {1.0, 1.0});
    try {
        Convolver conv(KernelSpec::cauchy(1.0), g);
        FAIL("expected PAD_INSUFFICIENT");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::PadInsufficient);
    }
    // zero far field needs no pad
    Convolver ok(KernelSpec::cauchy(1.0), g.with_far_field({}));
    CHECK(ok.mass_outside_pad() == 0.0);
    CHECK_THROWS_AS(convolve(KernelSpec::gaussian(1.0, 2), Field(g, std::vector<double>(g.size(), 0.0))), Error);
}

TEST_CASE("space-time field and parabolic boundary") {
    Grid g(1, 1.0, 9);
    std::vector<double> times{0.0, 0.5, 1.0};
    std::vector<std::vector<double>> levels;
    for (int k = 0; k < 3; ++k) {
        std::vector<double> v(g.size(), static_cast<double>(k));
        v[0] = -1.0 - k;
        levels.push_back(v);
    }
    SpaceTimeField u(g, times, levels);
    CHECK(u.min() == -3.0);
    CHECK(u.max() == 2.0);
    auto pb = parabolic_boundary(u);
    CHECK(pb.traces.size() == 2);
    CHECK(pb.traces[0].size() == 2);
    CHECK(pb.min() == -3.0);
    auto doubled = u.map([](std::size_t, std::size_t, double v) { return 2.0 * v; });
    CHECK(doubled.max() == 4.0);
    CHECK_THROWS_AS(SpaceTimeField(g, {0.0, 0.0}, {levels[0], levels[1]}), Error);
}

TEST_CASE("csv output") {
    auto dir = std::filesystem::temp_directory_path() / "nlcomp_grid_csv";
    std::filesystem::remove_all(dir);
    Grid g(1, 1.0, 9);
    std::vector<std::vector<double>> levels(5, std::vector<double>(g.size(), 0.25));
    SpaceTimeField u(g, {0.0, 0.1, 0.2, 0.3, 0.4}, levels);
    write_space_time_csv(dir, u, 2);
    std::ifstream idx(dir / "index.csv");
    std::string line;
    std::getline(idx, line);
    CHECK(line == "level,time,file");
    int rows = 0;
    while (std::getline(idx, line)) ++rows;
    CHECK(rows == 3);
    std::ifstream lvl(dir / "level_00004.csv");
    std::getline(lvl, line);
    CHECK(line == "x,value");
    std::getline(lvl, line);
    CHECK(line == "-1,0.25");
    std::filesystem::remove_all(dir);
}
