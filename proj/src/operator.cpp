#include "nlcomp/operator.hpp"

#include "nlcomp/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>

namespace nlc {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

double param(const ParamMap& p, const std::string& key, double fallback) {
    auto it = p.find(key);
    return it == p.end() ? fallback : it->second;
}

void reject_unknown(const ParamMap& p, std::initializer_list<const char*> known, const std::string& what) {
    for (const auto& [key, value] : p) {
        if (std::none_of(known.begin(), known.end(), [&](const char* k) { return key == k; })) {
            throw Error(ErrorCode::Config, "unknown parameter '" + key + "' for " + what);
        }
    }
}

Matrix2 scaled_identity(double s) { return {{{s, 0.0}, {0.0, s}}}; }

double tol_for(double v) { return 1e-12 * std::max(1.0, std::abs(v)); }

/// Derivative stencils along one axis of length n at index i with stride s.
double d1(std::span<const double> u, std::size_t p, long i, long n, std::size_t s, double h) {
    if (i == 0) return (-3.0 * u[p] + 4.0 * u[p + s] - u[p + 2 * s]) / (2.0 * h);
    if (i == n - 1) return (3.0 * u[p] - 4.0 * u[p - s] + u[p - 2 * s]) / (2.0 * h);
    return (u[p + s] - u[p - s]) / (2.0 * h);
}

double d2(std::span<const double> u, std::size_t p, long i, long n, std::size_t s, double h) {
    if (i == 0) return (2.0 * u[p] - 5.0 * u[p + s] + 4.0 * u[p + 2 * s] - u[p + 3 * s]) / (h * h);
    if (i == n - 1) return (2.0 * u[p] - 5.0 * u[p - s] + 4.0 * u[p - 2 * s] - u[p - 3 * s]) / (h * h);
    return (u[p + s] - 2.0 * u[p] + u[p - s]) / (h * h);
}

double radical_inverse(std::size_t i, unsigned base) {
    double inv = 1.0 / base, f = inv, r = 0.0;
    while (i > 0) {
        r += f * static_cast<double>(i % base);
        i /= base;
        f *= inv;
    }
    return r;
}

Condition declared_check(const std::string& id, const std::string& ref, std::optional<double> declared, double measured,
                         bool upper = true) {
    Condition c{id, ref, false, -inf, std::nullopt};
    if (!declared) return c;
    c.margin = upper ? *declared - measured : measured - *declared;
    c.pass = c.margin >= -tol_for(*declared);
    return c;
}

} // namespace

DiffusionCoefficients heat_coefficients(double diffusion, int dim) {
    if (!(diffusion > 0.0)) throw Error(ErrorCode::Config, "diffusion must be positive");
    DiffusionCoefficients c;
    c.name = "heat";
    c.dim = dim;
    c.a = [diffusion](const Point&, double) { return scaled_identity(diffusion); };
    c.b = [](const Point&, double) { return Vector2{0.0, 0.0}; };
    c.A = diffusion;
    c.B = 0.0;
    c.A_min = diffusion;
    c.A_max = diffusion;
    c.declared_regular = true;
    c.constant_diffusion = diffusion;
    c.constant_drift = Vector2{0.0, 0.0};
    return c;
}

DiffusionCoefficients drifted_heat_coefficients(double diffusion, Vector2 drift, int dim) {
    DiffusionCoefficients c = heat_coefficients(diffusion, dim);
    if (dim == 1) drift[1] = 0.0;
    c.name = "drifted-heat";
    c.b = [drift](const Point&, double) { return drift; };
    // max over r of |b| r / (1 + r^2) is |b| / 2
    c.B = 0.5 * std::hypot(drift[0], drift[1]);
    c.constant_drift = drift;
    return c;
}

DiffusionCoefficients unbounded_coefficients(double diffusion, int dim) {
    if (!(diffusion > 0.0)) throw Error(ErrorCode::Config, "diffusion must be positive");
    DiffusionCoefficients c;
    c.name = "unbounded-a";
    c.dim = dim;
    c.a = [diffusion, dim](const Point& x, double) { return scaled_identity(diffusion * (1.0 + norm2(x, dim))); };
    c.b = [](const Point&, double) { return Vector2{0.0, 0.0}; };
    c.A = diffusion;
    c.B = 0.0;
    c.A_min = diffusion;
    c.declared_regular = false;
    return c;
}

DiffusionCoefficients make_coefficients(const std::string& name, const ParamMap& params, int dim) {
    if (dim != 1 && dim != 2) throw Error(ErrorCode::Config, "dimension must be 1 or 2");
    const double diffusion = param(params, "D", 1.0);
    if (name == "heat") {
        reject_unknown(params, {"D"}, name);
        return heat_coefficients(diffusion, dim);
    }
    if (name == "drifted-heat") {
        reject_unknown(params, {"D", "b1", "b2"}, name);
        return drifted_heat_coefficients(diffusion, {param(params, "b1", 0.0), param(params, "b2", 0.0)}, dim);
    }
    if (name == "unbounded-a") {
        reject_unknown(params, {"D"}, name);
        return unbounded_coefficients(diffusion, dim);
    }
    throw Error(ErrorCode::Config, "unknown coefficient family '" + name + "'");
}

ReactionSpec make_reaction(const std::string& name, const ParamMap& params) {
    reject_unknown(params, {}, name);
    ReactionSpec r;
    r.name = name;
    if (name == "none") {
        r.f = [](const Point&, double, double, double) { return 0.0; };
        r.upper_k_u = r.lipschitz_u = r.lipschitz_v = 0.0;
        r.monotone_in_v = true;
        r.uses_nonlocal = false;
    } else if (name == "fkpp-nonlocal") {
        r.f = [](const Point&, double, double u, double v) { return u * (1.0 - v); };
        r.upper_k_u = r.lipschitz_u = r.lipschitz_v = 1.0;
        r.monotone_in_v = false;
    } else if (name == "fkpp-clipped") {
        r.f = [](const Point&, double, double u, double v) { return std::max(v * (1.0 - u), 0.0); };
        r.upper_k_u = 0.0;
        r.lipschitz_u = r.lipschitz_v = 1.0;
        r.monotone_in_v = true;
    } else if (name == "fkpp-source") {
        r.f = [](const Point&, double, double u, double v) { return v * (1.0 - u); };
        r.upper_k_u = 0.0;
        r.lipschitz_u = r.lipschitz_v = 1.0;
        r.monotone_in_v = true;
    } else if (name == "logistic-local") {
        r.f = [](const Point&, double, double u, double) { return u * (1.0 - u); };
        r.upper_k_u = r.lipschitz_u = 1.0;
        r.lipschitz_v = 0.0;
        r.monotone_in_v = true;
        r.uses_nonlocal = false;
    } else {
        throw Error(ErrorCode::Config, "unknown reaction '" + name + "'");
    }
    return r;
}

LinearCoefficients make_linear(const ParamMap& params) {
    reject_unknown(params, {"c0", "c_amp", "d0", "d_amp", "omega"}, "linear");
    const double c0 = param(params, "c0", 0.0), ca = param(params, "c_amp", 0.0);
    const double d0 = param(params, "d0", 0.0), da = param(params, "d_amp", 0.0);
    const double omega = param(params, "omega", 1.0);
    LinearCoefficients lin;
    lin.c = [=](const Point& x, double) { return c0 + ca * std::cos(omega * x[0]); };
    lin.d = [=](const Point& x, double) { return d0 + da * std::cos(omega * x[0]); };
    lin.C = std::max(c0 + std::abs(ca), 0.0);
    lin.D = std::max(d0 + std::abs(da), 0.0);
    lin.c_abs = std::abs(c0) + std::abs(ca);
    return lin;
}

LinearCoefficients constant_linear(double c, double d) {
    return make_linear({{"c0", c}, {"d0", d}});
}

const ReactionSpec& OperatorSpec::reaction() const { return std::get<ReactionSpec>(term); }
const LinearCoefficients& OperatorSpec::linear() const { return std::get<LinearCoefficients>(term); }

double OperatorSpec::source(const Point& x, double t, double u, double v) const {
    if (const auto* lin = std::get_if<LinearCoefficients>(&term)) return lin->c(x, t) * u + lin->d(x, t) * v;
    return std::get<ReactionSpec>(term).f(x, t, u, v);
}

bool OperatorSpec::nonlocal() const {
    if (const auto* r = std::get_if<ReactionSpec>(&term)) return r->uses_nonlocal;
    return true;
}

void OperatorSpec::validate() const {
    if (coeffs.dim != 1 && coeffs.dim != 2) throw Error(ErrorCode::Config, "dimension must be 1 or 2");
    if (!coeffs.a || !coeffs.b) throw Error(ErrorCode::Config, "coefficient functions missing");
    if (nonlocal() && kernel.dim() != coeffs.dim) {
        throw Error(ErrorCode::DimMismatch, "kernel and coefficient dimensions differ");
    }
}

std::vector<double> spatial_operator(const DiffusionCoefficients& coeffs, const Grid& grid, std::span<const double> u,
                                     double t) {
    if (grid.dim() != coeffs.dim) throw Error(ErrorCode::DimMismatch, "grid and coefficient dimensions differ");
    if (u.size() != grid.size()) throw Error(ErrorCode::DimMismatch, "field length does not match grid");
    const long n = grid.points();
    const double h = grid.spacing();
    std::vector<double> out(u.size());
    if (grid.dim() == 1) {
        for (long i = 0; i < n; ++i) {
            const std::size_t p = static_cast<std::size_t>(i);
            const Point x = grid.point(p);
            const Matrix2 a = coeffs.a(x, t);
            const Vector2 b = coeffs.b(x, t);
            out[p] = a[0][0] * d2(u, p, i, n, 1, h) + b[0] * d1(u, p, i, n, 1, h);
        }
    } else {
        const std::size_t row = static_cast<std::size_t>(n);
        // derivative along axis 1, then along axis 0 for the mixed term
        std::vector<double> dy(u.size());
        for (long j = 0; j < n; ++j) {
            for (long i = 0; i < n; ++i) {
                const std::size_t p = grid.flat(i, j);
                dy[p] = d1(u, p, j, n, row, h);
            }
        }
        for (long j = 0; j < n; ++j) {
            for (long i = 0; i < n; ++i) {
                const std::size_t p = grid.flat(i, j);
                const Point x = grid.point(p);
                const Matrix2 a = coeffs.a(x, t);
                const Vector2 b = coeffs.b(x, t);
                out[p] = a[0][0] * d2(u, p, i, n, 1, h) + a[1][1] * d2(u, p, j, n, row, h) +
                         (a[0][1] + a[1][0]) * d1(dy, p, i, n, 1, h) + b[0] * d1(u, p, i, n, 1, h) + b[1] * dy[p];
            }
        }
    }
    for (double v : out) {
        if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteSample, "spatial operator produced a non-finite value");
    }
    return out;
}

Field apply_spatial_L(const DiffusionCoefficients& coeffs, const Field& u) {
    return {u.grid(), spatial_operator(coeffs, u.grid(), u.values(), u.time()), u.time()};
}

SpaceTimeField apply_P_residual(const OperatorSpec& op, const SpaceTimeField& u, ResidualMode mode,
                                ConvBackend backend) {
    op.validate();
    const Grid& g = u.grid();
    if (g.dim() != op.coeffs.dim) throw Error(ErrorCode::DimMismatch, "grid and operator dimensions differ");
    if (mode == ResidualMode::Auto) {
        mode = u.meta().from_solver && u.meta().store_every == 1 ? ResidualMode::Scheme : ResidualMode::Central;
    }
    const std::size_t levels = u.num_levels();
    if (levels < (mode == ResidualMode::Scheme ? 2u : 3u)) {
        throw Error(ErrorCode::Config, "residual needs at least " + std::to_string(mode == ResidualMode::Scheme ? 2 : 3) +
                                           " time levels");
    }

    std::unique_ptr<Convolver> conv;
    if (op.nonlocal()) conv = std::make_unique<Convolver>(op.kernel, g);
    const auto& times = u.times();

    auto source = [&](std::size_t k) {
        auto vals = u.level_values(k);
        std::vector<double> ju = conv ? conv->apply(vals, backend) : std::vector<double>(vals.size(), 0.0);
        std::vector<double> s(vals.size());
        for (std::size_t p = 0; p < vals.size(); ++p) {
            s[p] = op.source(g.point(p), times[k], vals[p], ju[p]);
            if (!std::isfinite(s[p])) throw Error(ErrorCode::NonFiniteReaction, "reaction is not finite");
        }
        return s;
    };

    std::vector<std::vector<double>> out;
    out.reserve(levels - 1);
    if (mode == ResidualMode::Scheme) {
        const double theta = u.meta().theta();
        std::vector<double> lap_prev = spatial_operator(op.coeffs, g, u.level_values(0), times[0]);
        for (std::size_t k = 1; k < levels; ++k) {
            const double dt = times[k] - times[k - 1];
            auto prev = u.level_values(k - 1), cur = u.level_values(k);
            std::vector<double> lap = spatial_operator(op.coeffs, g, cur, times[k]);
            std::vector<double> s = source(k - 1);
            std::vector<double> r(g.size(), 0.0);
            for (std::size_t p = 0; p < g.size(); ++p) {
                if (g.on_face(p)) continue;
                r[p] = theta * lap[p] + (1.0 - theta) * lap_prev[p] + s[p] - (cur[p] - prev[p]) / dt;
            }
            out.push_back(std::move(r));
            lap_prev = std::move(lap);
        }
    } else {
        for (std::size_t k = 1; k < levels; ++k) {
            // three-point differences: centred inside, backward at the final level
            const std::size_t k0 = k + 1 < levels ? k - 1 : k - 2;
            const double t0 = times[k0], t1 = times[k0 + 1], t2 = times[k0 + 2];
            const double h1 = t1 - t0, h2 = t2 - t1;
            double w0, w1, w2;
            if (k + 1 < levels) {
                w0 = -h2 / (h1 * (h1 + h2));
                w1 = (h2 - h1) / (h1 * h2);
                w2 = h1 / (h2 * (h1 + h2));
            } else {
                w0 = h2 / (h1 * (h1 + h2));
                w1 = -(h1 + h2) / (h1 * h2);
                w2 = (2.0 * h2 + h1) / (h2 * (h1 + h2));
            }
            auto u0 = u.level_values(k0), u1 = u.level_values(k0 + 1), u2 = u.level_values(k0 + 2);
            std::vector<double> lap = spatial_operator(op.coeffs, g, u.level_values(k), times[k]);
            std::vector<double> s = source(k);
            std::vector<double> r(g.size(), 0.0);
            for (std::size_t p = 0; p < g.size(); ++p) {
                if (g.on_face(p)) continue;
                r[p] = lap[p] + s[p] - (w0 * u0[p] + w1 * u1[p] + w2 * u2[p]);
            }
            out.push_back(std::move(r));
        }
    }
    return {g, std::vector<double>(times.begin() + 1, times.end()), std::move(out)};
}

ParabolicityReport check_parabolicity_growth(const DiffusionCoefficients& coeffs, const Grid& grid,
                                             int direction_samples, const std::vector<double>& times) {
    if (grid.dim() != coeffs.dim) throw Error(ErrorCode::DimMismatch, "grid and coefficient dimensions differ");
    if (direction_samples < 64) throw Error(ErrorCode::Config, "at least 64 direction samples are required");
    if (times.empty()) throw Error(ErrorCode::Config, "at least one sample time is required");

    // Golden-ratio angles together with their axis-swapped mirrors, so the set is
    // closed under relabelling the axes.
    std::vector<Vector2> dirs;
    const double golden = 0.5 * (std::sqrt(5.0) - 1.0);
    for (int k = 0; static_cast<int>(dirs.size()) < direction_samples; ++k) {
        const double angle = std::numbers::pi * std::fmod(k * golden, 1.0);
        const double c = std::cos(angle), s = std::sin(angle);
        dirs.push_back({c, s});
        dirs.push_back({s, c});
    }

    ParabolicityReport rep;
    rep.directions = grid.dim() == 1 ? 1 : dirs.size();
    rep.min_quotient = inf;
    rep.max_quotient = -inf;
    rep.needed_A = -inf;
    rep.needed_B = -inf;
    for (double t : times) {
        for (std::size_t p = 0; p < grid.size(); ++p) {
            const Point x = grid.point(p);
            const Matrix2 a = coeffs.a(x, t);
            const Vector2 b = coeffs.b(x, t);
            const double weight = 1.0 + norm2(x, grid.dim());
            double qmin = inf, qmax = -inf;
            if (grid.dim() == 1) {
                qmin = qmax = a[0][0];
            } else {
                const double asym = std::abs(a[0][1] - a[1][0]);
                rep.max_asymmetry = std::max(rep.max_asymmetry, asym);
                if (asym > 1e-12) {
                    throw Error(ErrorCode::AsymmetricA, "diffusion matrix is not symmetric at a sample point");
                }
                for (const auto& e : dirs) {
                    const double q = a[0][0] * e[0] * e[0] + (a[0][1] + a[1][0]) * e[0] * e[1] + a[1][1] * e[1] * e[1];
                    qmin = std::min(qmin, q);
                    qmax = std::max(qmax, q);
                }
            }
            if (!std::isfinite(qmin) || !std::isfinite(qmax)) {
                throw Error(ErrorCode::NonFiniteSample, "diffusion matrix is not finite");
            }
            const Witness w{x, t};
            if (qmin < rep.min_quotient) rep.min_quotient = qmin, rep.min_at = w;
            if (qmax > rep.max_quotient) rep.max_quotient = qmax, rep.max_at = w;
            if (qmax / weight > rep.needed_A) rep.needed_A = qmax / weight, rep.growth_at = w;
            const double drift = (b[0] * x[0] + (grid.dim() == 2 ? b[1] * x[1] : 0.0)) / weight;
            if (drift > rep.needed_B) rep.needed_B = drift, rep.drift_at = w;
        }
    }
    rep.growth_A = declared_check("growth_A", "weak-minimum:growth-of-a", coeffs.A, rep.needed_A);
    rep.growth_A.witness = rep.growth_at;
    rep.growth_B = declared_check("growth_B", "weak-minimum:growth-of-b", coeffs.B, rep.needed_B);
    rep.growth_B.witness = rep.drift_at;
    rep.lower_bound = declared_check("parabolicity", "operator:parabolicity", coeffs.A_min, rep.min_quotient, false);
    if (coeffs.A_min && !(*coeffs.A_min > 0.0)) rep.lower_bound.pass = false;
    rep.lower_bound.witness = rep.min_at;
    rep.upper_bound = declared_check("bounded_a", "fundamental-solution-comparison:bounded-a", coeffs.A_max,
                                     rep.max_quotient);
    rep.upper_bound.witness = rep.max_at;
    return rep;
}

ReactionConstants estimate_reaction_constants(const ReactionSpec& r, std::size_t samples, SamplingWindow window) {
    return estimate_reaction_constants(r, r.box, samples, window);
}

ReactionConstants estimate_reaction_constants(const ReactionSpec& r, const ReactionBox& box, std::size_t samples,
                                              SamplingWindow window) {
    if (!r.f) throw Error(ErrorCode::Config, "reaction function missing");
    if (box.u_hi < box.u_lo || box.v_hi < box.v_lo) throw Error(ErrorCode::Config, "reaction box is inverted");
    ReactionConstants rc;
    rc.box = box;
    rc.upper_k_u = -inf;
    rc.min_slope_v = inf;
    const double du = box.u_hi - box.u_lo, dv = box.v_hi - box.v_lo;

    auto eval = [&](const Point& x, double t, double u, double v) {
        const double val = r.f(x, t, u, v);
        if (!std::isfinite(val)) throw Error(ErrorCode::NonFiniteReaction, "reaction is not finite inside the box");
        rc.max_abs_f = std::max(rc.max_abs_f, std::abs(val));
        return val;
    };
    auto pair_u = [&](const Point& x, double t, double u1, double u2, double v) {
        if (u1 == u2) return;
        if (u1 < u2) std::swap(u1, u2);
        const double q = (eval(x, t, u1, v) - eval(x, t, u2, v)) / (u1 - u2);
        rc.upper_k_u = std::max(rc.upper_k_u, q);
        rc.lipschitz_u = std::max(rc.lipschitz_u, std::abs(q));
    };
    auto pair_v = [&](const Point& x, double t, double u, double v1, double v2) {
        if (v1 == v2) return;
        if (v1 < v2) std::swap(v1, v2);
        const double q = (eval(x, t, u, v1) - eval(x, t, u, v2)) / (v1 - v2);
        rc.lipschitz_v = std::max(rc.lipschitz_v, std::abs(q));
        if (q < rc.min_slope_v) {
            rc.min_slope_v = q;
            rc.u_at_min_slope = u;
            rc.v_at_min_slope = 0.5 * (v1 + v2);
            rc.min_slope_at = Witness{x, t};
        }
    };

    const std::size_t n = std::max<std::size_t>(samples, 1);
    static constexpr unsigned bases[] = {2, 3, 5, 7, 11, 13, 17};
    for (std::size_t i = 1; i <= n; ++i) {
        double q[7];
        for (int k = 0; k < 7; ++k) q[k] = radical_inverse(i, bases[k]);
        const Point x{window.halfwidth * (2.0 * q[0] - 1.0), window.dim == 2 ? window.halfwidth * (2.0 * q[1] - 1.0) : 0.0};
        const double t = window.T * q[2];
        const double u1 = box.u_lo + du * q[3], u2 = box.u_lo + du * q[4];
        const double v1 = box.v_lo + dv * q[5], v2 = box.v_lo + dv * q[6];
        pair_u(x, t, u1, u2, v1);
        pair_v(x, t, u1, v1, v2);
    }
    // box lattice including the corners
    const Point origin{0.0, 0.0};
    constexpr int m = 5;
    for (int a = 0; a < m; ++a) {
        for (int b = 0; b < m; ++b) {
            const double u = box.u_lo + du * a / (m - 1), v = box.v_lo + dv * b / (m - 1);
            if (a + 1 < m) pair_u(origin, 0.0, u, box.u_lo + du * (a + 1) / (m - 1), v);
            if (b + 1 < m) pair_v(origin, 0.0, u, v, box.v_lo + dv * (b + 1) / (m - 1));
        }
    }
    rc.samples = n + m * m;
    if (!std::isfinite(rc.upper_k_u)) rc.upper_k_u = 0.0;
    if (!std::isfinite(rc.min_slope_v)) rc.min_slope_v = 0.0;

    auto existential = [](const std::string& id, const std::string& ref, std::optional<double> declared, double measured) {
        // Undeclared: any finite sampled constant witnesses existence, so slack is unlimited.
        Condition c{id, ref, true, declared ? *declared - measured : inf, std::nullopt};
        if (declared) c.pass = c.margin >= -1e-9 * std::max(1.0, std::abs(*declared));
        return c;
    };
    // A sampled constant always exists on a bounded box; a declared one must dominate it.
    rc.upper_lipschitz_u = existential("upper_lipschitz_u", "comparison:upper-lipschitz-in-u", r.upper_k_u, rc.upper_k_u);
    rc.lipschitz_u_check = existential("lipschitz_u", "comparison:lipschitz-in-u", r.lipschitz_u, rc.lipschitz_u);
    rc.lipschitz_v_check = existential("lipschitz_v", "comparison:lipschitz-in-Ju", r.lipschitz_v, rc.lipschitz_v);
    rc.monotone_v = Condition{"monotone_v", "comparison:non-decreasing-in-Ju", rc.min_slope_v >= -1e-10,
                              rc.min_slope_v, std::nullopt};
    if (!rc.monotone_v.pass) {
        Witness w = rc.min_slope_at;
        rc.monotone_v.witness = w;
    }
    return rc;
}

Factorization factorize_difference(const ReactionFunction& f, const Grid& grid, double t, std::span<const double> u_up,
                                   std::span<const double> ju_up, std::span<const double> u_low,
                                   std::span<const double> ju_low) {
    const std::size_t n = grid.size();
    if (u_up.size() != n || ju_up.size() != n || u_low.size() != n || ju_low.size() != n) {
        throw Error(ErrorCode::DimMismatch, "factorization inputs must share a grid");
    }
    double su = 0.0, sv = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
        su = std::max({su, std::abs(u_up[p]), std::abs(u_low[p])});
        sv = std::max({sv, std::abs(ju_up[p]), std::abs(ju_low[p])});
    }
    Factorization out{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0), 0.0};
    for (std::size_t p = 0; p < n; ++p) {
        const Point x = grid.point(p);
        const double f_uu = f(x, t, u_up[p], ju_up[p]);
        const double f_lu = f(x, t, u_low[p], ju_up[p]);
        const double f_ll = f(x, t, u_low[p], ju_low[p]);
        const double du = u_up[p] - u_low[p], dv = ju_up[p] - ju_low[p];
        if (std::abs(du) > 1e-14 * su) out.c[p] = (f_uu - f_lu) / du;
        if (std::abs(dv) > 1e-14 * sv) out.d[p] = (f_lu - f_ll) / dv;
        const double res = std::abs(f_uu - f_ll - out.c[p] * du - out.d[p] * dv);
        out.identity_residual = std::max(out.identity_residual, res);
    }
    return out;
}

Factorization factorize_difference(const ReactionSpec& r, const Field& u_up, const Field& ju_up, const Field& u_low,
                                   const Field& ju_low) {
    if (!(u_up.grid() == u_low.grid()) || !(u_up.grid() == ju_up.grid()) || !(u_up.grid() == ju_low.grid())) {
        throw Error(ErrorCode::DimMismatch, "factorization inputs must share a grid");
    }
    return factorize_difference(r.f, u_up.grid(), u_up.time(), u_up.values(), ju_up.values(), u_low.values(),
                                ju_low.values());
}

} // namespace nlc
