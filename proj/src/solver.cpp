#include "nlcomp/solver.hpp"

#include "nlcomp/error.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>
#include <numbers>

namespace nlc {

namespace {

constexpr double pi = std::numbers::pi;

/// Implicit part I - theta dt L with Dirichlet rows on faces.
class ImplicitSystem {
public:
    ImplicitSystem(const DiffusionCoefficients& coeffs, const Grid& grid, double theta_dt)
        : coeffs_(coeffs), grid_(grid), theta_dt_(theta_dt) {}
    virtual ~ImplicitSystem() = default;

    /// Solves in place and returns the sup-norm of the linear residual.
    virtual double solve(std::vector<double>& rhs, double t) = 0;

protected:
    struct Stencil {
        double a00, a11, mixed, b0, b1;
    };

    Stencil stencil(std::size_t p, double t) const {
        const Point x = grid_.point(p);
        const Matrix2 a = coeffs_.a(x, t);
        const Vector2 b = coeffs_.b(x, t);
        return {a[0][0], a[1][1], a[0][1] + a[1][0], b[0], b[1]};
    }

    const DiffusionCoefficients& coeffs_;
    const Grid& grid_;
    double theta_dt_;
};

class TridiagonalSystem final : public ImplicitSystem {
public:
    using ImplicitSystem::ImplicitSystem;

    double solve(std::vector<double>& rhs, double t) override {
        if (!built_ || coeffs_.time_dependent) build(t);
        const std::size_t n = rhs.size();
        const std::vector<double> original = rhs;
        // forward sweep
        std::vector<double> c(n), d(n);
        double denom = diag_[0];
        if (denom == 0.0) throw Error(ErrorCode::SolverSingular, "zero pivot in tridiagonal solve");
        c[0] = sup_[0] / denom;
        d[0] = rhs[0] / denom;
        for (std::size_t i = 1; i < n; ++i) {
            denom = diag_[i] - sub_[i] * c[i - 1];
            if (denom == 0.0 || !std::isfinite(denom)) {
                throw Error(ErrorCode::SolverSingular, "zero pivot in tridiagonal solve");
            }
            c[i] = sup_[i] / denom;
            d[i] = (rhs[i] - sub_[i] * d[i - 1]) / denom;
        }
        rhs[n - 1] = d[n - 1];
        for (std::size_t i = n - 1; i-- > 0;) rhs[i] = d[i] - c[i] * rhs[i + 1];

        double res = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double ax = diag_[i] * rhs[i];
            if (i > 0) ax += sub_[i] * rhs[i - 1];
            if (i + 1 < n) ax += sup_[i] * rhs[i + 1];
            res = std::max(res, std::abs(ax - original[i]));
        }
        return res;
    }

private:
    void build(double t) {
        const std::size_t n = grid_.size();
        const double h = grid_.spacing();
        sub_.assign(n, 0.0);
        diag_.assign(n, 1.0);
        sup_.assign(n, 0.0);
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const Stencil s = stencil(i, t);
            const double lo = s.a00 / (h * h) - s.b0 / (2.0 * h);
            const double hi = s.a00 / (h * h) + s.b0 / (2.0 * h);
            sub_[i] = -theta_dt_ * lo;
            diag_[i] = 1.0 + theta_dt_ * 2.0 * s.a00 / (h * h);
            sup_[i] = -theta_dt_ * hi;
        }
        built_ = true;
    }

    bool built_ = false;
    std::vector<double> sub_, diag_, sup_;
};

class SparseSystem final : public ImplicitSystem {
public:
    using ImplicitSystem::ImplicitSystem;

    double solve(std::vector<double>& rhs, double t) override {
        if (!built_ || coeffs_.time_dependent) build(t);
        Eigen::Map<Eigen::VectorXd> b(rhs.data(), static_cast<Eigen::Index>(rhs.size()));
        Eigen::VectorXd x = lu_.solve(b);
        if (lu_.info() != Eigen::Success) throw Error(ErrorCode::SolverSingular, "sparse solve failed");
        const double res = (matrix_ * x - b).lpNorm<Eigen::Infinity>();
        b = x;
        return res;
    }

private:
    void build(double t) {
        const long n = grid_.points();
        const double h = grid_.spacing();
        const double hh = h * h;
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(grid_.size() * 9);
        for (long j = 0; j < n; ++j) {
            for (long i = 0; i < n; ++i) {
                const auto p = static_cast<Eigen::Index>(grid_.flat(i, j));
                if (i == 0 || j == 0 || i == n - 1 || j == n - 1) {
                    trip.emplace_back(p, p, 1.0);
                    continue;
                }
                const Stencil s = stencil(static_cast<std::size_t>(p), t);
                auto add = [&](long di, long dj, double w) {
                    if (w != 0.0) trip.emplace_back(p, static_cast<Eigen::Index>(grid_.flat(i + di, j + dj)), -theta_dt_ * w);
                };
                trip.emplace_back(p, p, 1.0 + theta_dt_ * 2.0 * (s.a00 + s.a11) / hh);
                add(1, 0, s.a00 / hh + s.b0 / (2.0 * h));
                add(-1, 0, s.a00 / hh - s.b0 / (2.0 * h));
                add(0, 1, s.a11 / hh + s.b1 / (2.0 * h));
                add(0, -1, s.a11 / hh - s.b1 / (2.0 * h));
                const double m = s.mixed / (4.0 * hh);
                add(1, 1, m);
                add(-1, -1, m);
                add(1, -1, -m);
                add(-1, 1, -m);
            }
        }
        const auto size = static_cast<Eigen::Index>(grid_.size());
        matrix_.resize(size, size);
        matrix_.setFromTriplets(trip.begin(), trip.end());
        matrix_.makeCompressed();
        lu_.analyzePattern(matrix_);
        lu_.factorize(matrix_);
        if (lu_.info() != Eigen::Success) throw Error(ErrorCode::SolverSingular, "sparse factorization failed");
        built_ = true;
    }

    bool built_ = false;
    Eigen::SparseMatrix<double> matrix_;
    Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu_;
};

std::unique_ptr<ImplicitSystem> make_system(const DiffusionCoefficients& coeffs, const Grid& grid, double theta_dt) {
    if (grid.dim() == 1) return std::make_unique<TridiagonalSystem>(coeffs, grid, theta_dt);
    return std::make_unique<SparseSystem>(coeffs, grid, theta_dt);
}

SpaceTimeField march(const OperatorSpec& op, const Field& u0, const SolverConfig& cfg) {
    const Grid& g = u0.grid();
    const long steps = step_count(cfg);
    const double dt = cfg.dt;
    const double theta = cfg.scheme == Scheme::CrankNicolson ? 0.5 : 1.0;
    const double limit = 1e6 * (1.0 + u0.max_abs());

    std::unique_ptr<Convolver> conv;
    if (op.nonlocal()) conv = std::make_unique<Convolver>(op.kernel, g);
    auto system = make_system(op.coeffs, g, theta * dt);

    std::vector<double> u(u0.values().begin(), u0.values().end());
    std::vector<double> times{u0.time()};
    std::vector<std::vector<double>> levels{u};
    SolverMetadata meta;
    meta.from_solver = true;
    meta.dt = dt;
    meta.scheme = cfg.scheme;
    meta.store_every = cfg.store_every;

    std::vector<double> rhs(u.size());
    for (long k = 0; k < steps; ++k) {
        const double t = u0.time() + static_cast<double>(k) * dt;
        const double t1 = u0.time() + static_cast<double>(k + 1) * dt;
        std::vector<double> ju = conv ? conv->apply(u, cfg.backend) : std::vector<double>(u.size(), 0.0);
        std::vector<double> lap;
        if (theta < 1.0) lap = spatial_operator(op.coeffs, g, u, t);
        for (std::size_t p = 0; p < u.size(); ++p) {
            if (g.on_face(p)) {
                rhs[p] = face_value(g, p);
                continue;
            }
            const double s = op.source(g.point(p), t, u[p], ju[p]);
            if (!std::isfinite(s)) throw Error(ErrorCode::NonFiniteReaction, "reaction is not finite during the march");
            rhs[p] = u[p] + dt * (s + (theta < 1.0 ? (1.0 - theta) * lap[p] : 0.0));
        }
        meta.residual_history.push_back(system->solve(rhs, t1));
        double peak = 0.0;
        for (double v : rhs) {
            if (!std::isfinite(v)) {
                peak = std::numeric_limits<double>::infinity();
                break;
            }
            peak = std::max(peak, std::abs(v));
        }
        if (peak > limit) {
            char buf[160];
            std::snprintf(buf, sizeof buf, "sup-norm exceeded %.6g at t=%.6g; reached horizon t=%.6g", limit, t1, t);
            throw Error(ErrorCode::StepDiverged, buf);
        }
        u.swap(rhs);
        if ((k + 1) % cfg.store_every == 0 || k + 1 == steps) {
            times.push_back(t1);
            levels.push_back(u);
        }
    }
    return {g, std::move(times), std::move(levels), std::move(meta)};
}

} // namespace

long step_count(const SolverConfig& cfg) {
    if (!(cfg.dt > 0.0) || !std::isfinite(cfg.dt)) throw Error(ErrorCode::Config, "dt must be positive");
    if (!(cfg.T >= cfg.dt)) throw Error(ErrorCode::Config, "T must be at least dt");
    const double ratio = cfg.T / cfg.dt;
    const long steps = std::lround(ratio);
    if (std::abs(ratio - static_cast<double>(steps)) > 1e-9 * ratio) {
        throw Error(ErrorCode::Config, "T must be a whole multiple of dt");
    }
    return steps;
}

double face_value(const Grid& grid, std::size_t flat) {
    const long n = grid.points();
    const long i = static_cast<long>(flat) % n;
    const long j = static_cast<long>(flat) / n;
    const FarField& ff = grid.far_field();
    if (i == 0) return ff.left;
    if (i == n - 1) return ff.right;
    if (grid.dim() == 2) return j == 0 ? ff.bottom : ff.top;
    return ff.left;
}

double stability_number(const OperatorSpec& op, const Grid& grid, double dt) {
    const double l1 = op.nonlocal() ? kernel_norms(op.kernel).l1_norm : 0.0;
    double ku = 0.0, kv = 0.0;
    if (op.is_linear()) {
        const auto& lin = op.linear();
        ku = lin.c_abs;
        kv = lin.D;
        for (std::size_t p = 0; p < grid.size(); ++p) {
            const Point x = grid.point(p);
            ku = std::max(ku, std::abs(lin.c(x, 0.0)));
            kv = std::max(kv, std::abs(lin.d(x, 0.0)));
        }
    } else {
        const auto& r = op.reaction();
        if (r.lipschitz_u && r.lipschitz_v) {
            ku = *r.lipschitz_u;
            kv = *r.lipschitz_v;
        } else {
            const auto est = estimate_reaction_constants(r, 2000, {grid.halfwidth(), 1.0, grid.dim()});
            ku = r.lipschitz_u.value_or(est.lipschitz_u);
            kv = r.lipschitz_v.value_or(est.lipschitz_v);
        }
    }
    return dt * (std::abs(ku) + kv * l1);
}

SpaceTimeField solve_ibvp(const OperatorSpec& op, const Field& u0, const SolverConfig& cfg) {
    op.validate();
    const Grid& g = u0.grid();
    if (g.dim() != op.coeffs.dim) throw Error(ErrorCode::DimMismatch, "initial data and operator dimensions differ");
    if (cfg.store_every < 1) throw Error(ErrorCode::Config, "store_every must be at least 1");
    step_count(cfg);

    const double scale = std::max(1.0, u0.max_abs());
    for (std::size_t p = 0; p < g.size(); ++p) {
        if (g.on_face(p) && std::abs(u0[p] - face_value(g, p)) > cfg.boundary_tolerance * scale) {
            throw Error(ErrorCode::Config, "initial data disagrees with the far field on a face");
        }
    }
    if (cfg.preflight) {
        const double s = stability_number(op, g, cfg.dt);
        if (s > 1.0 + 1e-12) {
            char buf[128];
            std::snprintf(buf, sizeof buf, "dt (|k_u| + k_v |phi|_1) = %.6g exceeds 1", s);
            throw Error(ErrorCode::Config, buf);
        }
    }

    SpaceTimeField out = march(op, u0, cfg);
    if (!cfg.truncation_monitor) return out;

    // companion window at least twice as wide on the same lattice
    const long n = g.points();
    const long m = (n - 1 + 1) / 2;
    const Grid wide(g.dim(), g.halfwidth() + static_cast<double>(m) * g.spacing(), static_cast<int>(n + 2 * m),
                    g.far_field());
    std::vector<double> w0(wide.size());
    const long rows = g.dim() == 2 ? n + 2 * m : 1;
    for (long j2 = 0; j2 < rows; ++j2) {
        for (long i2 = 0; i2 < n + 2 * m; ++i2) {
            const long i = i2 - m, j = g.dim() == 2 ? j2 - m : 0;
            const bool inside = i >= 0 && i < n && j >= 0 && j < n;
            w0[wide.flat(i2, j2)] = inside ? u0[g.flat(i, j)] : g.far_value(i, j);
        }
    }
    SolverConfig wide_cfg = cfg;
    wide_cfg.truncation_monitor = false;
    SpaceTimeField companion = march(op, Field(wide, std::move(w0), u0.time()), wide_cfg);

    const double inner = 0.5 * g.halfwidth() + 1e-12;
    double discrepancy = 0.0;
    for (std::size_t k = 0; k < out.num_levels(); ++k) {
        auto a = out.level_values(k), b = companion.level_values(k);
        for (std::size_t p = 0; p < g.size(); ++p) {
            const Point x = g.point(p);
            if (std::abs(x[0]) > inner || (g.dim() == 2 && std::abs(x[1]) > inner)) continue;
            const long i = static_cast<long>(p) % n, j = static_cast<long>(p) / n;
            discrepancy = std::max(discrepancy, std::abs(a[p] - b[wide.flat(i + m, g.dim() == 2 ? j + m : 0)]));
        }
    }
    out.meta().truncation_discrepancy = discrepancy;
    return out;
}

HeatFamily heat_family(const std::string& name, double sigma0, double wavenumber, double t0) {
    HeatFamily f;
    f.sigma0 = sigma0;
    f.wavenumber = wavenumber;
    f.t0 = t0;
    if (name == "gaussian") {
        f.kind = HeatFamilyKind::Gaussian;
    } else if (name == "plane-wave") {
        f.kind = HeatFamilyKind::PlaneWave;
    } else if (name == "point-mass") {
        f.kind = HeatFamilyKind::PointMass;
    } else {
        throw Error(ErrorCode::UnsupportedFamily, "no closed-form heat solution for '" + name + "'");
    }
    return f;
}

double heat_reference_value(const HeatFamily& f, double diffusion, const Point& x, double t, int dim) {
    const double r2 = norm2(x, dim);
    switch (f.kind) {
    case HeatFamilyKind::Gaussian: {
        const double var = f.sigma0 * f.sigma0 + 2.0 * diffusion * t;
        return f.amplitude * std::pow(f.sigma0 * f.sigma0 / var, 0.5 * dim) * std::exp(-r2 / (2.0 * var));
    }
    case HeatFamilyKind::PlaneWave:
        return f.amplitude * std::cos(f.wavenumber * x[0]) * std::exp(-diffusion * f.wavenumber * f.wavenumber * t);
    case HeatFamilyKind::PointMass: {
        const double s = t + f.t0;
        return f.amplitude * std::pow(4.0 * pi * diffusion * s, -0.5 * dim) * std::exp(-r2 / (4.0 * diffusion * s));
    }
    }
    throw Error(ErrorCode::UnsupportedFamily, "unknown heat family");
}

Field exact_heat_reference(const HeatFamily& family, double diffusion, double t, const Grid& grid) {
    return discretize(grid, [&](const Point& x, double s) { return heat_reference_value(family, diffusion, x, s, grid.dim()); },
                      t);
}

ConvergenceTable convergence_study(const OperatorSpec& op, const PointFunction& u0, const Grid& coarse, SolverConfig cfg,
                                   int levels, Refinement mode, const std::optional<HeatFamily>& oracle) {
    if (levels < 2) throw Error(ErrorCode::Config, "a convergence study needs at least two levels");
    double diffusion = 0.0;
    if (oracle) {
        if (!op.coeffs.constant_diffusion || !op.coeffs.constant_drift ||
            std::hypot((*op.coeffs.constant_drift)[0], (*op.coeffs.constant_drift)[1]) != 0.0) {
            throw Error(ErrorCode::UnsupportedFamily, "closed-form heat oracle needs constant diffusion and no drift");
        }
        diffusion = *op.coeffs.constant_diffusion;
    }
    cfg.truncation_monitor = false;
    cfg.store_every = static_cast<int>(step_count(cfg));

    auto grid_at = [&](int level) {
        if (mode == Refinement::TimeOnly) return coarse;
        int n = coarse.points();
        for (int l = 0; l < level; ++l) n = 2 * (n - 1) + 1;
        return Grid(coarse.dim(), coarse.halfwidth(), n, coarse.far_field());
    };
    auto final_level = [&](int level) {
        SolverConfig c = cfg;
        c.dt = cfg.dt / std::pow(2.0, level);
        c.store_every = static_cast<int>(step_count(c));
        const Grid g = grid_at(level);
        SpaceTimeField u = solve_ibvp(op, discretize(g, u0, 0.0), c);
        return u.level(u.num_levels() - 1);
    };

    ConvergenceTable table;
    const int solves = oracle ? levels : levels + 1;
    std::vector<Field> finals;
    for (int level = 0; level < solves; ++level) finals.push_back(final_level(level));

    for (int level = 0; level < levels; ++level) {
        const Field& u = finals[static_cast<std::size_t>(level)];
        const Grid& g = u.grid();
        double err = 0.0;
        for (std::size_t p = 0; p < g.size(); ++p) {
            double ref;
            if (oracle) {
                ref = heat_reference_value(*oracle, diffusion, g.point(p), u.time(), g.dim());
            } else {
                const Field& fine = finals[static_cast<std::size_t>(level + 1)];
                const long n = g.points();
                const long i = static_cast<long>(p) % n, j = static_cast<long>(p) / n;
                const long s = mode == Refinement::TimeOnly ? 1 : 2;
                ref = fine[fine.grid().flat(s * i, s * j)];
            }
            err = std::max(err, std::abs(u[p] - ref));
        }
        ConvergenceRow row{g.points(), g.spacing(), cfg.dt / std::pow(2.0, level), err, std::nullopt};
        if (!table.rows.empty() && err > 0.0 && table.rows.back().error > 0.0) {
            row.order = std::log2(table.rows.back().error / err);
        }
        table.rows.push_back(row);
    }

    table.exact = std::all_of(table.rows.begin(), table.rows.end(), [](const ConvergenceRow& r) { return r.error == 0.0; });
    if (!table.exact && std::all_of(table.rows.begin(), table.rows.end(), [](const ConvergenceRow& r) { return r.error > 0.0; })) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        const double k = static_cast<double>(table.rows.size());
        for (const auto& r : table.rows) {
            const double x = std::log(r.dt), y = std::log(r.error);
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        table.fitted_order = (k * sxy - sx * sy) / (k * sxx - sx * sx);
    }
    return table;
}

} // namespace nlc
