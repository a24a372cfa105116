#include "nlcomp/principles.hpp"

#include "nlcomp/error.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace nlc {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

bool same_geometry(const Grid& a, const Grid& b) {
    return a.dim() == b.dim() && a.points() == b.points() && a.halfwidth() == b.halfwidth();
}

/// Evenly spaced subset of the level times, always including the first and last.
std::vector<double> sample_times(const SpaceTimeField& u, bool time_dependent, std::size_t cap = 16) {
    const auto& t = u.times();
    if (!time_dependent || t.size() <= 1) return {t.front()};
    std::vector<double> out;
    const std::size_t m = std::min(cap, t.size());
    for (std::size_t i = 0; i < m; ++i) out.push_back(t[i * (t.size() - 1) / (m - 1)]);
    return out;
}

Condition kernel_condition(const AdmissibilityCertificate& cert, const std::string& ref) {
    const auto& c = cert.l1_nonnegative;
    const bool finite = std::isfinite(cert.moments.l1_norm);
    return {"kernel_l1_nonneg", ref, c.pass && finite, c.measured, std::nullopt};
}

Condition psi_condition(const AdmissibilityCertificate& cert, const std::string& ref) {
    const auto& c = cert.second_moment_finite;
    return {"psi_integrable", ref, c.pass, c.pass ? c.measured : -inf, std::nullopt};
}

Condition renamed(Condition c, const std::string& ref) {
    c.ref = ref;
    if (c.pass) c.witness.reset();
    return c;
}

void finish(ComparisonVerdict& v) {
    const bool all = std::all_of(v.hypotheses.begin(), v.hypotheses.end(), [](const Condition& c) { return c.pass; });
    v.applicability = all ? Applicability::TheoremApplies : Applicability::HypothesesFail;
    v.internal_inconsistency = all && !v.conclusion.pass;
}

/// Linear term c u + d Ju seen as a reaction with its declared constants.
ReactionSpec linear_as_reaction(const LinearCoefficients& lin) {
    ReactionSpec r;
    r.name = lin.name;
    auto c = lin.c, d = lin.d;
    r.f = [c, d](const Point& x, double t, double u, double v) { return c(x, t) * u + d(x, t) * v; };
    r.upper_k_u = lin.C;
    r.lipschitz_u = lin.c_abs;
    r.lipschitz_v = lin.D;
    r.monotone_in_v = true;
    r.uses_nonlocal = true;
    r.box = {-inf, inf, -inf, inf};
    return r;
}

bool box_inside(const ReactionBox& inner, const ReactionBox& outer) {
    return inner.u_lo >= outer.u_lo && inner.u_hi <= outer.u_hi && inner.v_lo >= outer.v_lo && inner.v_hi <= outer.v_hi;
}

/// Minimum of the parabolic boundary trace with its location.
Extremum boundary_min(const SpaceTimeField& u, const std::function<double(std::size_t, std::size_t)>& value) {
    const Grid& g = u.grid();
    Extremum e{inf, {}};
    for (std::size_t k = 0; k < u.num_levels(); ++k) {
        for (std::size_t p = 0; p < g.size(); ++p) {
            if (k > 0 && !g.on_face(p)) continue;
            const double v = value(k, p);
            if (v < e.value) e = {v, {g.point(p), u.times()[k]}};
        }
    }
    return e;
}

Extremum interior_extremum(const SpaceTimeField& r, bool want_max) {
    const Grid& g = r.grid();
    Extremum e{want_max ? -inf : inf, {}};
    for (std::size_t k = 0; k < r.num_levels(); ++k) {
        auto v = r.level_values(k);
        for (std::size_t p = 0; p < g.size(); ++p) {
            if (g.on_face(p)) continue;
            if (want_max ? v[p] > e.value : v[p] < e.value) e = {v[p], {g.point(p), r.times()[k]}};
        }
    }
    if (!std::isfinite(e.value)) e.value = 0.0;
    return e;
}

} // namespace

std::string to_string(Applicability a) {
    return a == Applicability::TheoremApplies ? "THEOREM_APPLIES" : "HYPOTHESES_FAIL";
}

std::string to_string(ComparisonRegime r) {
    return r == ComparisonRegime::SecondMoment ? "second-moment" : "fundamental-solution";
}

const Condition* ComparisonVerdict::find(const std::string& id) const {
    for (const auto& c : hypotheses) {
        if (c.id == id) return &c;
    }
    return nullptr;
}

Extremum field_min(const SpaceTimeField& u) {
    Extremum e{inf, {}};
    for (std::size_t k = 0; k < u.num_levels(); ++k) {
        auto v = u.level_values(k);
        for (std::size_t p = 0; p < v.size(); ++p) {
            if (v[p] < e.value) e = {v[p], {u.grid().point(p), u.times()[k]}};
        }
    }
    return e;
}

Extremum field_max(const SpaceTimeField& u) {
    Extremum e{-inf, {}};
    for (std::size_t k = 0; k < u.num_levels(); ++k) {
        auto v = u.level_values(k);
        for (std::size_t p = 0; p < v.size(); ++p) {
            if (v[p] > e.value) e = {v[p], {u.grid().point(p), u.times()[k]}};
        }
    }
    return e;
}

ComparisonVerdict verify_weak_minimum(const OperatorSpec& op, const SpaceTimeField& u, const PrincipleTolerances& tol) {
    if (!op.is_linear()) throw Error(ErrorCode::Config, "the weak minimum principle needs a linear operator");
    op.validate();
    if (u.grid().dim() != op.coeffs.dim) throw Error(ErrorCode::DimMismatch, "field and operator dimensions differ");
    const auto& lin = op.linear();
    const Grid& g = u.grid();
    const double scale = u.max_abs();

    ComparisonVerdict v;
    v.principle = "weak-minimum";

    const SpaceTimeField r = apply_P_residual(op, u);
    const Extremum rmax = interior_extremum(r, true);
    Condition residual{"residual_nonpositive", "weak-minimum:residual-nonpositive", false, -rmax.value, std::nullopt};
    residual.pass = residual.margin >= -tol.residual * scale;
    if (!residual.pass) residual.witness = rmax.at;
    v.hypotheses.push_back(residual);

    const Extremum bmin = boundary_min(u, [&](std::size_t k, std::size_t p) { return u.level_values(k)[p]; });
    Condition boundary{"boundary_nonnegative", "weak-minimum:boundary-nonnegative", false, bmin.value, std::nullopt};
    boundary.pass = boundary.margin >= -tol.ordering * scale;
    if (!boundary.pass) boundary.witness = bmin.at;
    v.hypotheses.push_back(boundary);

    const std::vector<double> ts = sample_times(u, op.coeffs.time_dependent);
    const ParabolicityReport par = check_parabolicity_growth(op.coeffs, g, 64, ts);
    v.hypotheses.push_back(renamed(par.growth_A, "weak-minimum:growth-of-a"));
    v.hypotheses.push_back(renamed(par.growth_B, "weak-minimum:growth-of-b"));

    // c and d are sampled at every grid point and at every level time
    Extremum cmax{-inf, {}}, dmin{inf, {}}, dmax{-inf, {}};
    for (double t : u.times()) {
        for (std::size_t p = 0; p < g.size(); ++p) {
            const Point x = g.point(p);
            const double c = lin.c(x, t), d = lin.d(x, t);
            if (c > cmax.value) cmax = {c, {x, t}};
            if (d < dmin.value) dmin = {d, {x, t}};
            if (d > dmax.value) dmax = {d, {x, t}};
        }
    }
    Condition c_upper{"c_upper", "weak-minimum:c-upper-bound", false, lin.C - cmax.value, std::nullopt};
    c_upper.pass = c_upper.margin >= -tol.coefficient;
    if (!c_upper.pass) c_upper.witness = cmax.at;
    v.hypotheses.push_back(c_upper);

    Condition d_bounds{"d_bounds", "weak-minimum:d-between-zero-and-D", false,
                       std::min(dmin.value, lin.D - dmax.value), std::nullopt};
    d_bounds.pass = d_bounds.margin >= -tol.coefficient;
    if (!d_bounds.pass) d_bounds.witness = dmin.value < lin.D - dmax.value ? dmin.at : dmax.at;
    v.hypotheses.push_back(d_bounds);

    const AdmissibilityCertificate cert = classify_kernel(op.kernel);
    v.hypotheses.push_back(psi_condition(cert, "weak-minimum:second-moment-integrable"));
    v.hypotheses.push_back(kernel_condition(cert, "operator:kernel-integrable-nonnegative"));

    const Extremum umin = field_min(u);
    v.conclusion = {"nonnegative", "weak-minimum:conclusion", false, umin.value, std::nullopt};
    v.conclusion.pass = umin.value >= -tol.conclusion * scale;
    v.gap = std::max(0.0, -umin.value);
    if (!v.conclusion.pass) v.conclusion.witness = umin.at;
    finish(v);
    return v;
}

StrongMinimumVerdict strong_minimum_check(const OperatorSpec& op, const SpaceTimeField& u, double t_probe,
                                          double inner_fraction, double tol_strict, const PrincipleTolerances& tol) {
    if (!(inner_fraction > 0.0 && inner_fraction <= 1.0)) throw Error(ErrorCode::Config, "inner_fraction must lie in (0, 1]");
    const Grid& g = u.grid();
    StrongMinimumVerdict out;
    out.probe_time = t_probe;

    const ComparisonVerdict weak = verify_weak_minimum(op, u, tol);
    if (weak.applicability != Applicability::TheoremApplies) {
        out.note = "weak minimum hypotheses fail";
        return out;
    }

    const double inner = inner_fraction * g.halfwidth() + 1e-12;
    auto inner_min = [&](std::size_t k) {
        Extremum e{inf, {}};
        auto v = u.level_values(k);
        for (std::size_t p = 0; p < g.size(); ++p) {
            const Point x = g.point(p);
            if (std::abs(x[0]) > inner || (g.dim() == 2 && std::abs(x[1]) > inner)) continue;
            if (v[p] < e.value) e = {v[p], {x, u.times()[k]}};
        }
        return e;
    };

    if (u.level(0).max_abs() <= tol.conclusion) {
        out.applicable = true;
        out.zero_data = true;
        const Extremum lo = field_min(u), hi = field_max(u);
        out.inner_min = lo.value;
        out.min_at = lo.at;
        out.pass = std::max(-lo.value, hi.value) <= tol.conclusion;
        out.note = "zero data: expect u == 0";
        return out;
    }
    if (!(t_probe > 0.0)) {
        const Extremum e = inner_min(0);
        out.inner_min = e.value;
        out.min_at = e.at;
        out.note = "positivity is claimed for t > 0 only";
        return out;
    }
    const auto& times = u.times();
    auto it = std::find_if(times.begin(), times.end(), [&](double t) { return t >= t_probe - 1e-12; });
    if (it == times.end()) throw Error(ErrorCode::Config, "probe time lies beyond the last level");
    const Extremum e = inner_min(static_cast<std::size_t>(it - times.begin()));
    out.applicable = true;
    out.probe_time = *it;
    out.inner_min = e.value;
    out.min_at = e.at;
    out.pass = e.value > tol_strict;
    out.note = out.pass ? "strictly positive on the inner window" : "inner minimum not strictly positive";
    return out;
}

double auxiliary_rate(const OperatorSpec& op) {
    if (!op.is_linear()) throw Error(ErrorCode::Config, "the auxiliary transform needs a linear operator");
    if (!op.coeffs.A || !op.coeffs.B) throw Error(ErrorCode::Config, "growth constants A and B must be declared");
    const MomentReport m = kernel_norms(op.kernel);
    if (m.divergent()) throw Error(ErrorCode::DivergentMoment, "second moment of " + op.kernel.describe() + " is infinite");
    const auto& lin = op.linear();
    const double n = op.coeffs.dim;
    return lin.C + 2.0 * *op.coeffs.B + 2.0 * n * *op.coeffs.A + 3.0 * lin.D * (m.l1_norm + *m.second_moment) + 1.0;
}

AuxiliaryTransform auxiliary_transform(const OperatorSpec& op, const Grid& grid, const std::vector<double>& times,
                                       int max_doublings) {
    op.validate();
    if (grid.dim() != op.coeffs.dim) throw Error(ErrorCode::DimMismatch, "grid and operator dimensions differ");
    if (times.empty()) throw Error(ErrorCode::Config, "at least one time is required");
    AuxiliaryTransform out;
    out.nu_formula = auxiliary_rate(op);
    out.times = times;
    const auto& lin = op.linear();
    const int n = grid.dim();

    out.theta.resize(grid.size());
    for (std::size_t p = 0; p < grid.size(); ++p) out.theta[p] = 1.0 / (norm2(grid.point(p), n) + 1.0);
    out.jh_quotient = kernel_norms(op.kernel).l1_norm > 0.0 ? jquotient_field(op.kernel, grid)
                                                            : std::vector<double>(grid.size(), 0.0);

    // c_bar without the -nu shift, and d jh, per time
    std::vector<std::vector<double>> base(times.size()), djh(times.size());
    out.b_bar.assign(times.size(), std::vector<Vector2>(grid.size()));
    for (std::size_t k = 0; k < times.size(); ++k) {
        const double t = times[k];
        base[k].resize(grid.size());
        djh[k].resize(grid.size());
        for (std::size_t p = 0; p < grid.size(); ++p) {
            const Point x = grid.point(p);
            const Matrix2 a = op.coeffs.a(x, t);
            const Vector2 b = op.coeffs.b(x, t);
            const double th = out.theta[p];
            double cb = lin.c(x, t);
            for (int i = 0; i < n; ++i) {
                double bb = b[i];
                for (int j = 0; j < n; ++j) bb += 2.0 * x[j] * (a[i][j] + a[j][i]) * th;
                out.b_bar[k][p][i] = bb;
                cb += 2.0 * x[i] * b[i] * th + 2.0 * a[i][i] * th;
            }
            base[k][p] = cb;
            djh[k][p] = lin.d(x, t) * out.jh_quotient[p];
        }
    }

    double nu = out.nu_formula;
    for (int attempt = 0; attempt <= max_doublings; ++attempt) {
        double worst = -inf;
        Witness at;
        for (std::size_t k = 0; k < times.size(); ++k) {
            for (std::size_t p = 0; p < grid.size(); ++p) {
                const double val = base[k][p] - nu + djh[k][p];
                if (val > worst) worst = val, at = {grid.point(p), times[k]};
            }
        }
        if (worst < 0.0) {
            out.nu = nu;
            out.doublings = attempt;
            out.max_transformed_one = worst;
            out.max_at = at;
            out.c_bar.assign(times.size(), std::vector<double>(grid.size()));
            for (std::size_t k = 0; k < times.size(); ++k) {
                for (std::size_t p = 0; p < grid.size(); ++p) out.c_bar[k][p] = base[k][p] - nu;
            }
            return out;
        }
        if (attempt == max_doublings) {
            throw Error(ErrorCode::NuInsufficient, "max of c_bar + d jh is " + fmt(worst) + " at nu = " + fmt(nu));
        }
        nu *= 2.0;
    }
    return out;
}

ReactionBox comparison_box(const OperatorSpec& op, const SpaceTimeField& u_low, const SpaceTimeField& u_up) {
    ReactionBox k{inf, -inf, inf, -inf};
    const bool nonlocal = kernel_norms(op.kernel).l1_norm > 0.0;
    const double mass = nonlocal ? kernel_norms(op.kernel).l1_norm : 0.0;
    for (const SpaceTimeField* u : {&u_low, &u_up}) {
        const Grid& g = u->grid();
        const FarField& ff = g.far_field();
        std::vector<double> far{ff.left, ff.right};
        if (g.dim() == 2) far.insert(far.end(), {ff.bottom, ff.top});
        for (double f : far) {
            k.u_lo = std::min(k.u_lo, f), k.u_hi = std::max(k.u_hi, f);
            k.v_lo = std::min(k.v_lo, mass * f), k.v_hi = std::max(k.v_hi, mass * f);
        }
        k.u_lo = std::min(k.u_lo, u->min());
        k.u_hi = std::max(k.u_hi, u->max());
        if (!nonlocal) {
            k.v_lo = std::min(k.v_lo, 0.0), k.v_hi = std::max(k.v_hi, 0.0);
            continue;
        }
        const Convolver conv(op.kernel, g);
        for (std::size_t lvl = 0; lvl < u->num_levels(); ++lvl) {
            const std::vector<double> ju = conv.apply(u->level_values(lvl));
            const auto [lo, hi] = std::minmax_element(ju.begin(), ju.end());
            k.v_lo = std::min(k.v_lo, *lo), k.v_hi = std::max(k.v_hi, *hi);
        }
    }
    return k;
}

ComparisonVerdict verify_comparison(const OperatorSpec& op, const SpaceTimeField& u_low, const SpaceTimeField& u_up,
                                    ComparisonRegime regime, const PrincipleTolerances& tol) {
    op.validate();
    const Grid& g = u_low.grid();
    if (!same_geometry(g, u_up.grid())) throw Error(ErrorCode::DimMismatch, "fields live on different grids");
    if (g.dim() != op.coeffs.dim) throw Error(ErrorCode::DimMismatch, "field and operator dimensions differ");
    if (u_low.num_levels() != u_up.num_levels()) throw Error(ErrorCode::Config, "fields have different time levels");
    for (std::size_t k = 0; k < u_low.num_levels(); ++k) {
        if (std::abs(u_low.times()[k] - u_up.times()[k]) > 1e-12 * std::max(1.0, std::abs(u_low.times()[k]))) {
            throw Error(ErrorCode::Config, "fields have different time levels");
        }
    }
    const double scale = std::max({1.0, u_low.max_abs(), u_up.max_abs()});
    const bool second = regime == ComparisonRegime::SecondMoment;
    const std::string pre = second ? "comparison-second-moment:" : "comparison-fundamental-solution:";

    ComparisonVerdict v;
    v.principle = second ? "comparison-second-moment" : "comparison-fundamental-solution";

    const ReactionBox box = comparison_box(op, u_low, u_up);
    v.notes.push_back("K uses grid extrema plus far-field limits: u in [" + fmt(box.u_lo) + ", " + fmt(box.u_hi) +
                      "], Ju in [" + fmt(box.v_lo) + ", " + fmt(box.v_hi) + "]");
    ReactionSpec r = op.is_linear() ? linear_as_reaction(op.linear()) : op.reaction();
    if (!box_inside(box, r.box)) {
        // declared constants cover the registry box only; fall back to existence on K
        r.upper_k_u.reset();
        r.lipschitz_u.reset();
        r.lipschitz_v.reset();
        v.notes.push_back("K exceeds the declared reaction box; Lipschitz conditions audited as existence on K");
    }
    const ReactionConstants rc =
        estimate_reaction_constants(r, box, 10000, {g.halfwidth(), u_low.times().back(), g.dim()});

    const SpaceTimeField r_low = apply_P_residual(op, u_low);
    const SpaceTimeField r_up = apply_P_residual(op, u_up);
    Extremum dres{inf, {}};
    for (std::size_t k = 0; k < r_low.num_levels(); ++k) {
        auto a = r_low.level_values(k), b = r_up.level_values(k);
        for (std::size_t p = 0; p < g.size(); ++p) {
            if (g.on_face(p)) continue;
            if (a[p] - b[p] < dres.value) dres = {a[p] - b[p], {g.point(p), r_low.times()[k]}};
        }
    }
    if (!std::isfinite(dres.value)) dres.value = 0.0;
    Condition residual{"residual_ordering", pre + "residual-ordering", false, dres.value, std::nullopt};
    residual.pass = residual.margin >= -tol.residual * scale;
    if (!residual.pass) residual.witness = dres.at;

    const Extremum bgap = boundary_min(u_low, [&](std::size_t k, std::size_t p) {
        return u_up.level_values(k)[p] - u_low.level_values(k)[p];
    });
    Condition boundary{"boundary_ordering", pre + "boundary-ordering", false, bgap.value, std::nullopt};
    boundary.pass = boundary.margin >= -tol.ordering * scale;
    if (!boundary.pass) boundary.witness = bgap.at;

    const AdmissibilityCertificate cert = classify_kernel(op.kernel);
    const ParabolicityReport par = check_parabolicity_growth(op.coeffs, g, 64, sample_times(u_low, op.coeffs.time_dependent));

    Condition monotone = renamed(rc.monotone_v, pre + "non-decreasing-in-Ju");
    if (!monotone.pass) {
        monotone.witness = rc.min_slope_at;
        v.notes.push_back("monotonicity fails with slope " + fmt(rc.min_slope_v) + " at u = " + fmt(rc.u_at_min_slope) +
                          ", Ju = " + fmt(rc.v_at_min_slope));
    }

    if (second) {
        v.hypotheses.push_back(residual);
        v.hypotheses.push_back(boundary);
        v.hypotheses.push_back(renamed(par.growth_A, pre + "growth-of-a"));
        v.hypotheses.push_back(renamed(par.growth_B, pre + "growth-of-b"));
        v.hypotheses.push_back(psi_condition(cert, pre + "second-moment-integrable"));
        v.hypotheses.push_back(renamed(rc.upper_lipschitz_u, pre + "upper-lipschitz-in-u"));
        v.hypotheses.push_back(renamed(rc.lipschitz_v_check, pre + "lipschitz-in-Ju"));
        v.hypotheses.push_back(monotone);
        v.hypotheses.push_back(kernel_condition(cert, "operator:kernel-integrable-nonnegative"));
    } else {
        Condition bounds{"coefficient_bounds", pre + "bounded-parabolic-coefficients",
                         par.lower_bound.pass && par.upper_bound.pass,
                         std::min(par.lower_bound.margin, par.upper_bound.margin), std::nullopt};
        if (!bounds.pass) bounds.witness = par.lower_bound.pass ? par.upper_bound.witness : par.lower_bound.witness;
        v.hypotheses.push_back(bounds);
        v.hypotheses.push_back({"coefficient_regularity", pre + "declared-regular-coefficients",
                                op.coeffs.declared_regular, op.coeffs.declared_regular ? 0.0 : -inf, std::nullopt});
        v.hypotheses.push_back(monotone);
        v.hypotheses.push_back(renamed(rc.lipschitz_u_check, pre + "lipschitz-in-u"));
        v.hypotheses.push_back(renamed(rc.lipschitz_v_check, pre + "lipschitz-in-Ju"));
        v.hypotheses.push_back(kernel_condition(cert, pre + "kernel-integrable-nonnegative"));
        v.hypotheses.push_back(residual);
        v.hypotheses.push_back(boundary);
    }

    Extremum worst{-inf, {}};
    for (std::size_t k = 0; k < u_low.num_levels(); ++k) {
        auto a = u_low.level_values(k), b = u_up.level_values(k);
        for (std::size_t p = 0; p < g.size(); ++p) {
            if (a[p] - b[p] > worst.value) worst = {a[p] - b[p], {g.point(p), u_low.times()[k]}};
        }
    }
    v.gap = std::max(0.0, worst.value);
    v.conclusion = {"ordered", pre + "conclusion", worst.value <= tol.conclusion * scale, -worst.value, std::nullopt};
    if (!v.conclusion.pass) v.conclusion.witness = worst.at;
    finish(v);
    return v;
}

double counterexample_profile(double x) {
    if (x <= 0.0) return 1.0;
    if (x >= 1.0) return 0.0;
    return 1.0 - x * x * x * (10.0 + x * (-15.0 + 6.0 * x));
}

bool CounterexampleReport::reproduced() const {
    const Condition* mono = verdict.find("monotone_v");
    bool others = true;
    for (const auto& c : verdict.hypotheses) {
        if (c.id != "monotone_v") others = others && c.pass;
    }
    return forward_positive && within_20_percent && exceedance && control_ok && mono && !mono->pass && others &&
           !verdict.conclusion.pass;
}

namespace {

/// Ju0(0) = integral of phi(y) u0(y), split at the kinks of u0 and the kernel support.
double counterexample_ju0(const KernelSpec& k) {
    using boost::math::quadrature::gauss_kronrod;
    const MomentReport m = kernel_norms(k);
    double reach = m.support_halfwidth.value_or(mass_radius(k, 1e-15));
    if (!std::isfinite(reach)) reach = 1e6;
    std::vector<double> cuts{-reach, 0.0, 1.0, reach};
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    auto f = [&](double y) { return k.profile(y) * counterexample_profile(y); };
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double a = std::max(cuts[i], -reach), b = std::min(cuts[i + 1], reach);
        if (b > a) total += gauss_kronrod<double, 61>::integrate(f, a, b, 20, 1e-13);
    }
    return total;
}

/// The profile's third derivative jumps at 0, so interpolating across the cell
/// holding 0 is only first-order accurate.  Use a node at 0 when the grid has one,
/// else extrapolate linearly from the two nearest nodes on x < 0, where u0 is constant.
double forward_difference_at_origin(const SpaceTimeField& u) {
    const Grid& g = u.grid();
    const double dt = u.times()[1] - u.times()[0];
    auto quotient = [&](long i) {
        const std::size_t p = static_cast<std::size_t>(i);
        return (u.level_values(1)[p] - u.level_values(0)[p]) / dt;
    };
    const double h = g.spacing();
    const long left = static_cast<long>(std::floor((g.halfwidth()) / h + 1e-9));
    if (std::abs(g.coord(left)) <= 1e-9 * h) return quotient(left);
    const long i1 = g.coord(left) < 0.0 ? left : left - 1;
    const double x1 = g.coord(i1), x2 = g.coord(i1 - 1);
    const double q1 = quotient(i1), q2 = quotient(i1 - 1);
    return q1 + (q1 - q2) * (0.0 - x1) / (x1 - x2);
}

} // namespace

CounterexampleReport reproduce_counterexample(const CounterexampleConfig& cfg) {
    if (!(cfg.diffusion > 0.0)) throw Error(ErrorCode::Config, "diffusion must be positive");
    if (cfg.kernel.dim() != 1) throw Error(ErrorCode::DimMismatch, "the counterexample is one-dimensional");
    const AdmissibilityCertificate cert = classify_kernel(cfg.kernel, cfg.class_halfwidth);
    if (!cert.l1_nonnegative.pass || !cert.counterexample_class.pass) {
        throw Error(ErrorCode::Config, "kernel " + cfg.kernel.describe() + " is outside the counterexample class");
    }

    const Grid grid(1, cfg.halfwidth, cfg.points, {1.0, 0.0});
    const Field u0 = discretize(grid, [](const Point& x, double) { return counterexample_profile(x[0]); });
    OperatorSpec op{heat_coefficients(cfg.diffusion), make_reaction("fkpp-nonlocal"), cfg.kernel};

    CounterexampleReport rep;
    rep.ju0_at_origin = counterexample_ju0(cfg.kernel);
    rep.predictor = 1.0 - rep.ju0_at_origin;

    SolverConfig sc;
    sc.dt = cfg.dt;
    sc.T = cfg.T;
    sc.scheme = cfg.scheme;
    sc.truncation_monitor = cfg.truncation_monitor;
    SpaceTimeField sol = solve_ibvp(op, u0, sc);
    rep.truncation_discrepancy = sol.meta().truncation_discrepancy;

    auto row = [&](double dt, double value) {
        return ForwardDifferenceRow{dt, value, std::abs(value - rep.predictor) / std::abs(rep.predictor)};
    };
    rep.forward_difference = forward_difference_at_origin(sol);
    rep.refinement.push_back(row(cfg.dt, rep.forward_difference));
    for (double dt : cfg.refinement_dts) {
        SolverConfig one = sc;
        one.dt = dt;
        one.T = dt;
        one.truncation_monitor = false;
        rep.refinement.push_back(row(dt, forward_difference_at_origin(solve_ibvp(op, u0, one))));
    }
    rep.forward_positive = rep.predictor > 0.0;
    rep.within_20_percent = true;
    for (const auto& r : rep.refinement) {
        rep.forward_positive = rep.forward_positive && r.value >= 0.5 * rep.predictor;
        rep.within_20_percent = rep.within_20_percent && r.relative_error <= 0.2;
    }

    const Extremum top = field_max(sol);
    rep.max_u = top.value;
    rep.max_at = top.at;
    for (std::size_t k = 0; k < sol.num_levels() && !rep.exceedance; ++k) {
        auto v = sol.level_values(k);
        const auto it = std::max_element(v.begin(), v.end());
        if (*it > 1.0 + cfg.delta) {
            rep.exceedance = true;
            rep.t_star = sol.times()[k];
            rep.x_star = grid.point(static_cast<std::size_t>(it - v.begin()))[0];
        }
    }

    OperatorSpec control{heat_coefficients(cfg.diffusion), make_reaction("logistic-local"), KernelSpec::zero()};
    SolverConfig cc = sc;
    cc.truncation_monitor = false;
    rep.control_max_u = solve_ibvp(control, u0, cc).max();
    rep.control_ok = rep.control_max_u <= 1.0 + cfg.control_tol;

    const SpaceTimeField one = SpaceTimeField::constant(grid.with_far_field({1.0, 1.0}), sol.times(), 1.0);
    rep.verdict = verify_comparison(op, sol, one, ComparisonRegime::SecondMoment);
    rep.solution = std::move(sol);
    return rep;
}

InitialProfile initial_profile_from_string(const std::string& name) {
    if (name == "smoothstep-front") return InitialProfile::SmoothstepFront;
    if (name == "zero") return InitialProfile::Zero;
    if (name == "one") return InitialProfile::One;
    throw Error(ErrorCode::Config, "unknown initial profile '" + name + "'");
}

std::string to_string(InitialProfile p) {
    switch (p) {
    case InitialProfile::SmoothstepFront: return "smoothstep-front";
    case InitialProfile::Zero: return "zero";
    case InitialProfile::One: return "one";
    }
    return "unknown";
}

InvariantRegionReport invariant_region_check(const InvariantRegionConfig& cfg) {
    if (!(cfg.diffusion > 0.0)) throw Error(ErrorCode::Config, "diffusion must be positive");
    if (!(cfg.front_width > 0.0)) throw Error(ErrorCode::Config, "front width must be positive");
    const AdmissibilityCertificate cert = classify_kernel(cfg.kernel);
    if (!cert.l1_nonnegative.pass || !cert.fundamental_solution.pass) {
        throw Error(ErrorCode::Config, "kernel must be nonnegative and integrable");
    }
    const int dim = cfg.kernel.dim();

    FarField ff;
    PointFunction init;
    switch (cfg.initial) {
    case InitialProfile::SmoothstepFront:
        ff = {1.0, 0.0, 0.0, 0.0};
        init = [&](const Point& x, double) { return counterexample_profile((x[0] - cfg.front_position) / cfg.front_width); };
        if (dim == 2) throw Error(ErrorCode::Config, "the front profile is one-dimensional");
        break;
    case InitialProfile::Zero:
        ff = {0.0, 0.0, 0.0, 0.0};
        init = [](const Point&, double) { return 0.0; };
        break;
    case InitialProfile::One:
        ff = {1.0, 1.0, 1.0, 1.0};
        init = [](const Point&, double) { return 1.0; };
        break;
    }
    const Grid grid(dim, cfg.halfwidth, cfg.points, ff);
    const Field u0 = discretize(grid, init);
    if (u0.min() < 0.0 || u0.max() > 1.0) throw Error(ErrorCode::Config, "initial data must lie in [0, 1]");

    SolverConfig sc;
    sc.dt = cfg.dt;
    sc.T = cfg.T;
    sc.scheme = cfg.scheme;
    const auto coeffs = heat_coefficients(cfg.diffusion, dim);
    SpaceTimeField clipped = solve_ibvp({coeffs, make_reaction("fkpp-clipped"), cfg.kernel}, u0, sc);
    SpaceTimeField source = solve_ibvp({coeffs, make_reaction("fkpp-source"), cfg.kernel}, u0, sc);

    InvariantRegionReport rep;
    Extremum e = field_min(clipped);
    rep.clipped_min = e.value, rep.clipped_min_at = e.at;
    e = field_max(clipped);
    rep.clipped_max = e.value, rep.clipped_max_at = e.at;
    e = field_min(source);
    rep.source_min = e.value, rep.source_min_at = e.at;
    e = field_max(source);
    rep.source_max = e.value, rep.source_max_at = e.at;
    for (std::size_t k = 0; k < clipped.num_levels(); ++k) {
        auto a = clipped.level_values(k), b = source.level_values(k);
        for (std::size_t p = 0; p < grid.size(); ++p) {
            const double d = std::abs(a[p] - b[p]);
            if (d > rep.max_difference) rep.max_difference = d, rep.difference_at = {grid.point(p), clipped.times()[k]};
        }
    }
    rep.bounds_hold = std::min(rep.clipped_min, rep.source_min) >= -cfg.tol &&
                      std::max(rep.clipped_max, rep.source_max) <= 1.0 + cfg.tol;
    rep.solutions_agree = rep.max_difference <= cfg.tol;
    rep.clipped = std::move(clipped);
    rep.source = std::move(source);
    return rep;
}

} // namespace nlc
