#include "nlcomp/fundsol.hpp"

#include "nlcomp/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <random>

namespace nlc {

namespace {

constexpr double pi = std::numbers::pi;
constexpr double inf = std::numeric_limits<double>::infinity();

/// Trapezoid nodes covering [lo, hi] with spacing at most `step`.
struct Nodes {
    std::vector<double> x;
    std::vector<double> w;
};

Nodes trapezoid(double lo, double hi, double step) {
    const long n = std::max(2L, static_cast<long>(std::ceil((hi - lo) / step)) + 1);
    const double h = (hi - lo) / static_cast<double>(n - 1);
    Nodes out;
    out.x.resize(n);
    out.w.assign(n, h);
    for (long i = 0; i < n; ++i) out.x[i] = lo + h * static_cast<double>(i);
    out.w.front() = out.w.back() = 0.5 * h;
    return out;
}

/// Integral over the n-dimensional box [c - R, c + R]^n of fn.
double tensor_trapezoid(int dim, const Point& centre, double radius, double step,
                        const std::function<double(const Point&)>& fn) {
    const Nodes a = trapezoid(centre[0] - radius, centre[0] + radius, step);
    if (dim == 1) {
        double s = 0.0;
        for (std::size_t i = 0; i < a.x.size(); ++i) s += a.w[i] * fn({a.x[i], 0.0});
        return s;
    }
    const Nodes b = trapezoid(centre[1] - radius, centre[1] + radius, step);
    double s = 0.0;
    for (std::size_t j = 0; j < b.x.size(); ++j) {
        double row = 0.0;
        for (std::size_t i = 0; i < a.x.size(); ++i) row += a.w[i] * fn({a.x[i], b.x[j]});
        s += b.w[j] * row;
    }
    return s;
}

bool same_levels(const SpaceTimeField& a, const SpaceTimeField& b) {
    const Grid &ga = a.grid(), &gb = b.grid();
    if (ga.dim() != gb.dim() || ga.points() != gb.points() || ga.halfwidth() != gb.halfwidth()) return false;
    if (a.num_levels() != b.num_levels()) return false;
    for (std::size_t k = 0; k < a.num_levels(); ++k) {
        if (std::abs(a.times()[k] - b.times()[k]) > 1e-12 * std::max(1.0, std::abs(a.times()[k]))) return false;
    }
    return true;
}

} // namespace

void ConstCoeffParams::validate() const {
    if (!(diffusion > 0.0) || !std::isfinite(diffusion)) throw Error(ErrorCode::Config, "diffusion must be positive");
    if (dim != 1 && dim != 2) throw Error(ErrorCode::Config, "dimension must be 1 or 2");
}

double log_gamma(const ConstCoeffParams& p, const Point& x, double t, const Point& xi, double tau) {
    if (!(t > tau)) throw Error(ErrorCode::TimeOrder, "the fundamental solution needs t > tau");
    const double s = t - tau;
    double r2 = 0.0;
    for (int i = 0; i < p.dim; ++i) {
        const double r = x[i] - xi[i] + p.drift[i] * s;
        r2 += r * r;
    }
    return -0.5 * p.dim * std::log(4.0 * pi * p.diffusion * s) - r2 / (4.0 * p.diffusion * s) + p.reaction * s;
}

double gamma_eval(const ConstCoeffParams& p, const Point& x, double t, const Point& xi, double tau) {
    return std::exp(log_gamma(p, x, t, xi, tau));
}

Vector2 gamma_gradient(const ConstCoeffParams& p, const Point& x, double t, const Point& xi, double tau) {
    const double g = gamma_eval(p, x, t, xi, tau);
    const double s = t - tau;
    Vector2 out{0.0, 0.0};
    for (int i = 0; i < p.dim; ++i) out[i] = -(x[i] - xi[i] + p.drift[i] * s) / (2.0 * p.diffusion * s) * g;
    return out;
}

double gamma_adjoint_eval(const ConstCoeffParams& p, const Point& x, double t, const Point& xi, double tau) {
    if (!(t < tau)) throw Error(ErrorCode::TimeOrder, "the adjoint solution needs t < tau");
    return gamma_eval(p, xi, tau, x, t);
}

namespace {

/// D lap + sign b.grad + c of fn at (x, t) by central differences, plus the time part.
double fd_residual(const ConstCoeffParams& p, const std::function<double(const Point&, double)>& fn, const Point& x,
                   double t, double step, double drift_sign, double time_sign) {
    const double h = step;
    const double u = fn(x, t);
    double lap = 0.0, adv = 0.0;
    for (int i = 0; i < p.dim; ++i) {
        Point xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        const double up = fn(xp, t), um = fn(xm, t);
        lap += (up - 2.0 * u + um) / (h * h);
        adv += p.drift[i] * (up - um) / (2.0 * h);
    }
    const double dt = (fn(x, t + h) - fn(x, t - h)) / (2.0 * h);
    return p.diffusion * lap + drift_sign * adv + p.reaction * u + time_sign * dt;
}

} // namespace

double gamma_residual(const ConstCoeffParams& p, const Point& x, double t, const Point& xi, double tau, double step) {
    return fd_residual(p, [&](const Point& y, double s) { return gamma_eval(p, y, s, xi, tau); }, x, t, step, 1.0, -1.0);
}

double gamma_adjoint_residual(const ConstCoeffParams& p, const Point& x, double t, const Point& xi, double tau,
                              double step) {
    return fd_residual(p, [&](const Point& y, double s) { return gamma_adjoint_eval(p, y, s, xi, tau); }, x, t, step, -1.0,
                       1.0);
}

double gamma_mass(const ConstCoeffParams& p, const Point& x, double t, double tau, int points_per_width) {
    p.validate();
    if (!(t > tau)) throw Error(ErrorCode::TimeOrder, "the fundamental solution needs t > tau");
    const double s = t - tau, sigma = std::sqrt(2.0 * p.diffusion * s);
    const Point centre{x[0] + p.drift[0] * s, x[1] + p.drift[1] * s};
    return tensor_trapezoid(p.dim, centre, 12.0 * sigma, sigma / points_per_width,
                            [&](const Point& xi) { return gamma_eval(p, x, t, xi, tau); });
}

double chapman_kolmogorov_defect(const ConstCoeffParams& p, const Point& x, double t, double s, const Point& xi,
                                 double tau, int points_per_width) {
    p.validate();
    if (!(tau < s && s < t)) throw Error(ErrorCode::TimeOrder, "needs tau < s < t");
    const double s1 = std::sqrt(2.0 * p.diffusion * (t - s)), s2 = std::sqrt(2.0 * p.diffusion * (s - tau));
    // z-centres of the two factors
    const Point c1{x[0] + p.drift[0] * (t - s), x[1] + p.drift[1] * (t - s)};
    const Point c2{xi[0] - p.drift[0] * (s - tau), xi[1] - p.drift[1] * (s - tau)};
    Point mid{0.5 * (c1[0] + c2[0]), 0.5 * (c1[1] + c2[1])};
    double reach = 12.0 * std::max(s1, s2) + 0.5 * std::sqrt(norm2({c1[0] - c2[0], c1[1] - c2[1]}, p.dim));
    const double value = tensor_trapezoid(p.dim, mid, reach, std::min(s1, s2) / points_per_width, [&](const Point& z) {
        return gamma_eval(p, x, t, z, s) * gamma_eval(p, z, s, xi, tau);
    });
    const double direct = gamma_eval(p, x, t, xi, tau);
    return std::abs(value - direct) / direct;
}

TestFunction test_function_from_string(const std::string& name) {
    if (name == "constant") return TestFunction::Constant;
    if (name == "cosine") return TestFunction::Cosine;
    if (name == "bump") return TestFunction::Bump;
    throw Error(ErrorCode::Config, "unknown test function '" + name + "'");
}

std::string to_string(TestFunction f) {
    switch (f) {
    case TestFunction::Constant: return "constant";
    case TestFunction::Cosine: return "cosine";
    case TestFunction::Bump: return "bump";
    }
    return "unknown";
}

double eval_test_function(TestFunction f, const Point& x, int dim) {
    switch (f) {
    case TestFunction::Constant: return 1.0;
    case TestFunction::Cosine: return std::cos(x[0]);
    case TestFunction::Bump: {
        const double r2 = norm2(x, dim);
        return r2 < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - r2)) : 0.0;
    }
    }
    return 0.0;
}

DeltaFamilyReport delta_family_check(const ConstCoeffParams& p, TestFunction f, const std::vector<Point>& x_samples,
                                     const std::vector<double>& t_sequence, double spatial_step, double tol) {
    p.validate();
    if (x_samples.empty() || t_sequence.empty()) throw Error(ErrorCode::Config, "samples and times must be non-empty");
    std::vector<double> ts = t_sequence;
    std::sort(ts.begin(), ts.end(), std::greater<>());
    if (!(ts.back() > 0.0)) throw Error(ErrorCode::TimeOrder, "times must be positive");

    DeltaFamilyReport rep;
    const double smallest = std::sqrt(2.0 * p.diffusion * ts.back());
    rep.spatial_step = spatial_step > 0.0 ? spatial_step : smallest / 10.0;
    if (smallest < 3.0 * rep.spatial_step) {
        throw Error(ErrorCode::QuadratureUnderresolved, "kernel width at the smallest time is below three steps");
    }
    for (double t : ts) {
        const double sigma = std::sqrt(2.0 * p.diffusion * t);
        const double step = spatial_step > 0.0 ? spatial_step : sigma / 10.0;
        double worst = 0.0;
        for (const Point& x : x_samples) {
            const Point centre{x[0] + p.drift[0] * t, x[1] + p.drift[1] * t};
            const double v = tensor_trapezoid(p.dim, centre, 12.0 * sigma, step, [&](const Point& xi) {
                return gamma_eval(p, x, t, xi, 0.0) * eval_test_function(f, xi, p.dim);
            });
            worst = std::max(worst, std::abs(v - eval_test_function(f, x, p.dim)));
        }
        rep.rows.push_back({t, worst});
    }
    rep.strictly_decreasing = true;
    for (std::size_t i = 1; i < rep.rows.size(); ++i) {
        rep.strictly_decreasing = rep.strictly_decreasing && rep.rows[i].max_deviation < rep.rows[i - 1].max_deviation;
    }
    rep.below_tolerance = rep.rows.back().max_deviation <= tol;
    return rep;
}

GammaBoundFit GammaBoundFit::make(double kappa, double lambda, double a_min, double horizon) {
    if (!(kappa > 0.0) || !std::isfinite(kappa)) throw Error(ErrorCode::Config, "kappa must be positive and finite");
    if (!(lambda > 0.0 && lambda < a_min)) throw Error(ErrorCode::Config, "lambda must lie strictly between 0 and A_min");
    if (!(horizon > 0.0)) throw Error(ErrorCode::Config, "horizon must be positive");
    GammaBoundFit fit;
    fit.kappa = kappa;
    fit.lambda = lambda;
    fit.horizon = horizon;
    return fit;
}

GammaBoundFit derive_bound_constants(const ConstCoeffParams& p, double horizon, double lambda_fraction, double safety) {
    p.validate();
    if (!(lambda_fraction > 0.0 && lambda_fraction < 1.0)) throw Error(ErrorCode::Config, "lambda fraction must lie in (0, 1)");
    const double D = p.diffusion;
    const double lambda = lambda_fraction * std::min(D, 1.0 / D);
    // |r + b s|^2 >= (1 - e)|r|^2 - (1/e - 1)|b|^2 s^2, with (1 - e)^2 / D = lambda
    const double eps = 1.0 - std::sqrt(lambda * D);
    const double b2 = norm2(p.drift, p.dim);
    const double log_value = -0.5 * p.dim * std::log(4.0 * pi * D) + std::max(p.reaction, 0.0) * horizon +
                             (1.0 / eps - 1.0) * b2 * horizon / (4.0 * D);
    // sup_z z exp(-e z^2 / (4 D s)) / (2 D s) = e^{-1/2} / sqrt(2 D e s)
    const double log_grad = log_value - 0.5 - 0.5 * std::log(2.0 * D * eps);
    return GammaBoundFit::make(safety * std::exp(std::max(log_value, log_grad)), lambda, D, horizon);
}

GammaBoundFit gaussian_bound_check(const ConstCoeffParams& p, const GammaBoundFit& fit, std::size_t samples,
                                   std::uint64_t seed) {
    p.validate();
    GammaBoundFit out = GammaBoundFit::make(fit.kappa, fit.lambda, p.diffusion, fit.horizon);
    out.samples = samples;
    out.min_gamma = inf;
    double worst_log = -inf;
    const double lo = std::log(std::min(1e-4, fit.horizon)), hi = std::log(fit.horizon);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double log_kappa = std::log(fit.kappa);

    for (std::size_t k = 0; k < samples; ++k) {
        const double s = std::exp(lo + (hi - lo) * uni(rng));
        const double width = std::sqrt(4.0 * p.diffusion * s);
        Point r{0.0, 0.0};
        for (int i = 0; i < p.dim; ++i) {
            // half the samples sit on the drifted peak, half spread over a wide box
            r[i] = k % 2 == 0 ? -p.drift[i] * s + 2.0 * width * normal(rng)
                              : (2.0 * uni(rng) - 1.0) * (4.0 * width + std::abs(p.drift[i]) * s);
        }
        const Point zero{0.0, 0.0};
        const double lg = log_gamma(p, r, s, zero, 0.0);
        const double r2 = norm2(r, p.dim);
        double rb2 = 0.0;
        for (int i = 0; i < p.dim; ++i) rb2 += (r[i] + p.drift[i] * s) * (r[i] + p.drift[i] * s);
        const double envelope = log_kappa - fit.lambda * r2 / (4.0 * s);
        const double log_value_ratio = lg - (envelope - 0.5 * p.dim * std::log(s));
        const double log_grad_ratio = rb2 > 0.0 ? lg + 0.5 * std::log(rb2) - std::log(2.0 * p.diffusion * s) -
                                                       (envelope - 0.5 * (p.dim + 1) * std::log(s))
                                                 : -inf;
        out.min_gamma = std::min(out.min_gamma, std::exp(lg));
        out.max_ratio_value = std::max(out.max_ratio_value, std::exp(log_value_ratio));
        out.max_ratio_gradient = std::max(out.max_ratio_gradient, std::exp(log_grad_ratio));
        const double worst = std::max(log_value_ratio, log_grad_ratio);
        if (worst > worst_log) {
            worst_log = worst;
            out.worst_offset = r;
            out.worst_lag = s;
        }
    }
    out.pass = out.max_ratio_value <= 1.0 && out.max_ratio_gradient <= 1.0 && out.min_gamma > 0.0;
    return out;
}

RepresentationReport integral_representation_check(const ConstCoeffParams& params, const KernelSpec& kernel,
                                                   const SpaceTimeField& c, const SpaceTimeField& d,
                                                   const SpaceTimeField& w, const std::vector<Witness>& samples,
                                                   const RepresentationConfig& cfg) {
    ConstCoeffParams p = params;
    p.reaction = 0.0;
    p.validate();
    const Grid& g = w.grid();
    if (g.dim() != p.dim) throw Error(ErrorCode::DimMismatch, "field and parameter dimensions differ");
    if (!same_levels(w, c) || !same_levels(w, d)) throw Error(ErrorCode::Config, "c, d and w must share grid and levels");
    const auto& times = w.times();
    const double T = times.back() - times.front();

    RepresentationReport rep;
    rep.split = cfg.split > 0.0 ? cfg.split : 1e-4 * T;
    rep.tolerance = cfg.tolerance * std::max(1.0, w.max_abs());

    // source term g = c w + d Jw at every level
    const Convolver conv(kernel, g);
    const bool nonlocal = kernel_norms(kernel).l1_norm > 0.0;
    std::vector<std::vector<double>> src(w.num_levels());
    for (std::size_t k = 0; k < w.num_levels(); ++k) {
        auto wk = w.level_values(k), ck = c.level_values(k), dk = d.level_values(k);
        std::vector<double> jw = nonlocal ? conv.apply(wk) : std::vector<double>(g.size(), 0.0);
        src[k].resize(g.size());
        for (std::size_t q = 0; q < g.size(); ++q) src[k][q] = ck[q] * wk[q] + dk[q] * jw[q];
    }

    const long n = g.points();
    const double h = g.spacing();
    std::vector<double> weight(g.size(), g.cell_volume());
    for (std::size_t q = 0; q < g.size(); ++q) {
        const long i = static_cast<long>(q) % n, j = static_cast<long>(q) / n;
        if (i == 0 || i == n - 1) weight[q] *= 0.5;
        if (g.dim() == 2 && (j == 0 || j == n - 1)) weight[q] *= 0.5;
    }

    // space integral of Gamma*(y, s; x, t) v(y); one-dimensional tails carry the face values
    auto space_integral = [&](const Point& x, double t, double s, const std::function<double(std::size_t)>& v) {
        const double lag = t - s;
        const double sigma = std::sqrt(2.0 * p.diffusion * lag);
        if (sigma < 2.0 * h) return std::numeric_limits<double>::quiet_NaN();
        double sum = 0.0;
        for (std::size_t q = 0; q < g.size(); ++q) sum += weight[q] * gamma_eval(p, x, t, g.point(q), s) * v(q);
        if (g.dim() == 1) {
            const double centre = x[0] + p.drift[0] * lag, spread = std::sqrt(4.0 * p.diffusion * lag);
            const double L = g.halfwidth();
            sum += 0.5 * std::erfc((centre + L) / spread) * v(0);
            sum += 0.5 * std::erfc((L - centre) / spread) * v(g.size() - 1);
        }
        return sum;
    };
    auto interp = [&](const std::vector<double>& a, const std::vector<double>& b, double theta, const Point& x) {
        std::vector<double> mix(a.size());
        for (std::size_t q = 0; q < a.size(); ++q) mix[q] = (1.0 - theta) * a[q] + theta * b[q];
        return Field(g, std::move(mix)).interpolate(x);
    };

    rep.min_slack = inf;
    for (const Witness& sample : samples) {
        auto it = std::find_if(times.begin(), times.end(), [&](double t) {
            return std::abs(t - sample.t) <= 1e-12 * std::max(1.0, std::abs(t));
        });
        if (it == times.end()) throw Error(ErrorCode::Config, "sample time is not a stored level");
        const std::size_t K = static_cast<std::size_t>(it - times.begin());
        if (K == 0) throw Error(ErrorCode::Config, "sample time must be after the first level");
        const double t = times[K];
        const Point& x = sample.x;

        RepresentationRow row{x, t, w.level(K).interpolate(x), 0.0};
        auto w0 = w.level_values(0);
        row.rhs = space_integral(x, t, times[0], [&](std::size_t q) { return w0[q]; });
        if (std::isnan(row.rhs)) row.rhs = w.level(0).interpolate(x);

        const double upper_end = t - rep.split;
        for (std::size_t m = 0; m < K; ++m) {
            const double a = times[m], b = std::min(times[m + 1], upper_end);
            if (!(b > a)) continue;
            // refine toward the singular end so each piece is at most half its distance from t
            const int pieces = std::clamp(static_cast<int>(std::ceil((b - a) / (0.5 * (t - b)))), 1, 64);
            const double len = (b - a) / pieces;
            for (int piece = 0; piece < pieces; ++piece) {
                const double s = a + (piece + 0.5) * len;
                const double theta = (s - times[m]) / (times[m + 1] - times[m]);
                double value = space_integral(x, t, s, [&](std::size_t q) {
                    return (1.0 - theta) * src[m][q] + theta * src[m + 1][q];
                });
                // unresolved kernel: it acts as a point mass at x
                if (std::isnan(value)) value = interp(src[m], src[m + 1], theta, x);
                row.rhs += len * value;
            }
        }
        row.rhs += rep.split * Field(g, src[K]).interpolate(x);

        rep.min_slack = std::min(rep.min_slack, row.lhs - row.rhs);
        const double denom = std::max(std::abs(row.lhs), std::abs(row.rhs));
        if (denom > 0.0) rep.max_relative_gap = std::max(rep.max_relative_gap, std::abs(row.lhs - row.rhs) / denom);
        rep.rows.push_back(row);
    }
    if (rep.rows.empty()) rep.min_slack = 0.0;
    rep.pass = rep.min_slack >= -rep.tolerance;
    return rep;
}

RepresentationReport integral_representation_check(const OperatorSpec& op, const SpaceTimeField& w,
                                                   const std::vector<Witness>& samples, const RepresentationConfig& cfg) {
    if (!op.is_linear()) throw Error(ErrorCode::Config, "needs a linear operator");
    if (!op.coeffs.constant_diffusion || !op.coeffs.constant_drift) {
        throw Error(ErrorCode::Config, "the closed-form solution needs constant coefficients");
    }
    const auto& lin = op.linear();
    const Grid& g = w.grid();
    auto sample = [&](bool want_c) {
        return w.map([&](std::size_t k, std::size_t q, double) {
            const Point x = g.point(q);
            const double t = w.times()[k];
            const double v = want_c ? lin.c(x, t) : lin.d(x, t);
            if (v < 0.0) throw Error(ErrorCode::Config, "c and d must be nonnegative");
            return v;
        });
    };
    ConstCoeffParams p{*op.coeffs.constant_diffusion, *op.coeffs.constant_drift, 0.0, op.coeffs.dim};
    return integral_representation_check(p, op.kernel, sample(true), sample(false), w, samples, cfg);
}

TransformedPair transform_pair(const OperatorSpec& op, const SpaceTimeField& u_low, const SpaceTimeField& u_up) {
    op.validate();
    if (!same_levels(u_low, u_up)) throw Error(ErrorCode::Config, "fields must share grid and levels");
    const Grid& g = u_up.grid();
    const std::size_t levels = u_up.num_levels();
    const Convolver conv_low(op.kernel, u_low.grid()), conv_up(op.kernel, g);

    std::vector<std::vector<double>> cs(levels), ds(levels);
    double identity = 0.0, c_min = inf;
    for (std::size_t k = 0; k < levels; ++k) {
        const double t = u_up.times()[k];
        if (op.is_linear()) {
            cs[k].resize(g.size());
            ds[k].resize(g.size());
            for (std::size_t q = 0; q < g.size(); ++q) {
                cs[k][q] = op.linear().c(g.point(q), t);
                ds[k][q] = op.linear().d(g.point(q), t);
            }
        } else {
            const Field lo = u_low.level(k), hi = u_up.level(k);
            const Field ju_lo = conv_low.apply(lo), ju_hi = conv_up.apply(hi);
            // the two grids differ only in their far fields
            Factorization f = factorize_difference(op.reaction().f, g, t, hi.values(), ju_hi.values(), lo.values(),
                                                   ju_lo.values());
            identity = std::max(identity, f.identity_residual);
            cs[k] = std::move(f.c);
            ds[k] = std::move(f.d);
        }
        c_min = std::min(c_min, *std::min_element(cs[k].begin(), cs[k].end()));
    }
    const double k_shift = std::max(0.0, -c_min);

    std::vector<std::vector<double>> ws(levels);
    double c_sup = 0.0, d_sup = 0.0;
    for (std::size_t k = 0; k < levels; ++k) {
        const double growth = std::exp(k_shift * u_up.times()[k]);
        auto lo = u_low.level_values(k), hi = u_up.level_values(k);
        ws[k].resize(g.size());
        for (std::size_t q = 0; q < g.size(); ++q) {
            ws[k][q] = (hi[q] - lo[q]) * growth;
            cs[k][q] += k_shift;
            c_sup = std::max(c_sup, std::abs(cs[k][q]));
            d_sup = std::max(d_sup, std::abs(ds[k][q]));
        }
    }
    const FarField &fl = u_low.grid().far_field(), &fu = g.far_field();
    const Grid wg = g.with_far_field({fu.left - fl.left, fu.right - fl.right, fu.bottom - fl.bottom, fu.top - fl.top});
    return TransformedPair{SpaceTimeField(wg, u_up.times(), std::move(ws)), SpaceTimeField(wg, u_up.times(), std::move(cs)),
                           SpaceTimeField(wg, u_up.times(), std::move(ds)), k_shift, c_sup, d_sup, identity};
}

std::vector<double> negative_part_series(const SpaceTimeField& w) {
    std::vector<double> out(w.num_levels(), 0.0);
    for (std::size_t k = 0; k < w.num_levels(); ++k) {
        for (double v : w.level_values(k)) out[k] = std::max(out[k], -v);
    }
    return out;
}

double gronwall_constant(double kappa, double lambda, double c_sup, double d_sup, double kernel_l1, int dim) {
    return kappa * (c_sup + d_sup * kernel_l1) * std::pow(2.0 * std::sqrt(pi) / std::sqrt(lambda), dim);
}

std::string to_string(GronwallStatus s) {
    switch (s) {
    case GronwallStatus::Holds: return "HOLDS";
    case GronwallStatus::PremiseFailed: return "PREMISE_FAILED";
    case GronwallStatus::ConclusionFailed: return "CONCLUSION_FAILED";
    }
    return "UNKNOWN";
}

GronwallVerdict discrete_gronwall(const std::vector<double>& times, const std::vector<double>& psi, double C, double tol) {
    if (times.size() != psi.size() || times.empty()) throw Error(ErrorCode::Config, "times and series must match");
    if (!(C >= 0.0)) throw Error(ErrorCode::Config, "the constant must be nonnegative");
    GronwallVerdict v;
    v.premise_holds = true;
    v.max_premise_excess = -inf;
    double integral = 0.0;
    for (std::size_t i = 0; i < psi.size(); ++i) {
        if (i > 0) integral += 0.5 * (times[i] - times[i - 1]) * (psi[i] + psi[i - 1]);
        const double excess = psi[i] - C * integral - tol;
        v.max_premise_excess = std::max(v.max_premise_excess, excess);
        if (excess > 0.0 && v.premise_holds) {
            v.premise_holds = false;
            v.first_violation = i;
        }
    }
    v.initial_small = psi.front() <= tol;
    if (!v.premise_holds || !v.initial_small) {
        v.status = GronwallStatus::PremiseFailed;
        if (!v.first_violation) v.first_violation = 0;
        return v;
    }
    double bound = tol;
    for (std::size_t i = 0; i < psi.size(); ++i) {
        if (i > 0) {
            const double a = 0.5 * C * (times[i] - times[i - 1]);
            bound = a < 1.0 ? bound * (1.0 + a) / (1.0 - a) : inf;
        }
        const double ratio = bound > 0.0 ? psi[i] / bound : (psi[i] > 0.0 ? inf : 0.0);
        v.max_conclusion_ratio = std::max(v.max_conclusion_ratio, ratio);
        if (ratio > 1.0 && !v.first_violation) v.first_violation = i;
    }
    v.status = v.first_violation ? GronwallStatus::ConclusionFailed : GronwallStatus::Holds;
    return v;
}

} // namespace nlc
