#include "nlcomp/kernels.hpp"

#include "nlcomp/error.hpp"
#include "nlcomp/grid.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

namespace nlc {

namespace {

constexpr double pi = std::numbers::pi;
constexpr double inf = std::numeric_limits<double>::infinity();

void require_positive(double value, const char* what) {
    if (!(value > 0.0) || !std::isfinite(value)) {
        throw Error(ErrorCode::Config, std::string(what) + " must be positive and finite");
    }
}

void require_dim(int dim) {
    if (dim != 1 && dim != 2) {
        throw Error(ErrorCode::Config, "kernel dimension must be 1 or 2");
    }
}

/// Integral of g over [a, b] with breakpoints on a geometric ladder starting at `scale`.
template <class F>
double integrate_ladder(F g, double a, double b, double scale) {
    using boost::math::quadrature::gauss_kronrod;
    if (b <= a) return 0.0;
    double total = 0.0;
    double lo = a;
    double step = std::max(scale, 1e-300);
    while (lo < b) {
        double hi = std::min(b, std::max(lo + step, 2.0 * lo));
        total += gauss_kronrod<double, 31>::integrate(g, lo, hi, 12, 1e-13);
        lo = hi;
    }
    return total;
}

double characteristic_scale(const KernelSpec& k) {
    switch (k.family()) {
    case KernelFamily::Exponential: return 1.0 / k.parameter();
    case KernelFamily::Tabulated: return k.table().dx;
    default: return k.parameter();
    }
}

std::optional<double> compact_support(const KernelSpec& k) {
    switch (k.family()) {
    case KernelFamily::Box:
    case KernelFamily::Triangle: return k.parameter();
    default: return std::nullopt;
    }
}

/// Trapezoid integral of profile(s)|s|^order over the table clipped to [lo, hi],
/// with the 2D radial weight 2 pi r when dim == 2.
double tabulated_partial(const KernelSpec& k, double lo, double hi, int order) {
    const auto& t = k.table();
    if (t.values.empty()) return 0.0;
    lo = std::max(lo, t.x0);
    hi = std::min(hi, t.upper());
    if (hi <= lo) return 0.0;
    auto weight = [&](double s) {
        double w = std::pow(std::abs(s), order);
        if (k.dim() == 2) w *= 2.0 * pi * std::abs(s);
        return t(s) * w;
    };
    std::vector<double> nodes{lo};
    for (std::size_t i = 0; i < t.values.size(); ++i) {
        double x = t.x0 + t.dx * static_cast<double>(i);
        if (x > lo && x < hi) nodes.push_back(x);
    }
    nodes.push_back(hi);
    double sum = 0.0;
    for (std::size_t i = 1; i < nodes.size(); ++i) {
        sum += 0.5 * (nodes[i] - nodes[i - 1]) * (weight(nodes[i]) + weight(nodes[i - 1]));
    }
    return sum;
}

struct AnalyticMoments {
    double l1;
    std::optional<double> m2;
};

std::optional<AnalyticMoments> analytic_moments(const KernelSpec& k) {
    const double p = k.parameter();
    const bool two = k.dim() == 2;
    switch (k.family()) {
    case KernelFamily::Gaussian: return AnalyticMoments{1.0, (two ? 2.0 : 1.0) * p * p};
    case KernelFamily::Box:
        return two ? AnalyticMoments{pi * p * p * k.height(), pi * k.height() * std::pow(p, 4) / 2.0}
                   : AnalyticMoments{2.0 * p * k.height(), 2.0 * k.height() * std::pow(p, 3) / 3.0};
    case KernelFamily::Triangle: return AnalyticMoments{1.0, two ? 0.3 * p * p : p * p / 6.0};
    case KernelFamily::Exponential: return AnalyticMoments{1.0, (two ? 6.0 : 2.0) / (p * p)};
    case KernelFamily::Cauchy: return AnalyticMoments{1.0, std::nullopt};
    case KernelFamily::Tabulated: return std::nullopt;
    }
    return std::nullopt;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

} // namespace

std::string to_string(KernelFamily family) {
    switch (family) {
    case KernelFamily::Gaussian: return "gaussian";
    case KernelFamily::Box: return "box";
    case KernelFamily::Triangle: return "triangle";
    case KernelFamily::Exponential: return "exponential";
    case KernelFamily::Cauchy: return "cauchy";
    case KernelFamily::Tabulated: return "tabulated";
    }
    return "unknown";
}

double TabulatedProfile::operator()(double x) const {
    if (values.empty() || x < x0 || x > upper()) return 0.0;
    double pos = (x - x0) / dx;
    auto i = static_cast<std::size_t>(std::floor(pos));
    if (i + 1 >= values.size()) return values.back();
    double frac = pos - static_cast<double>(i);
    return (1.0 - frac) * values[i] + frac * values[i + 1];
}

KernelSpec::KernelSpec(KernelFamily family, int dim, double param, double height)
    : family_(family), dim_(dim), param_(param), height_(height) {
    require_dim(dim);
}

KernelSpec KernelSpec::gaussian(double sigma, int dim) {
    require_positive(sigma, "gaussian sigma");
    return {KernelFamily::Gaussian, dim, sigma, 1.0};
}

KernelSpec KernelSpec::box(double halfwidth, double height, int dim) {
    require_positive(halfwidth, "box halfwidth");
    if (!std::isfinite(height)) throw Error(ErrorCode::Config, "box height must be finite");
    return {KernelFamily::Box, dim, halfwidth, height};
}

KernelSpec KernelSpec::triangle(double halfwidth, int dim) {
    require_positive(halfwidth, "triangle halfwidth");
    return {KernelFamily::Triangle, dim, halfwidth, 1.0};
}

KernelSpec KernelSpec::exponential(double rate, int dim) {
    require_positive(rate, "exponential rate");
    return {KernelFamily::Exponential, dim, rate, 1.0};
}

KernelSpec KernelSpec::cauchy(double scale, int dim) {
    require_positive(scale, "cauchy scale");
    return {KernelFamily::Cauchy, dim, scale, 1.0};
}

KernelSpec KernelSpec::tabulated(TabulatedProfile profile, int dim) {
    require_positive(profile.dx, "tabulated spacing");
    if (profile.values.size() < 2) throw Error(ErrorCode::Config, "tabulated kernel needs at least two samples");
    for (double v : profile.values) {
        if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteSample, "tabulated kernel sample is not finite");
    }
    if (dim == 2 && profile.x0 < 0.0) {
        throw Error(ErrorCode::Config, "radial tabulated kernel must start at r >= 0");
    }
    KernelSpec k(KernelFamily::Tabulated, dim, profile.dx, 1.0);
    k.table_ = std::move(profile);
    return k;
}

KernelSpec KernelSpec::zero(int dim) {
    return tabulated({dim == 2 ? 0.0 : -1.0, 1.0, dim == 2 ? std::vector<double>{0.0, 0.0}
                                                           : std::vector<double>{0.0, 0.0, 0.0}},
                     dim);
}

KernelSpec KernelSpec::from_file(const std::filesystem::path& path, int dim) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot open kernel table " + path.string());
    std::vector<double> xs, ys;
    std::string line;
    while (std::getline(in, line)) {
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        double x, y;
        if (!(ls >> x)) continue;
        if (!(ls >> y)) throw Error(ErrorCode::Config, "kernel table line needs two columns: " + line);
        xs.push_back(x);
        ys.push_back(y);
    }
    if (xs.size() < 2) throw Error(ErrorCode::Config, "kernel table needs at least two rows");
    double dx = xs[1] - xs[0];
    for (std::size_t i = 1; i < xs.size(); ++i) {
        if (std::abs((xs[i] - xs[i - 1]) - dx) > 1e-9 * std::max(1.0, std::abs(dx))) {
            throw Error(ErrorCode::Config, "kernel table abscissae must be uniform");
        }
    }
    return tabulated({xs.front(), dx, std::move(ys)}, dim);
}

double KernelSpec::profile(double s) const {
    const double p = param_;
    const double a = std::abs(s);
    const bool two = dim_ == 2;
    switch (family_) {
    case KernelFamily::Gaussian:
        return std::exp(-s * s / (2.0 * p * p)) / (two ? 2.0 * pi * p * p : std::sqrt(2.0 * pi) * p);
    case KernelFamily::Box: return a <= p ? height_ : 0.0;
    case KernelFamily::Triangle: {
        double shape = std::max(0.0, 1.0 - a / p);
        return shape * (two ? 3.0 / (pi * p * p) : 1.0 / p);
    }
    case KernelFamily::Exponential:
        return two ? p * p / (2.0 * pi) * std::exp(-p * a) : 0.5 * p * std::exp(-p * a);
    case KernelFamily::Cauchy:
        return two ? p / (2.0 * pi * std::pow(s * s + p * p, 1.5)) : p / (pi * (s * s + p * p));
    case KernelFamily::Tabulated: return table_(s);
    }
    return 0.0;
}

double KernelSpec::operator()(const Point& x) const {
    return dim_ == 2 ? profile(std::hypot(x[0], x[1])) : profile(x[0]);
}

std::string KernelSpec::describe() const {
    std::string s = to_string(family_) + "(";
    switch (family_) {
    case KernelFamily::Gaussian: s += "sigma=" + fmt(param_); break;
    case KernelFamily::Box: s += "halfwidth=" + fmt(param_) + ", height=" + fmt(height_); break;
    case KernelFamily::Triangle: s += "halfwidth=" + fmt(param_); break;
    case KernelFamily::Exponential: s += "rate=" + fmt(param_); break;
    case KernelFamily::Cauchy: s += "scale=" + fmt(param_); break;
    case KernelFamily::Tabulated:
        s += "samples=" + std::to_string(table_.values.size()) + ", dx=" + fmt(table_.dx);
        break;
    }
    return s + ", dim=" + std::to_string(dim_) + ")";
}

double eval_kernel(const KernelSpec& k, const Point& x) { return k(x); }

double QuadratureConfig::tolerance_for(const KernelSpec& k) const {
    if (rel_tol > 0.0) return rel_tol;
    return k.family() == KernelFamily::Tabulated ? 1e-4 : 1e-8;
}

double partial_moment(const KernelSpec& k, double radius, int order) {
    if (radius <= 0.0) return 0.0;
    if (k.family() == KernelFamily::Tabulated) {
        return tabulated_partial(k, k.dim() == 2 ? 0.0 : -radius, radius, order);
    }
    double reach = radius;
    if (auto support = compact_support(k)) reach = std::min(reach, *support);
    if (k.dim() == 2) {
        auto g = [&](double r) { return 2.0 * pi * k.profile(r) * std::pow(r, 1 + order); };
        return integrate_ladder(g, 0.0, reach, characteristic_scale(k));
    }
    auto g = [&](double x) { return k.profile(x) * std::pow(x, order); };
    return 2.0 * integrate_ladder(g, 0.0, reach, characteristic_scale(k));
}

double tail_mass(const KernelSpec& k, double radius) {
    radius = std::max(radius, 0.0);
    const double p = k.parameter();
    const bool two = k.dim() == 2;
    switch (k.family()) {
    case KernelFamily::Gaussian:
        return two ? std::exp(-radius * radius / (2.0 * p * p)) : std::erfc(radius / (p * std::sqrt(2.0)));
    case KernelFamily::Exponential: return two ? (1.0 + p * radius) * std::exp(-p * radius) : std::exp(-p * radius);
    case KernelFamily::Cauchy:
        return two ? p / std::sqrt(radius * radius + p * p) : 2.0 / pi * std::atan(p / radius);
    case KernelFamily::Box:
    case KernelFamily::Triangle:
        if (radius >= p) return 0.0;
        return analytic_moments(k)->l1 - partial_moment(k, radius, 0);
    case KernelFamily::Tabulated: {
        double total = tabulated_partial(k, -inf, inf, 0);
        return total - tabulated_partial(k, two ? 0.0 : -radius, radius, 0);
    }
    }
    return 0.0;
}

double mass_radius(const KernelSpec& k, double fraction) {
    double total = std::abs(k.family() == KernelFamily::Tabulated ? tabulated_partial(k, -inf, inf, 0)
                                                                     : analytic_moments(k)->l1);
    if (total == 0.0) return 0.0;
    double target = fraction * total;
    double hi = characteristic_scale(k);
    while (tail_mass(k, hi) > target) {
        hi *= 2.0;
        if (hi > 1e12) return inf;
    }
    double lo = 0.0;
    for (int it = 0; it < 200 && hi - lo > 1e-12 * hi; ++it) {
        double mid = 0.5 * (lo + hi);
        (tail_mass(k, mid) > target ? lo : hi) = mid;
    }
    return hi;
}

double min_kernel_sample(const KernelSpec& k) {
    switch (k.family()) {
    case KernelFamily::Box: return std::min(k.height(), 0.0);
    case KernelFamily::Tabulated: return *std::min_element(k.table().values.begin(), k.table().values.end());
    default: return 0.0;
    }
}

void require_nonnegative(const KernelSpec& k, double tol) {
    double m = min_kernel_sample(k);
    if (m < -tol) throw Error(ErrorCode::NegativeKernel, "kernel sample " + fmt(m) + " is negative");
}

MomentReport kernel_norms(const KernelSpec& k, const QuadratureConfig& cfg) {
    const double tol = cfg.tolerance_for(k);
    require_nonnegative(k, tol);

    MomentReport rep;
    rep.min_sample = min_kernel_sample(k);
    rep.support_halfwidth = compact_support(k);

    if (auto exact = analytic_moments(k)) {
        rep.analytic = true;
        rep.l1_norm = exact->l1;
        rep.second_moment = exact->m2;
    } else {
        rep.l1_norm = tabulated_partial(k, -inf, inf, 0);
        rep.second_moment = tabulated_partial(k, -inf, inf, 2);
    }

    if (!rep.second_moment) {
        // Partial second moments over growing cutoffs decide finiteness.
        double radius = cfg.first_cutoff;
        double prev = partial_moment(k, radius, 2);
        rep.evidence.emplace_back(radius, prev);
        int streak = 0;
        bool converged = false;
        for (int i = 1; i < cfg.max_cutoffs; ++i) {
            radius *= cfg.cutoff_growth;
            double cur = partial_moment(k, radius, 2);
            rep.evidence.emplace_back(radius, cur);
            double rel = std::abs(cur - prev) / std::max(std::abs(cur), 1e-300);
            prev = cur;
            if (rel < tol) {
                converged = true;
                break;
            }
            streak = rel > cfg.divergence_increment ? streak + 1 : 0;
            if (streak >= cfg.divergence_streak) break;
        }
        if (converged) rep.second_moment = prev;
    }

    if (k.family() == KernelFamily::Tabulated) {
        const auto& t = k.table();
        double scale = 0.0;
        for (double v : t.values) scale = std::max(scale, std::abs(v));
        if (k.dim() == 1) {
            for (std::size_t i = 0; i < t.values.size(); ++i) {
                double x = t.x0 + t.dx * static_cast<double>(i);
                if (std::abs(t(x) - t(-x)) > tol * std::max(scale, 1e-300)) {
                    rep.is_even = false;
                    break;
                }
            }
        }
        std::optional<std::size_t> first, last;
        for (std::size_t i = 0; i < t.values.size(); ++i) {
            if (t.values[i] != 0.0) {
                if (!first) first = i;
                last = i;
            }
        }
        if (!first) {
            rep.support_halfwidth = 0.0;
        } else {
            double lo = std::max(t.x0, t.x0 + t.dx * (static_cast<double>(*first) - 1.0));
            double hi = std::min(t.upper(), t.x0 + t.dx * (static_cast<double>(*last) + 1.0));
            rep.support_halfwidth = k.dim() == 2 ? hi : std::max(std::abs(lo), std::abs(hi));
        }
    }

    rep.normalized = std::abs(rep.l1_norm - 1.0) <= tol;
    return rep;
}

AdmissibilityCertificate classify_kernel(const KernelSpec& k, double class_halfwidth, const QuadratureConfig& cfg) {
    AdmissibilityCertificate cert;
    const double tol = cfg.tolerance_for(k);
    const double min_sample = min_kernel_sample(k);
    cert.l1_nonnegative = {"l1_nonnegative", min_sample >= -tol, min_sample};
    cert.second_moment_finite = {"second_moment_finite", false, inf};
    cert.fundamental_solution = {"fundamental_solution_class", false, 0.0};
    cert.counterexample_class = {"counterexample_class", false, 0.0};
    if (!cert.l1_nonnegative.pass) return cert;

    cert.moments = kernel_norms(k, cfg);
    const auto& m = cert.moments;
    cert.fundamental_solution = {"fundamental_solution_class", std::isfinite(m.l1_norm), m.l1_norm};
    cert.second_moment_finite = {"second_moment_finite", !m.divergent(), m.second_moment.value_or(inf)};
    double support = m.support_halfwidth.value_or(inf);
    cert.counterexample_class = {"counterexample_class",
                                 m.is_even && m.normalized && support >= class_halfwidth, support};
    return cert;
}

std::vector<double> jquotient_field(const KernelSpec& k, const Grid& grid) {
    if (k.dim() != grid.dim()) throw Error(ErrorCode::DimMismatch, "kernel and grid dimensions differ");
    const int n = grid.points();
    const double h = grid.spacing();
    const double reach = mass_radius(k, 1e-12);
    const long pad = std::isfinite(reach) ? std::min<long>(static_cast<long>(std::ceil(reach / h)), 4L * n) : 4L * n;
    const double vol = grid.cell_volume();
    auto inv_theta = [](double r2) { return r2 + 1.0; };

    std::vector<double> q(grid.size(), 0.0);
    if (grid.dim() == 1) {
        for (long i = 0; i < n; ++i) {
            double x = grid.coord(i);
            double sum = 0.0;
            for (long j = -pad; j < n + pad; ++j) {
                double y = grid.coord(j);
                sum += k.profile(x - y) * inv_theta(y * y);
            }
            q[grid.flat(i)] = sum * vol / inv_theta(x * x);
        }
    } else {
        for (long i1 = 0; i1 < n; ++i1) {
            for (long i2 = 0; i2 < n; ++i2) {
                double x1 = grid.coord(i1), x2 = grid.coord(i2);
                double sum = 0.0;
                for (long j1 = -pad; j1 < n + pad; ++j1) {
                    double y1 = grid.coord(j1);
                    for (long j2 = -pad; j2 < n + pad; ++j2) {
                        double y2 = grid.coord(j2);
                        sum += k.profile(std::hypot(x1 - y1, x2 - y2)) * inv_theta(y1 * y1 + y2 * y2);
                    }
                }
                q[grid.flat(i1, i2)] = sum * vol / inv_theta(x1 * x1 + x2 * x2);
            }
        }
    }
    return q;
}

JQuotientCheck jquotient_bound_check(const KernelSpec& k, const Grid& grid, double tol) {
    if (k.dim() != grid.dim()) throw Error(ErrorCode::DimMismatch, "kernel and grid dimensions differ");
    MomentReport m = kernel_norms(k);
    if (m.divergent()) throw Error(ErrorCode::DivergentMoment, "second moment of " + k.describe() + " is infinite");

    JQuotientCheck out;
    out.bound = 3.0 * (m.l1_norm + *m.second_moment);
    if (m.l1_norm == 0.0) {
        out.pass = true;
        return out;
    }
    std::vector<double> q = jquotient_field(k, grid);
    for (std::size_t f = 0; f < q.size(); ++f) {
        if (q[f] > out.measured_max) {
            out.measured_max = q[f];
            out.argmax = std::sqrt(norm2(grid.point(f), grid.dim()));
        }
    }
    out.pass = out.measured_max <= out.bound + tol;
    return out;
}

} // namespace nlc
