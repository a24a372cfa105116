#include "nlcomp/grid.hpp"

#include "nlcomp/error.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <mutex>

namespace nlc {

namespace {

std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

long good_fft_size(long n) {
    for (long s = std::max<long>(n, 1);; ++s) {
        long r = s;
        for (long p : {2L, 3L, 5L, 7L}) {
            while (r % p == 0) r /= p;
        }
        if (r == 1) return s;
    }
}

struct FftwFree {
    void operator()(void* p) const { fftw_free(p); }
};
using RealBuffer = std::unique_ptr<double[], FftwFree>;
using ComplexBuffer = std::unique_ptr<fftw_complex[], FftwFree>;

RealBuffer alloc_real(std::size_t n) {
    return RealBuffer(static_cast<double*>(fftw_malloc(sizeof(double) * n)));
}
ComplexBuffer alloc_complex(std::size_t n) {
    return ComplexBuffer(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n)));
}

std::string fmt12(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

} // namespace

double FarField::max_abs() const {
    return std::max({std::abs(left), std::abs(right), std::abs(bottom), std::abs(top)});
}

Grid::Grid(int dim, double halfwidth, int points, FarField far_field)
    : dim_(dim), halfwidth_(halfwidth), points_(points), spacing_(0.0), far_field_(far_field) {
    if (dim != 1 && dim != 2) throw Error(ErrorCode::Config, "grid dimension must be 1 or 2");
    if (!(halfwidth > 0.0) || !std::isfinite(halfwidth)) throw Error(ErrorCode::Config, "grid halfwidth must be positive");
    if (points < 8) throw Error(ErrorCode::Config, "grid needs at least 8 points per axis");
    for (double v : {far_field.left, far_field.right, far_field.bottom, far_field.top}) {
        if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteSample, "far-field value is not finite");
    }
    spacing_ = 2.0 * halfwidth / static_cast<double>(points - 1);
}

std::size_t Grid::size() const {
    auto n = static_cast<std::size_t>(points_);
    return dim_ == 2 ? n * n : n;
}

Point Grid::point(std::size_t flat) const {
    auto n = static_cast<std::size_t>(points_);
    if (dim_ == 1) return {coord(static_cast<long>(flat)), 0.0};
    return {coord(static_cast<long>(flat % n)), coord(static_cast<long>(flat / n))};
}

bool Grid::on_face(std::size_t flat) const {
    auto n = static_cast<std::size_t>(points_);
    std::size_t i = dim_ == 1 ? flat : flat % n;
    if (i == 0 || i == n - 1) return true;
    if (dim_ == 1) return false;
    std::size_t j = flat / n;
    return j == 0 || j == n - 1;
}

double Grid::far_value(long i, long j) const {
    if (i < 0) return far_field_.left;
    if (i >= points_) return far_field_.right;
    if (dim_ == 2) {
        if (j < 0) return far_field_.bottom;
        if (j >= points_) return far_field_.top;
    }
    return 0.0;
}

Field::Field(Grid grid, std::vector<double> values, double time)
    : grid_(std::move(grid)), values_(std::move(values)), time_(time) {
    if (values_.size() != grid_.size()) throw Error(ErrorCode::DimMismatch, "field length does not match grid");
    for (double v : values_) {
        if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteSample, "field value is not finite");
    }
}

double Field::max_abs() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
}

double Field::min() const { return *std::min_element(values_.begin(), values_.end()); }
double Field::max() const { return *std::max_element(values_.begin(), values_.end()); }

double Field::interpolate(const Point& x) const {
    const double h = grid_.spacing();
    const long n = grid_.points();
    auto locate = [&](double s, long& i, double& frac) {
        double pos = std::clamp((s + grid_.halfwidth()) / h, 0.0, static_cast<double>(n - 1));
        i = std::min<long>(static_cast<long>(std::floor(pos)), n - 2);
        frac = pos - static_cast<double>(i);
    };
    long i, j = 0;
    double fx, fy = 0.0;
    locate(x[0], i, fx);
    if (grid_.dim() == 1) return (1.0 - fx) * values_[grid_.flat(i)] + fx * values_[grid_.flat(i + 1)];
    locate(x[1], j, fy);
    double v00 = values_[grid_.flat(i, j)], v10 = values_[grid_.flat(i + 1, j)];
    double v01 = values_[grid_.flat(i, j + 1)], v11 = values_[grid_.flat(i + 1, j + 1)];
    return (1.0 - fy) * ((1.0 - fx) * v00 + fx * v10) + fy * ((1.0 - fx) * v01 + fx * v11);
}

Field discretize(const Grid& grid, const PointFunction& fn, double t) {
    std::vector<double> values(grid.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        values[i] = fn(grid.point(i), t);
        if (!std::isfinite(values[i])) {
            throw Error(ErrorCode::NonFiniteSample, "sample at index " + std::to_string(i) + " is not finite");
        }
    }
    return {grid, std::move(values), t};
}

std::string to_string(Scheme scheme) {
    return scheme == Scheme::CrankNicolson ? "crank-nicolson" : "backward-euler";
}

SpaceTimeField::SpaceTimeField(Grid grid, std::vector<double> times, std::vector<std::vector<double>> levels,
                               SolverMetadata meta)
    : grid_(std::move(grid)), times_(std::move(times)), levels_(std::move(levels)), meta_(std::move(meta)) {
    if (times_.empty()) throw Error(ErrorCode::Config, "space-time field needs at least one time level");
    if (times_.size() != levels_.size()) throw Error(ErrorCode::DimMismatch, "times and levels differ in count");
    for (std::size_t k = 0; k < levels_.size(); ++k) {
        if (levels_[k].size() != grid_.size()) throw Error(ErrorCode::DimMismatch, "level length does not match grid");
        if (k > 0 && !(times_[k] > times_[k - 1])) throw Error(ErrorCode::Config, "time labels must increase strictly");
    }
}

double SpaceTimeField::min() const {
    double m = levels_[0][0];
    for (const auto& l : levels_) m = std::min(m, *std::min_element(l.begin(), l.end()));
    return m;
}

double SpaceTimeField::max() const {
    double m = levels_[0][0];
    for (const auto& l : levels_) m = std::max(m, *std::max_element(l.begin(), l.end()));
    return m;
}

double SpaceTimeField::max_abs() const { return std::max(std::abs(min()), std::abs(max())); }

SpaceTimeField SpaceTimeField::map(const std::function<double(std::size_t, std::size_t, double)>& fn) const {
    auto levels = levels_;
    for (std::size_t k = 0; k < levels.size(); ++k) {
        for (std::size_t i = 0; i < levels[k].size(); ++i) levels[k][i] = fn(k, i, levels[k][i]);
    }
    return {grid_, times_, std::move(levels), meta_};
}

SpaceTimeField SpaceTimeField::constant(const Grid& grid, const std::vector<double>& times, double value) {
    std::vector<std::vector<double>> levels(times.size(), std::vector<double>(grid.size(), value));
    return {grid, times, std::move(levels)};
}

double ParabolicBoundary::min() const {
    double m = initial.min();
    for (const auto& tr : traces) {
        for (double v : tr) m = std::min(m, v);
    }
    return m;
}

ParabolicBoundary parabolic_boundary(const SpaceTimeField& u) {
    ParabolicBoundary pb{u.level(0), {}, {}};
    const Grid& g = u.grid();
    for (std::size_t k = 1; k < u.num_levels(); ++k) {
        auto values = u.level_values(k);
        std::vector<double> trace;
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (g.on_face(i)) trace.push_back(values[i]);
        }
        pb.times.push_back(u.times()[k]);
        pb.traces.push_back(std::move(trace));
    }
    return pb;
}

struct Convolver::Impl {
    KernelSpec kernel;
    Grid grid;
    long n = 0;
    long pad = 0;
    long reach = 0; // largest lattice offset per axis
    long width = 0; // 2 * reach + 1
    std::vector<double> weights;
    double weight_sum = 0.0;
    double mass_outside = 0.0;

    long fft0 = 0, fft1 = 1;
    std::size_t complex_size = 0;
    fftw_plan forward = nullptr;
    fftw_plan backward = nullptr;
    ComplexBuffer kernel_hat;

    Impl(const KernelSpec& k, const Grid& g, const Options& opts) : kernel(k), grid(g) {
        if (k.dim() != g.dim()) throw Error(ErrorCode::DimMismatch, "kernel and grid dimensions differ");
        const MomentReport moments = kernel_norms(k);
        const double h = g.spacing();
        n = g.points();

        if (g.far_field().max_abs() > 0.0 && moments.l1_norm > 0.0) {
            const double r = mass_radius(k, opts.pad_mass_fraction);
            const long cap = static_cast<long>(opts.max_pad_factor) * n;
            pad = std::isfinite(r) ? std::min<long>(static_cast<long>(std::ceil(r / h)), cap) : cap;
            mass_outside = tail_mass(k, static_cast<double>(pad) * h);
            if (mass_outside > opts.pad_tolerance * moments.l1_norm) {
                throw Error(ErrorCode::PadInsufficient,
                            "kernel mass " + fmt12(mass_outside) + " lies beyond the far-field pad of " +
                                std::to_string(pad) + " points");
            }
        }

        reach = n - 1 + pad;
        width = 2 * reach + 1;
        build_weights(moments.l1_norm);
        build_fft();
    }

    ~Impl() {
        std::lock_guard lock(planner_mutex());
        if (forward) fftw_destroy_plan(forward);
        if (backward) fftw_destroy_plan(backward);
    }

    void build_weights(double l1) {
        const double h = grid.spacing();
        const bool two = grid.dim() == 2;
        const double lattice_radius = (static_cast<double>(reach) + 0.5) * h;
        weights.assign(two ? static_cast<std::size_t>(width * width) : static_cast<std::size_t>(width), 0.0);
        double raw = 0.0;
        if (!two) {
            for (long m = -reach; m <= reach; ++m) {
                double w = kernel.profile(static_cast<double>(m) * h) * h;
                weights[static_cast<std::size_t>(m + reach)] = w;
                raw += w;
            }
        } else {
            const double limit = static_cast<double>(reach) + 0.5;
            for (long m2 = -reach; m2 <= reach; ++m2) {
                for (long m1 = -reach; m1 <= reach; ++m1) {
                    double rr = std::hypot(static_cast<double>(m1), static_cast<double>(m2));
                    if (rr > limit) continue;
                    double w = kernel.profile(rr * h) * h * h;
                    weights[static_cast<std::size_t>((m1 + reach) + width * (m2 + reach))] = w;
                    raw += w;
                }
            }
        }
        const double target = l1 - tail_mass(kernel, lattice_radius);
        const double scale = raw > 0.0 && target > 0.0 ? target / raw : 0.0;
        weight_sum = 0.0;
        for (double& w : weights) {
            w *= scale;
            weight_sum += w;
        }
    }

    long extended() const { return n + 2 * pad; }

    void build_fft() {
        const long need = extended() + width - 1;
        fft0 = good_fft_size(need);
        fft1 = grid.dim() == 2 ? fft0 : 1;
        const std::size_t real_size = static_cast<std::size_t>(fft0 * fft1);
        complex_size = static_cast<std::size_t>(fft1 * (fft0 / 2 + 1));

        RealBuffer in = alloc_real(real_size);
        kernel_hat = alloc_complex(complex_size);
        {
            std::lock_guard lock(planner_mutex());
            if (grid.dim() == 1) {
                forward = fftw_plan_dft_r2c_1d(static_cast<int>(fft0), in.get(), kernel_hat.get(), FFTW_ESTIMATE);
                backward = fftw_plan_dft_c2r_1d(static_cast<int>(fft0), kernel_hat.get(), in.get(), FFTW_ESTIMATE);
            } else {
                forward = fftw_plan_dft_r2c_2d(static_cast<int>(fft1), static_cast<int>(fft0), in.get(),
                                               kernel_hat.get(), FFTW_ESTIMATE);
                backward = fftw_plan_dft_c2r_2d(static_cast<int>(fft1), static_cast<int>(fft0), kernel_hat.get(),
                                                in.get(), FFTW_ESTIMATE);
            }
        }
        if (!forward || !backward) throw Error(ErrorCode::SolverSingular, "FFT planning failed");

        std::fill(in.get(), in.get() + real_size, 0.0);
        const long rows = grid.dim() == 2 ? width : 1;
        for (long q2 = 0; q2 < rows; ++q2) {
            for (long q1 = 0; q1 < width; ++q1) {
                in[static_cast<std::size_t>(q1 + fft0 * q2)] = weights[static_cast<std::size_t>(q1 + width * q2)];
            }
        }
        fftw_execute_dft_r2c(forward, in.get(), kernel_hat.get());
    }

    double extended_value(std::span<const double> u, long i, long j) const {
        const bool inside_i = i >= 0 && i < n;
        const bool inside_j = grid.dim() == 1 || (j >= 0 && j < n);
        if (inside_i && inside_j) return u[grid.flat(i, j)];
        return grid.far_value(i, j);
    }

    std::vector<double> direct(std::span<const double> u) const {
        std::vector<double> out(grid.size(), 0.0);
        if (grid.dim() == 1) {
            for (long i = 0; i < n; ++i) {
                double sum = 0.0;
                for (long j = -pad; j < n + pad; ++j) {
                    sum += weights[static_cast<std::size_t>(i - j + reach)] * extended_value(u, j, 0);
                }
                out[static_cast<std::size_t>(i)] = sum;
            }
            return out;
        }
        for (long i2 = 0; i2 < n; ++i2) {
            for (long i1 = 0; i1 < n; ++i1) {
                double sum = 0.0;
                for (long j2 = -pad; j2 < n + pad; ++j2) {
                    const std::size_t row = static_cast<std::size_t>(width * (i2 - j2 + reach));
                    for (long j1 = -pad; j1 < n + pad; ++j1) {
                        double w = weights[row + static_cast<std::size_t>(i1 - j1 + reach)];
                        if (w != 0.0) sum += w * extended_value(u, j1, j2);
                    }
                }
                out[grid.flat(i1, i2)] = sum;
            }
        }
        return out;
    }

    std::vector<double> fast(std::span<const double> u) const {
        const std::size_t real_size = static_cast<std::size_t>(fft0 * fft1);
        RealBuffer buf = alloc_real(real_size);
        ComplexBuffer spec = alloc_complex(complex_size);
        std::fill(buf.get(), buf.get() + real_size, 0.0);
        const long ext = extended();
        const long rows = grid.dim() == 2 ? ext : 1;
        for (long e2 = 0; e2 < rows; ++e2) {
            for (long e1 = 0; e1 < ext; ++e1) {
                buf[static_cast<std::size_t>(e1 + fft0 * e2)] = extended_value(u, e1 - pad, rows > 1 ? e2 - pad : 0);
            }
        }
        fftw_execute_dft_r2c(forward, buf.get(), spec.get());
        for (std::size_t q = 0; q < complex_size; ++q) {
            std::complex<double> a(spec[q][0], spec[q][1]);
            std::complex<double> b(kernel_hat[q][0], kernel_hat[q][1]);
            std::complex<double> c = a * b;
            spec[q][0] = c.real();
            spec[q][1] = c.imag();
        }
        fftw_execute_dft_c2r(backward, spec.get(), buf.get());

        const double norm = 1.0 / static_cast<double>(real_size);
        const long shift = pad + reach;
        std::vector<double> out(grid.size());
        if (grid.dim() == 1) {
            for (long i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = buf[static_cast<std::size_t>(i + shift)] * norm;
        } else {
            for (long i2 = 0; i2 < n; ++i2) {
                for (long i1 = 0; i1 < n; ++i1) {
                    out[grid.flat(i1, i2)] = buf[static_cast<std::size_t>((i1 + shift) + fft0 * (i2 + shift))] * norm;
                }
            }
        }
        return out;
    }
};

Convolver::Convolver(const KernelSpec& k, const Grid& grid) : Convolver(k, grid, Options{}) {}
Convolver::Convolver(const KernelSpec& k, const Grid& grid, Options opts)
    : impl_(std::make_unique<Impl>(k, grid, opts)) {}
Convolver::~Convolver() = default;
Convolver::Convolver(Convolver&&) noexcept = default;
Convolver& Convolver::operator=(Convolver&&) noexcept = default;

std::vector<double> Convolver::apply(std::span<const double> u, ConvBackend backend) const {
    if (u.size() != impl_->grid.size()) throw Error(ErrorCode::DimMismatch, "field length does not match convolver grid");
    if (impl_->weight_sum == 0.0) return std::vector<double>(u.size(), 0.0);
    return backend == ConvBackend::Direct ? impl_->direct(u) : impl_->fast(u);
}

Field Convolver::apply(const Field& u, ConvBackend backend) const {
    if (!(u.grid() == impl_->grid)) throw Error(ErrorCode::DimMismatch, "field grid differs from convolver grid");
    return {u.grid(), apply(u.values(), backend), u.time()};
}

const Grid& Convolver::grid() const { return impl_->grid; }
int Convolver::pad_points() const { return static_cast<int>(impl_->pad); }
double Convolver::weight_sum() const { return impl_->weight_sum; }
double Convolver::mass_outside_pad() const { return impl_->mass_outside; }

Field convolve(const KernelSpec& k, const Field& u, ConvBackend backend) {
    return Convolver(k, u.grid()).apply(u, backend);
}

void write_field_csv(const std::filesystem::path& path, const Field& u) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
    const Grid& g = u.grid();
    out << (g.dim() == 2 ? "x,y,value\n" : "x,value\n");
    for (std::size_t i = 0; i < u.size(); ++i) {
        Point p = g.point(i);
        out << fmt12(p[0]) << ',';
        if (g.dim() == 2) out << fmt12(p[1]) << ',';
        out << fmt12(u[i]) << '\n';
    }
    if (!out) throw Error(ErrorCode::IoFailure, "failed writing " + path.string());
}

void write_space_time_csv(const std::filesystem::path& dir, const SpaceTimeField& u, int stride) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + dir.string());
    std::ofstream index(dir / "index.csv");
    if (!index) throw Error(ErrorCode::IoFailure, "cannot write index in " + dir.string());
    index << "level,time,file\n";
    stride = std::max(stride, 1);
    const std::size_t last = u.num_levels() - 1;
    for (std::size_t k = 0; k <= last; ++k) {
        if (k % static_cast<std::size_t>(stride) != 0 && k != last) continue;
        char name[32];
        std::snprintf(name, sizeof name, "level_%05zu.csv", k);
        write_field_csv(dir / name, u.level(k));
        index << k << ',' << fmt12(u.times()[k]) << ',' << name << '\n';
    }
}

} // namespace nlc
