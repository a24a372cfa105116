#pragma once

#include "nlcomp/kernels.hpp"

#include <cstddef>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace nlc {

/// Constant values used to extend a field beyond the window.  Axis 0 uses
/// left/right, axis 1 bottom/top.
struct FarField {
    double left = 0.0;
    double right = 0.0;
    double bottom = 0.0;
    double top = 0.0;

    double max_abs() const;
    friend bool operator==(const FarField&, const FarField&) = default;
};

/// Uniform truncation [-L, L]^n of R^n with N points per axis.  Flat index is
/// i + N * j with i along axis 0.
class Grid {
public:
    Grid(int dim, double halfwidth, int points, FarField far_field = {});

    int dim() const { return dim_; }
    double halfwidth() const { return halfwidth_; }
    int points() const { return points_; }
    double spacing() const { return spacing_; }
    double cell_volume() const { return dim_ == 2 ? spacing_ * spacing_ : spacing_; }
    std::size_t size() const;
    const FarField& far_field() const { return far_field_; }

    double coord(long i) const { return -halfwidth_ + static_cast<double>(i) * spacing_; }
    Point point(std::size_t flat) const;
    std::size_t flat(long i, long j = 0) const { return static_cast<std::size_t>(i + points_ * j); }
    bool on_face(std::size_t flat) const;
    /// Far-field value for a lattice index outside the window.
    double far_value(long i, long j = 0) const;

    Grid with_far_field(FarField ff) const { return {dim_, halfwidth_, points_, ff}; }

    friend bool operator==(const Grid&, const Grid&) = default;

private:
    int dim_;
    double halfwidth_;
    int points_;
    double spacing_;
    FarField far_field_;
};

class Field {
public:
    Field(Grid grid, std::vector<double> values, double time = 0.0);

    const Grid& grid() const { return grid_; }
    std::span<const double> values() const { return values_; }
    std::vector<double>& mutable_values() { return values_; }
    double operator[](std::size_t i) const { return values_[i]; }
    double time() const { return time_; }
    std::size_t size() const { return values_.size(); }

    double max_abs() const;
    double min() const;
    double max() const;
    /// Linear (1D) or bilinear (2D) interpolation inside the window.
    double interpolate(const Point& x) const;

private:
    Grid grid_;
    std::vector<double> values_;
    double time_;
};

using PointFunction = std::function<double(const Point&, double)>;

/// values[i] = fn(x_i, t); throws NON_FINITE_SAMPLE.
Field discretize(const Grid& grid, const PointFunction& fn, double t = 0.0);

enum class Scheme { BackwardEuler, CrankNicolson };

std::string to_string(Scheme scheme);

struct SolverMetadata {
    bool from_solver = false;
    double dt = 0.0;
    Scheme scheme = Scheme::BackwardEuler;
    int store_every = 1;
    std::vector<double> residual_history;
    std::optional<double> truncation_discrepancy;

    double theta() const { return scheme == Scheme::CrankNicolson ? 0.5 : 1.0; }
};

/// Fields on one grid at strictly increasing times.
class SpaceTimeField {
public:
    SpaceTimeField(Grid grid, std::vector<double> times, std::vector<std::vector<double>> levels,
                   SolverMetadata meta = {});

    const Grid& grid() const { return grid_; }
    std::size_t num_levels() const { return times_.size(); }
    const std::vector<double>& times() const { return times_; }
    std::span<const double> level_values(std::size_t k) const { return levels_[k]; }
    Field level(std::size_t k) const { return {grid_, levels_[k], times_[k]}; }
    const SolverMetadata& meta() const { return meta_; }
    SolverMetadata& meta() { return meta_; }

    double min() const;
    double max() const;
    double max_abs() const;

    /// Same grid and times, values produced by `fn(level, flat index, value)`.
    SpaceTimeField map(const std::function<double(std::size_t, std::size_t, double)>& fn) const;
    /// Constant-in-space-and-time field at the given times.
    static SpaceTimeField constant(const Grid& grid, const std::vector<double>& times, double value);

private:
    Grid grid_;
    std::vector<double> times_;
    std::vector<std::vector<double>> levels_;
    SolverMetadata meta_;
};

struct ParabolicBoundary {
    Field initial;
    std::vector<double> times;
    /// Face values per level with t > 0, in flat-index order.
    std::vector<std::vector<double>> traces;

    double min() const;
};

ParabolicBoundary parabolic_boundary(const SpaceTimeField& u);

enum class ConvBackend { Direct, Fast };

/// Lattice form of Ju on one grid: Ju(x_i) = sum_j w(x_i - y_j) u~(y_j), where u~ is
/// u extended by the far-field constants over a pad around the window and the
/// weights are phi(m h) h^n rescaled so their sum equals the continuous mass of phi
/// over the lattice's reach.
class Convolver {
public:
    struct Options {
        /// Tail fraction defining the pad radius.
        double pad_mass_fraction = 1e-12;
        /// Kernel mass allowed outside the pad relative to |phi|_1.
        double pad_tolerance = 1e-6;
        /// Upper bound on pad points per side, as a multiple of N.
        int max_pad_factor = 16;
    };

    Convolver(const KernelSpec& k, const Grid& grid);
    Convolver(const KernelSpec& k, const Grid& grid, Options opts);
    ~Convolver();
    Convolver(Convolver&&) noexcept;
    Convolver& operator=(Convolver&&) noexcept;

    std::vector<double> apply(std::span<const double> u, ConvBackend backend = ConvBackend::Fast) const;
    Field apply(const Field& u, ConvBackend backend = ConvBackend::Fast) const;

    const Grid& grid() const;
    int pad_points() const;
    /// Sum of the lattice weights.
    double weight_sum() const;
    /// Continuous kernel mass beyond the pad radius; zero when the far field vanishes.
    double mass_outside_pad() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Throws DIM_MISMATCH or PAD_INSUFFICIENT.
Field convolve(const KernelSpec& k, const Field& u, ConvBackend backend = ConvBackend::Fast);

/// Columns x[,y],value at 12 significant digits.
void write_field_csv(const std::filesystem::path& path, const Field& u);
/// One CSV per stored level (every `stride`-th plus the last) and an index.csv.
void write_space_time_csv(const std::filesystem::path& dir, const SpaceTimeField& u, int stride = 1);

} // namespace nlc
