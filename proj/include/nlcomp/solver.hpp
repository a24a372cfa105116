#pragma once

#include "nlcomp/grid.hpp"
#include "nlcomp/operator.hpp"

#include <optional>
#include <string>
#include <vector>

namespace nlc {

struct SolverConfig {
    double dt = 1e-3;
    double T = 1.0;
    Scheme scheme = Scheme::BackwardEuler;
    /// Re-run on a window at least twice as wide and compare on the inner half.
    bool truncation_monitor = false;
    int store_every = 1;
    ConvBackend backend = ConvBackend::Fast;
    /// Reject steps violating dt (|k_u| + k_v |phi|_1) <= 1.
    bool preflight = true;
    /// Allowed mismatch between u0 on the faces and the far field, relative to max(1, |u0|).
    double boundary_tolerance = 1e-6;
};

/// Number of uniform steps; throws CONFIG_ERROR unless T is a whole multiple of dt.
long step_count(const SolverConfig& cfg);

/// Dirichlet value imposed on a face point.
double face_value(const Grid& grid, std::size_t flat);

/// Theta-scheme IMEX march: diffusion implicit (theta = 1 or 1/2), reaction and Ju
/// explicit at the old level, faces held at the far-field constants.
/// Throws STEP_DIVERGED, SOLVER_SINGULAR, CONFIG_ERROR.
SpaceTimeField solve_ibvp(const OperatorSpec& op, const Field& u0, const SolverConfig& cfg);

/// Bound dt (|k_u| + k_v |phi|_1) used by the preflight.
double stability_number(const OperatorSpec& op, const Grid& grid, double dt);

enum class HeatFamilyKind { Gaussian, PlaneWave, PointMass };

struct HeatFamily {
    HeatFamilyKind kind = HeatFamilyKind::Gaussian;
    double sigma0 = 1.0;
    double amplitude = 1.0;
    double wavenumber = 1.0;
    /// Age of the point-mass surrogate at t = 0.
    double t0 = 0.1;
};

/// Throws UNSUPPORTED_FAMILY for names other than gaussian, plane-wave, point-mass.
HeatFamily heat_family(const std::string& name, double sigma0 = 1.0, double wavenumber = 1.0, double t0 = 0.1);

double heat_reference_value(const HeatFamily& family, double diffusion, const Point& x, double t, int dim);
Field exact_heat_reference(const HeatFamily& family, double diffusion, double t, const Grid& grid);

enum class Refinement { Simultaneous, TimeOnly };

struct ConvergenceRow {
    int points = 0;
    double h = 0.0;
    double dt = 0.0;
    double error = 0.0;
    /// log2 of the error ratio to the previous row.
    std::optional<double> order;
};

struct ConvergenceTable {
    std::vector<ConvergenceRow> rows;
    /// All errors vanish.
    bool exact = false;
    /// Least-squares slope of log error against log dt.
    std::optional<double> fitted_order;
};

/// Errors at final time against the heat oracle when given, otherwise against the
/// next finer level (Richardson self-comparison, which needs one extra solve).
ConvergenceTable convergence_study(const OperatorSpec& op, const PointFunction& u0, const Grid& coarse, SolverConfig cfg,
                                   int levels, Refinement mode, const std::optional<HeatFamily>& oracle);

} // namespace nlc
