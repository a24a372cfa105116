#pragma once

#include "nlcomp/grid.hpp"
#include "nlcomp/kernels.hpp"

#include <array>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace nlc {

using Matrix2 = std::array<std::array<double, 2>, 2>;
using Vector2 = std::array<double, 2>;
using ParamMap = std::map<std::string, double>;

struct Witness {
    Point x{0.0, 0.0};
    double t = 0.0;
};

/// One audited hypothesis or conclusion.  `margin` is signed slack: nonnegative
/// when the condition holds.
struct Condition {
    std::string id;
    std::string ref;
    bool pass = false;
    double margin = 0.0;
    std::optional<Witness> witness;
};

struct DiffusionCoefficients {
    std::string name;
    int dim = 1;
    std::function<Matrix2(const Point&, double)> a;
    std::function<Vector2(const Point&, double)> b;
    /// Growth constants: a <= A (1 + |x|^2), b.x <= B (1 + |x|^2).
    std::optional<double> A, B;
    /// Uniform bounds on the Rayleigh quotient of a.
    std::optional<double> A_min, A_max;
    bool time_dependent = false;
    /// Declared bounded, Hoelder continuous, with bounded derivatives, and
    /// continuously extendable to the boundary.  Not checkable on a grid.
    bool declared_regular = false;
    /// Set when a = D I and b is constant.
    std::optional<double> constant_diffusion;
    std::optional<Vector2> constant_drift;
};

DiffusionCoefficients heat_coefficients(double diffusion, int dim = 1);
DiffusionCoefficients drifted_heat_coefficients(double diffusion, Vector2 drift, int dim = 1);
/// a = D (1 + |x|^2) I: satisfies the growth bound but has no uniform upper bound.
DiffusionCoefficients unbounded_coefficients(double diffusion, int dim = 1);
/// Registry: heat{D}, drifted-heat{D, b1, b2}, unbounded-a{D}.  Throws CONFIG_ERROR.
DiffusionCoefficients make_coefficients(const std::string& name, const ParamMap& params, int dim);

/// K = [u_lo, u_hi] x [v_lo, v_hi].
struct ReactionBox {
    double u_lo = 0.0;
    double u_hi = 1.0;
    double v_lo = 0.0;
    double v_hi = 1.0;
};

using ReactionFunction = std::function<double(const Point&, double, double, double)>;

struct ReactionSpec {
    std::string name;
    /// f(x, t, u, v) with v the Ju slot.
    ReactionFunction f;
    ReactionBox box;
    std::optional<double> upper_k_u;
    std::optional<double> lipschitz_u;
    std::optional<double> lipschitz_v;
    bool monotone_in_v = false;
    bool uses_nonlocal = true;
};

/// Registry: none, fkpp-nonlocal u(1-v), fkpp-clipped max{v(1-u),0},
/// fkpp-source v(1-u), logistic-local u(1-u).  Throws CONFIG_ERROR.
ReactionSpec make_reaction(const std::string& name, const ParamMap& params = {});

/// Linear mode c u + d Ju with declared bounds c <= C and 0 <= d <= D.
struct LinearCoefficients {
    std::string name = "linear";
    std::function<double(const Point&, double)> c;
    std::function<double(const Point&, double)> d;
    double C = 0.0;
    double D = 0.0;
    /// sup |c|, used by the step-size preflight.
    double c_abs = 0.0;
};

/// c = c0 + c_amp cos(omega x1), d = d0 + d_amp cos(omega x1).
LinearCoefficients make_linear(const ParamMap& params);
LinearCoefficients constant_linear(double c, double d);

struct OperatorSpec {
    DiffusionCoefficients coeffs;
    std::variant<ReactionSpec, LinearCoefficients> term;
    KernelSpec kernel = KernelSpec::zero();

    bool is_linear() const { return std::holds_alternative<LinearCoefficients>(term); }
    const ReactionSpec& reaction() const;
    const LinearCoefficients& linear() const;
    /// Reaction value in either mode.
    double source(const Point& x, double t, double u, double v) const;
    /// Whether Ju enters the source at all.
    bool nonlocal() const;
    /// Throws DIM_MISMATCH.
    void validate() const;
};

/// Sum a_ij d_ij u + sum b_i d_i u.  Central differences at interior points,
/// one-sided second-order stencils on faces.
std::vector<double> spatial_operator(const DiffusionCoefficients& coeffs, const Grid& grid,
                                     std::span<const double> u, double t);
Field apply_spatial_L(const DiffusionCoefficients& coeffs, const Field& u);

enum class ResidualMode {
    /// Scheme when u is a solver output stored at every step, Central otherwise.
    Auto,
    /// Second-order three-point time differences.
    Central,
    /// The discrete residual of the theta-scheme the solver uses.
    Scheme
};

/// P[u] at levels 1..K-1 (times t > 0), zero on faces.
SpaceTimeField apply_P_residual(const OperatorSpec& op, const SpaceTimeField& u, ResidualMode mode = ResidualMode::Auto,
                                ConvBackend backend = ConvBackend::Fast);

struct ParabolicityReport {
    double min_quotient = 0.0;
    double max_quotient = 0.0;
    /// sup over samples of max_eta (eta^T a eta) / (1 + |x|^2).
    double needed_A = 0.0;
    /// sup over samples of (b . x) / (1 + |x|^2).
    double needed_B = 0.0;
    double max_asymmetry = 0.0;
    Witness min_at, max_at, growth_at, drift_at;
    std::size_t directions = 0;
    Condition growth_A;
    Condition growth_B;
    Condition lower_bound;
    Condition upper_bound;

    bool growth_regime_pass() const { return growth_A.pass && growth_B.pass; }
    bool bounded_regime_pass() const { return lower_bound.pass && upper_bound.pass; }
};

/// Throws ASYMMETRIC_A when |a_ij - a_ji| exceeds 1e-12 at a sample.
ParabolicityReport check_parabolicity_growth(const DiffusionCoefficients& coeffs, const Grid& grid,
                                             int direction_samples = 64, const std::vector<double>& times = {0.0});

struct ReactionConstants {
    /// Largest sampled (f(u1,v) - f(u2,v)) / (u1 - u2) with u1 > u2.
    double upper_k_u = 0.0;
    double lipschitz_u = 0.0;
    double lipschitz_v = 0.0;
    /// Smallest sampled (f(u,v1) - f(u,v2)) / (v1 - v2) with v1 > v2.
    double min_slope_v = 0.0;
    double u_at_min_slope = 0.0;
    double v_at_min_slope = 0.0;
    Witness min_slope_at;
    double max_abs_f = 0.0;
    std::size_t samples = 0;
    ReactionBox box;

    Condition upper_lipschitz_u;
    Condition lipschitz_u_check;
    Condition lipschitz_v_check;
    Condition monotone_v;
};

struct SamplingWindow {
    double halfwidth = 1.0;
    double T = 1.0;
    int dim = 1;
};

/// Deterministic Halton sampling plus box corners.  Throws NON_FINITE_REACTION.
ReactionConstants estimate_reaction_constants(const ReactionSpec& r, const ReactionBox& box, std::size_t samples = 10000,
                                              SamplingWindow window = {});
ReactionConstants estimate_reaction_constants(const ReactionSpec& r, std::size_t samples = 10000,
                                              SamplingWindow window = {});

struct Factorization {
    std::vector<double> c;
    std::vector<double> d;
    /// max |f(u_up, Ju_up) - f(u_low, Ju_low) - c (u_up - u_low) - d (Ju_up - Ju_low)|
    double identity_residual = 0.0;
};

/// Difference-quotient coefficients, zero where the denominator is below
/// 1e-14 times the field scale.
Factorization factorize_difference(const ReactionFunction& f, const Grid& grid, double t, std::span<const double> u_up,
                                   std::span<const double> ju_up, std::span<const double> u_low,
                                   std::span<const double> ju_low);
Factorization factorize_difference(const ReactionSpec& r, const Field& u_up, const Field& ju_up, const Field& u_low,
                                   const Field& ju_low);

} // namespace nlc
