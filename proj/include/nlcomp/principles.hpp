#pragma once

#include "nlcomp/grid.hpp"
#include "nlcomp/kernels.hpp"
#include "nlcomp/operator.hpp"
#include "nlcomp/solver.hpp"

#include <optional>
#include <string>
#include <vector>

namespace nlc {

struct PrincipleTolerances {
    /// Residual sign checks, relative to the field scale.
    double residual = 1e-6;
    /// Boundary ordering and sign checks, relative to max(1, field scale).
    double ordering = 1e-8;
    /// Conclusion checks, relative to max(1, field scale).
    double conclusion = 1e-8;
    /// Coefficient bound checks (c <= C, 0 <= d <= D), absolute.
    double coefficient = 1e-12;
};

enum class Applicability { TheoremApplies, HypothesesFail };
std::string to_string(Applicability a);

/// Hypothesis audit plus the conclusion check.  Conclusion margin is signed
/// slack; on failure the witness carries (x*, t*) and `gap` the violation size.
struct ComparisonVerdict {
    std::string principle;
    std::vector<Condition> hypotheses;
    Condition conclusion;
    double gap = 0.0;
    Applicability applicability = Applicability::HypothesesFail;
    /// Conclusion violated although every hypothesis passed.
    bool internal_inconsistency = false;
    /// Notes on sampling choices, e.g. how the box K was formed.
    std::vector<std::string> notes;

    const Condition* find(const std::string& id) const;
};

/// Hypotheses: nonpositive residual, nonnegative parabolic boundary, growth of a
/// and b, c <= C, 0 <= d <= D, finite second moment, kernel sign and mass.
/// Conclusion: min u >= -tol.
ComparisonVerdict verify_weak_minimum(const OperatorSpec& op, const SpaceTimeField& u, const PrincipleTolerances& tol = {});

struct StrongMinimumVerdict {
    bool applicable = false;
    /// u(., 0) vanishes to tolerance, so the claim is u == 0.
    bool zero_data = false;
    bool pass = false;
    double probe_time = 0.0;
    double inner_min = 0.0;
    Witness min_at;
    std::string note;
};

/// Either u == 0 or u > tol_strict on the inner `inner_fraction` of the window
/// at the first stored level with time >= t_probe.
StrongMinimumVerdict strong_minimum_check(const OperatorSpec& op, const SpaceTimeField& u, double t_probe,
                                          double inner_fraction = 0.5, double tol_strict = 0.0,
                                          const PrincipleTolerances& tol = {});

struct AuxiliaryTransform {
    /// Rate used, and the value the closed formula gives.
    double nu = 0.0;
    double nu_formula = 0.0;
    /// Number of doublings applied to the formula value before the check passed.
    int doublings = 0;
    std::vector<double> times;
    /// theta(x) = 1 / (|x|^2 + 1).
    std::vector<double> theta;
    /// Transformed drift and zeroth-order coefficient, one vector per time.
    std::vector<std::vector<Vector2>> b_bar;
    std::vector<std::vector<double>> c_bar;
    /// theta(x) sum_y phi(x - y) / theta(y) h^n.
    std::vector<double> jh_quotient;
    /// max over grid and times of c_bar + d jh_quotient.
    double max_transformed_one = 0.0;
    Witness max_at;

    bool formula_sufficient() const { return doublings == 0; }
};

/// Builds the transform and checks c_bar + d jh < 0 everywhere.  Doubles nu at most
/// `max_doublings` times; throws NU_INSUFFICIENT when that does not suffice and
/// CONFIG_ERROR when growth constants are undeclared or the operator is not linear.
AuxiliaryTransform auxiliary_transform(const OperatorSpec& op, const Grid& grid, const std::vector<double>& times = {0.0},
                                       int max_doublings = 20);

/// Closed formula C + 2B + 2nA + 3D(|phi|_1 + |psi|_1) + 1.
double auxiliary_rate(const OperatorSpec& op);

enum class ComparisonRegime {
    /// Growth-bounded coefficients and a kernel with finite second moment.
    SecondMoment,
    /// Bounded regular coefficients, kernel merely integrable.
    FundamentalSolution
};
std::string to_string(ComparisonRegime r);

/// Box K from grid extrema of u and Ju of both fields, widened by the far-field
/// limits of u and |phi|_1 times them.
ReactionBox comparison_box(const OperatorSpec& op, const SpaceTimeField& u_low, const SpaceTimeField& u_up);

ComparisonVerdict verify_comparison(const OperatorSpec& op, const SpaceTimeField& u_low, const SpaceTimeField& u_up,
                                    ComparisonRegime regime, const PrincipleTolerances& tol = {});

/// 1 on x < 0, 1 - (6x^5 - 15x^4 + 10x^3) on [0, 1], 0 on x > 1.
double counterexample_profile(double x);

struct CounterexampleConfig {
    double diffusion = 0.1;
    KernelSpec kernel = KernelSpec::box(1.0, 0.5);
    /// Support half-width the kernel must cover.
    double class_halfwidth = 1.0;
    double halfwidth = 40.0;
    int points = 2048;
    double dt = 1e-3;
    double T = 1.0;
    double delta = 1e-3;
    Scheme scheme = Scheme::BackwardEuler;
    bool truncation_monitor = true;
    /// Extra step sizes for the forward-difference refinement (single-step solves).
    std::vector<double> refinement_dts;
    /// Tolerance for the logistic control.
    double control_tol = 1e-8;
};

struct ForwardDifferenceRow {
    double dt = 0.0;
    double value = 0.0;
    /// |value - predictor| / predictor.
    double relative_error = 0.0;
};

struct CounterexampleReport {
    double ju0_at_origin = 0.0;
    /// 1 - Ju0(0) from adaptive quadrature.
    double predictor = 0.0;
    double forward_difference = 0.0;
    bool forward_positive = false;
    bool within_20_percent = false;
    std::vector<ForwardDifferenceRow> refinement;
    bool exceedance = false;
    std::optional<double> t_star;
    std::optional<double> x_star;
    double max_u = 0.0;
    Witness max_at;
    double control_max_u = 0.0;
    bool control_ok = false;
    std::optional<double> truncation_discrepancy;
    /// Audit of the pair (solution, 1) under the second-moment comparison.
    ComparisonVerdict verdict;
    std::optional<SpaceTimeField> solution;

    /// The violation is reproduced: positive forward difference, exceedance,
    /// passing control, and the comparison audit failing only on monotonicity.
    bool reproduced() const;
};

/// Throws CONFIG_ERROR when the kernel is outside the counterexample class or D <= 0.
CounterexampleReport reproduce_counterexample(const CounterexampleConfig& cfg);

enum class InitialProfile { SmoothstepFront, Zero, One };
InitialProfile initial_profile_from_string(const std::string& name);
std::string to_string(InitialProfile p);

struct InvariantRegionConfig {
    double diffusion = 1.0;
    KernelSpec kernel = KernelSpec::gaussian(1.0);
    double halfwidth = 40.0;
    int points = 1024;
    double dt = 1e-2;
    double T = 2.0;
    double tol = 1e-6;
    InitialProfile initial = InitialProfile::SmoothstepFront;
    /// Front position and width of the smoothstep profile.
    double front_position = 0.0;
    double front_width = 2.0;
    Scheme scheme = Scheme::BackwardEuler;
};

struct InvariantRegionReport {
    double clipped_min = 0.0, clipped_max = 0.0;
    double source_min = 0.0, source_max = 0.0;
    Witness clipped_min_at, clipped_max_at, source_min_at, source_max_at;
    /// max |u_clipped - u_source| over all levels.
    double max_difference = 0.0;
    Witness difference_at;
    bool bounds_hold = false;
    bool solutions_agree = false;
    std::optional<SpaceTimeField> clipped;
    std::optional<SpaceTimeField> source;

    bool pass() const { return bounds_hold && solutions_agree; }
};

/// Throws CONFIG_ERROR unless 0 <= u0 <= 1 and the kernel is nonnegative and integrable.
InvariantRegionReport invariant_region_check(const InvariantRegionConfig& cfg);

/// Grid point achieving the extremum of a space-time field.
struct Extremum {
    double value = 0.0;
    Witness at;
};
Extremum field_min(const SpaceTimeField& u);
Extremum field_max(const SpaceTimeField& u);

} // namespace nlc
