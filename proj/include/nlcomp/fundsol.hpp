#pragma once

#include "nlcomp/grid.hpp"
#include "nlcomp/kernels.hpp"
#include "nlcomp/operator.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace nlc {

/// a = D I, constant drift b and zeroth-order coefficient c.
struct ConstCoeffParams {
    double diffusion = 1.0;
    Vector2 drift{0.0, 0.0};
    double reaction = 0.0;
    int dim = 1;

    /// Throws CONFIG_ERROR unless D > 0 and dim is 1 or 2.
    void validate() const;
};

/// (4 pi D s)^(-n/2) exp(-|x - xi + b s|^2 / (4 D s)) exp(c s), s = t - tau.
/// Throws TIME_ORDER if t <= tau.
double gamma_eval(const ConstCoeffParams& p, const Point& x, double t, const Point& xi, double tau);
double log_gamma(const ConstCoeffParams& p, const Point& x, double t, const Point& xi, double tau);
/// Gradient in x.
Vector2 gamma_gradient(const ConstCoeffParams& p, const Point& x, double t, const Point& xi, double tau);

/// Adjoint solution, defined by Gamma*(x, t; xi, tau) = Gamma(xi, tau; x, t).
/// Throws TIME_ORDER if t >= tau.
double gamma_adjoint_eval(const ConstCoeffParams& p, const Point& x, double t, const Point& xi, double tau);

/// Central-difference residuals D lap + b.grad + c - d/dt of Gamma in (x, t), and
/// D lap - b.grad + c + d/dt of Gamma* in (x, t).
double gamma_residual(const ConstCoeffParams& p, const Point& x, double t, const Point& xi, double tau, double step = 1e-4);
double gamma_adjoint_residual(const ConstCoeffParams& p, const Point& x, double t, const Point& xi, double tau,
                              double step = 1e-4);

/// Trapezoid value of the integral of Gamma(x, t; ., tau) over a window holding
/// all but ~1e-30 of its mass.
double gamma_mass(const ConstCoeffParams& p, const Point& x, double t, double tau, int points_per_width = 16);

/// |integral Gamma(x,t;z,s) Gamma(z,s;xi,tau) dz - Gamma(x,t;xi,tau)| relative to Gamma(x,t;xi,tau).
double chapman_kolmogorov_defect(const ConstCoeffParams& p, const Point& x, double t, double s, const Point& xi,
                                 double tau, int points_per_width = 16);

enum class TestFunction { Constant, Cosine, Bump };
TestFunction test_function_from_string(const std::string& name);
std::string to_string(TestFunction f);
double eval_test_function(TestFunction f, const Point& x, int dim);

struct DeltaFamilyRow {
    double t = 0.0;
    double max_deviation = 0.0;
};

struct DeltaFamilyReport {
    std::vector<DeltaFamilyRow> rows;
    double spatial_step = 0.0;
    bool strictly_decreasing = false;
    bool below_tolerance = false;
};

/// Deviation of the trapezoid value of integral Gamma(x,t;xi,0) f(xi) dxi from f(x).
/// spatial_step <= 0 picks a tenth of the smallest kernel width.
/// Throws QUADRATURE_UNDERRESOLVED if the width at the smallest t is below 3 steps.
DeltaFamilyReport delta_family_check(const ConstCoeffParams& p, TestFunction f, const std::vector<Point>& x_samples,
                                     const std::vector<double>& t_sequence, double spatial_step = 0.0,
                                     double tol = 1e-2);

/// Admissible constants for value and gradient Gaussian bounds over 0 < t - tau <= T.
struct GammaBoundFit {
    double kappa = 0.0;
    double lambda = 0.0;
    double horizon = 0.0;
    std::size_t samples = 0;
    double max_ratio_value = 0.0;
    double max_ratio_gradient = 0.0;
    double min_gamma = 0.0;
    /// Worst sample as (x - xi, t - tau).
    Point worst_offset{0.0, 0.0};
    double worst_lag = 0.0;
    bool pass = false;

    /// Throws CONFIG_ERROR unless kappa > 0 and 0 < lambda < a_min.
    static GammaBoundFit make(double kappa, double lambda, double a_min, double horizon);
};

/// lambda = fraction min(D, 1/D); kappa from completing the square in the drift
/// term and maximizing the gradient prefactor, times a safety factor.
GammaBoundFit derive_bound_constants(const ConstCoeffParams& p, double horizon, double lambda_fraction = 0.9,
                                     double safety = 1.05);

/// Checks both bounds at `samples` random (x - xi, t - tau) with t - tau in [1e-4, T],
/// log-uniform in the lag.  Ratios are computed in log space.
GammaBoundFit gaussian_bound_check(const ConstCoeffParams& p, const GammaBoundFit& fit, std::size_t samples = 10000,
                                   std::uint64_t seed = 20240601);

struct RepresentationRow {
    Point x{0.0, 0.0};
    double t = 0.0;
    double lhs = 0.0;
    double rhs = 0.0;
};

struct RepresentationReport {
    std::vector<RepresentationRow> rows;
    double split = 0.0;
    double tolerance = 0.0;
    /// min over samples of lhs - rhs.
    double min_slack = 0.0;
    /// max over samples of |lhs - rhs| / max(|lhs|, |rhs|).
    double max_relative_gap = 0.0;
    bool pass = false;
};

struct RepresentationConfig {
    /// Time split below the sample time; <= 0 selects 1e-4 T.
    double split = 0.0;
    /// Allowed shortfall, relative to max(1, sup |w|).
    double tolerance = 1e-3;
};

/// w(x, t) >= int Gamma*(y, 0; x, t) w(y, 0) dy + int int Gamma*(y, s; x, t) (c w + d Jw)(y, s) dy ds,
/// with Gamma* for D lap + b.grad (no zeroth-order term), c and d given per level.
/// Trapezoid in space plus analytic far-field tails in one dimension, midpoint in time.
/// Sample times must be stored levels.
RepresentationReport integral_representation_check(const ConstCoeffParams& p, const KernelSpec& kernel,
                                                   const SpaceTimeField& c, const SpaceTimeField& d,
                                                   const SpaceTimeField& w, const std::vector<Witness>& samples,
                                                   const RepresentationConfig& cfg = {});

/// Same with c and d sampled from a linear operator with constant diffusion and drift.
RepresentationReport integral_representation_check(const OperatorSpec& op, const SpaceTimeField& w,
                                                   const std::vector<Witness>& samples,
                                                   const RepresentationConfig& cfg = {});

/// Difference of an ordered pair transformed so both linearized coefficients are nonnegative.
struct TransformedPair {
    /// w = (u_up - u_low) e^{k t}
    SpaceTimeField w;
    /// c + k and d from the difference quotients, per level.
    SpaceTimeField c;
    SpaceTimeField d;
    double k = 0.0;
    double c_sup = 0.0;
    double d_sup = 0.0;
    /// Largest identity residual of the factorization over all levels.
    double identity_residual = 0.0;
};

/// Throws CONFIG_ERROR for linear operators or mismatched fields.
TransformedPair transform_pair(const OperatorSpec& op, const SpaceTimeField& u_low, const SpaceTimeField& u_up);

/// sup over the grid of max(-w, 0) at each level.
std::vector<double> negative_part_series(const SpaceTimeField& w);

/// kappa (|c|_inf + |d|_inf |phi|_1) (2 sqrt(pi) / sqrt(lambda))^n.
double gronwall_constant(double kappa, double lambda, double c_sup, double d_sup, double kernel_l1, int dim);

enum class GronwallStatus { Holds, PremiseFailed, ConclusionFailed };
std::string to_string(GronwallStatus s);

struct GronwallVerdict {
    GronwallStatus status = GronwallStatus::PremiseFailed;
    /// First index violating the premise (or the conclusion).
    std::optional<std::size_t> first_violation;
    bool premise_holds = false;
    bool initial_small = false;
    /// max of psi_i - C int_0^{t_i} psi - tol.
    double max_premise_excess = 0.0;
    /// max of psi_i / bound_i where bound_i is the discrete Groenwall bound.
    double max_conclusion_ratio = 0.0;
};

/// Premise psi_i <= C trapz(psi, 0..t_i) + tol at every level.  When it holds and
/// psi_0 <= tol, asserts psi_i <= tol prod_j (1 + C h_j / 2) / (1 - C h_j / 2),
/// the trapezoid form of tol e^{C t_i}.
GronwallVerdict discrete_gronwall(const std::vector<double>& times, const std::vector<double>& psi, double C,
                                  double tol = 1e-10);

} // namespace nlc
