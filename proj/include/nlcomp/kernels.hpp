#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace nlc {

/// Spatial point; only the first `dim` components are meaningful.
using Point = std::array<double, 2>;

inline double norm2(const Point& x, int dim) {
    return dim == 2 ? x[0] * x[0] + x[1] * x[1] : x[0] * x[0];
}

class Grid;

enum class KernelFamily { Gaussian, Box, Triangle, Exponential, Cauchy, Tabulated };

std::string to_string(KernelFamily family);

/// Samples on a uniform grid, linearly interpolated, zero outside [x0, x0 + (m-1) dx].
/// In two dimensions the abscissa is the radius.
struct TabulatedProfile {
    double x0 = 0.0;
    double dx = 1.0;
    std::vector<double> values;

    double upper() const { return x0 + dx * static_cast<double>(values.size() - 1); }
    double operator()(double x) const;
};

/// A non-local kernel phi.  Closed families are normalized to unit mass in their
/// dimension, except `box` which carries an explicit height.  Two-dimensional
/// kernels are radial profiles.
class KernelSpec {
public:
    static KernelSpec gaussian(double sigma, int dim = 1);
    static KernelSpec box(double halfwidth, double height, int dim = 1);
    static KernelSpec triangle(double halfwidth, int dim = 1);
    static KernelSpec exponential(double rate, int dim = 1);
    static KernelSpec cauchy(double scale, int dim = 1);
    static KernelSpec tabulated(TabulatedProfile profile, int dim = 1);
    /// Two-column text (x, phi(x)); `#` starts a comment.  Abscissae must be uniform.
    static KernelSpec from_file(const std::filesystem::path& path, int dim = 1);
    /// Identically zero kernel (an all-zero table).
    static KernelSpec zero(int dim = 1);

    KernelFamily family() const { return family_; }
    int dim() const { return dim_; }
    /// Shape parameter: sigma, halfwidth, rate or scale depending on the family.
    double parameter() const { return param_; }
    double height() const { return height_; }
    const TabulatedProfile& table() const { return table_; }

    /// Value at signed coordinate (1D) or radius (2D).
    double profile(double s) const;
    double operator()(const Point& x) const;

    std::string describe() const;

    friend bool operator==(const KernelSpec&, const KernelSpec&) = default;

private:
    KernelSpec(KernelFamily family, int dim, double param, double height);

    KernelFamily family_ = KernelFamily::Gaussian;
    int dim_ = 1;
    double param_ = 1.0;
    double height_ = 1.0;
    TabulatedProfile table_;
};

double eval_kernel(const KernelSpec& k, const Point& x);

struct QuadratureConfig {
    double first_cutoff = 10.0;
    double cutoff_growth = 3.0;
    int max_cutoffs = 14;
    /// Relative increment below which partial integrals count as converged;
    /// zero selects 1e-8 for closed families and 1e-4 for tabulated ones.
    double rel_tol = 0.0;
    /// Increment above which a step counts toward divergence.
    double divergence_increment = 0.01;
    int divergence_streak = 2;

    double tolerance_for(const KernelSpec& k) const;
};

struct MomentReport {
    double l1_norm = 0.0;
    /// Empty means DIVERGENT.
    std::optional<double> second_moment;
    /// (cutoff radius, partial second moment) pairs backing a DIVERGENT verdict,
    /// or the convergence trail when the quadrature route was used.
    std::vector<std::pair<double, double>> evidence;
    bool is_even = true;
    /// Empty means UNBOUNDED.
    std::optional<double> support_halfwidth;
    bool normalized = false;
    bool analytic = false;
    double min_sample = 0.0;

    bool divergent() const { return !second_moment.has_value(); }
};

/// Integral of phi(x)|x|^order over |x| <= radius.
double partial_moment(const KernelSpec& k, double radius, int order);
/// Mass of phi outside the ball of the given radius.
double tail_mass(const KernelSpec& k, double radius);
/// Smallest radius whose complement carries at most `fraction` of the mass
/// (infinity if none below 1e12).
double mass_radius(const KernelSpec& k, double fraction);
/// Smallest sampled value of phi (tabulated kernels) or the height (box).
double min_kernel_sample(const KernelSpec& k);

MomentReport kernel_norms(const KernelSpec& k, const QuadratureConfig& cfg = {});

struct Check {
    std::string id;
    bool pass = false;
    double measured = 0.0;
};

struct AdmissibilityCertificate {
    Check l1_nonnegative;          ///< phi in L1 and phi >= 0
    Check second_moment_finite;    ///< qualifies for the auxiliary-function principles
    Check fundamental_solution;    ///< qualifies for the fundamental-solution comparison
    Check counterexample_class;    ///< even, normalized, support contains [-k, k]
    MomentReport moments;

    std::array<const Check*, 4> checks() const {
        return {&l1_nonnegative, &second_moment_finite, &fundamental_solution, &counterexample_class};
    }
};

/// Never throws NEGATIVE_KERNEL: a sign violation is reported as a failed first check.
AdmissibilityCertificate classify_kernel(const KernelSpec& k, double class_halfwidth = 1.0,
                                         const QuadratureConfig& cfg = {});

/// Throws NEGATIVE_KERNEL if the kernel fails the sign check.
void require_nonnegative(const KernelSpec& k, double tol = 0.0);

struct JQuotientCheck {
    double bound = 0.0;
    double measured_max = 0.0;
    double argmax = 0.0;
    bool pass = false;
};

/// theta(x) * sum_y phi(x - y) / theta(y) h^n at every grid point, summed over the
/// window extended by the kernel's 1e-12 mass radius.
std::vector<double> jquotient_field(const KernelSpec& k, const Grid& grid);

/// max_x theta(x) * sum_y phi(x - y) / theta(y) h^n against 3 (|phi|_1 + |psi|_1),
/// with theta(x) = 1 / (|x|^2 + 1).
JQuotientCheck jquotient_bound_check(const KernelSpec& k, const Grid& grid, double tol = 1e-6);

} // namespace nlc
