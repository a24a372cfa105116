#pragma once

// Reference computations used only by tests.  Nothing here calls into the
// library's quadrature or convolution paths.

#include <cmath>
#include <functional>
#include <numbers>

namespace oracle {

/// Composite Simpson rule with `n` (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n = 20000) {
    if (n % 2) ++n;
    const double h = (b - a) / n;
    double s = f(a) + f(b);
    for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
    return s * h / 3.0;
}

/// Exact heat solution for Gaussian data exp(-x^2 / (2 s0^2)) in n dimensions.
inline double heat_gaussian(double r2, double s0, double diffusion, double t, int dim) {
    const double var = s0 * s0 + 2.0 * diffusion * t;
    return std::pow(s0 * s0 / var, 0.5 * dim) * std::exp(-r2 / (2.0 * var));
}

/// Quintic smoothstep front: 1 for x < 0, 0 for x > 1.
inline double smoothstep_front(double x) {
    if (x <= 0.0) return 1.0;
    if (x >= 1.0) return 0.0;
    return 1.0 - x * x * x * (10.0 - 15.0 * x + 6.0 * x * x);
}

} // namespace oracle
