#pragma once

#include <functional>
#include <vector>

namespace ssep {

struct QuadResult {
    double value = 0;
    double error = 0;
};

using Integrand = std::function<double(double)>;

// Adaptive Gauss–Kronrod on [a, b]; throws ConvergenceError when the error
// estimate exceeds max(rel·|I|, abs_floor).
QuadResult integrate(const Integrand& f, double a, double b, double rel = 1e-10,
                     double abs_floor = 1e-14);

// Same, with the interval cut at a + h, a + 2h, a + 4h, ... so that features
// living at scale h near a are resolved before the bisection sees them.
QuadResult integrate_graded(const Integrand& f, double a, double b, double h,
                            double rel = 1e-10, double abs_floor = 1e-14);

// Composite Gauss–Legendre rule on [t_min, t_max] in the variable log t.
// Weights include the Jacobian, so sum w_i f(t_i) ≈ ∫ f dt.
struct LogRule {
    std::vector<double> t;
    std::vector<double> w;
};
LogRule log_rule(double t_min, double t_max, double panel_width, int order);

}  // namespace ssep
