#pragma once

#include <functional>
#include <string>

#include "metapop/types.hpp"

namespace metapop {

// Colonization response f: increasing, concave, f(0) = 0, f'(0) > 0.
// L_f = f'(0) and C1 satisfies f(x) >= L_f x - C1 x^2 for all x >= 0.
struct ColonizationFunction {
    std::string kind;
    std::function<double(double)> f;
    std::function<double(double)> fprime;
    double L_f = 1.0;
    double C1 = 0.0;
    bool concave = true;

    double operator()(double x) const { return f(x); }

    static ColonizationFunction linear();       // f(x) = x, C1 = 0
    static ColonizationFunction saturating();   // f(x) = x/(1+x), C1 = 1
    static ColonizationFunction exponential();  // f(x) = 1 - exp(-x), C1 = 1/2

    // Grid validation of the declared properties: f(0)=0, nondecreasing,
    // midpoint concavity, and the curvature inequality. Throws on failure.
    void validate(double x_max = 4.0, int n = 400) const;
};

// Largest root in [0,1] of x = f(tau x) / (nu + f(tau x)), for tau >= 0 and
// nu > 0. Returns 0 when f'(0) tau <= nu. Bisection on the sign of
// g(x) = F(x) - x; g is concave with g(0) = 0, so the largest root is the
// unique sign change above the region where g > 0. The bracket is seeded at
// min(q_lin/2, 1e-6) with q_lin the linear-response root, refined downward
// geometrically if needed. Absolute tolerance `tol`.
double solve_equilibrium_root(const ColonizationFunction& f, double tau, double nu,
                              double tol = 1e-13);

}  // namespace metapop
