#include "metapop/colonization.hpp"

#include <cmath>
#include <stdexcept>

namespace metapop {

ColonizationFunction ColonizationFunction::linear() {
    ColonizationFunction c;
    c.kind = "linear";
    c.f = [](double x) { return x; };
    c.fprime = [](double) { return 1.0; };
    c.L_f = 1.0;
    c.C1 = 0.0;  // x >= x - 0 x^2 exactly
    return c;
}

ColonizationFunction ColonizationFunction::saturating() {
    ColonizationFunction c;
    c.kind = "saturating";
    c.f = [](double x) { return x / (1.0 + x); };
    c.fprime = [](double x) { return 1.0 / ((1.0 + x) * (1.0 + x)); };
    c.L_f = 1.0;
    c.C1 = 1.0;  // x/(1+x) = x - x^2/(1+x) >= x - x^2
    return c;
}

ColonizationFunction ColonizationFunction::exponential() {
    ColonizationFunction c;
    c.kind = "exponential";
    c.f = [](double x) { return -std::expm1(-x); };
    c.fprime = [](double x) { return std::exp(-x); };
    c.L_f = 1.0;
    c.C1 = 0.5;  // 1 - e^{-x} >= x - x^2/2
    return c;
}

void ColonizationFunction::validate(double x_max, int n) const {
    if (std::abs(f(0.0)) > 1e-14)
        throw std::invalid_argument("colonization: f(0) must be 0");
    if (!(L_f > 0))
        throw std::invalid_argument("colonization: requires f'(0) > 0 (L_f positive)");
    double prev = 0.0;
    for (int i = 1; i <= n; ++i) {
        double x = x_max * i / n;
        double v = f(x);
        if (v < prev - 1e-12)
            throw std::invalid_argument("colonization: f must be nondecreasing");
        if (v < L_f * x - C1 * x * x - 1e-12)
            throw std::invalid_argument("colonization: curvature constant C1 is too small");
        prev = v;
    }
    for (int i = 0; i + 2 <= n; i += 2) {
        double x = x_max * i / n, y = x_max * (i + 2) / n;
        if (f(0.5 * (x + y)) < 0.5 * (f(x) + f(y)) - 1e-12)
            throw std::invalid_argument("colonization: f must be concave");
    }
}

double solve_equilibrium_root(const ColonizationFunction& fn, double tau, double nu, double tol) {
    if (!(nu > 0)) throw std::invalid_argument("solve_equilibrium_root: nu must be positive");
    if (tau < 0) throw std::invalid_argument("solve_equilibrium_root: tau must be nonnegative");
    if (fn.L_f * tau <= nu) return 0.0;

    auto g = [&](double x) {
        double v = fn.f(tau * x);
        return v / (nu + v) - x;
    };

    double q_lin = 1.0 - nu / (fn.L_f * tau);
    double lo = std::min(0.5 * q_lin, 1e-6);
    while (g(lo) <= 0.0) {
        lo *= 0.5;
        if (lo < 1e-300) return 0.0;
    }
    double hi = 1.0;  // g(1) < 0 since F(1) < 1 for nu > 0
    while (hi - lo > tol) {
        double mid = 0.5 * (lo + hi);
        if (g(mid) > 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace metapop
