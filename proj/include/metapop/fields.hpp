#pragma once

#include <functional>
#include <string>

#include "metapop/domain.hpp"
#include "metapop/types.hpp"

namespace metapop {

// Spatially varying model coefficient with declared bounds and Lipschitz
// constant. Bounds are required to be valid on the domain; they need not be
// tight. Built-in families carry analytic constants; custom fields declare
// their own.
struct ScalarField {
    std::string kind = "constant";
    std::function<double(const Position&)> eval;
    double lower = 0;      // declared lower bound on the domain
    double upper = 0;      // declared upper bound
    double lipschitz = 0;  // declared Lipschitz constant (units 1/distance)
    Vector params;

    double operator()(const Position& z) const { return eval(z); }

    static ScalarField constant(double v);
    // c0 + grad . z, bounds taken over the given bounding box (exact).
    static ScalarField affine(double c0, const Position& grad, const BoundingBox& bbox);
    // base + amp * exp(-|z-center|^2 / (2 w^2)); declared bounds [base, base+amp] for amp > 0.
    static ScalarField bump(double base, double amp, const Position& center, double width);
    // base + sum_i amp_i exp(-|z-c_i|^2/(2 w_i^2)), clamped into [lo, hi].
    static ScalarField gaussian_sum(double base, const Vector& amps, const Matrix& centers,
                                    const Vector& widths, double lo, double hi);
    static ScalarField custom(std::function<double(const Position&)> f, double lo, double hi,
                              double lipschitz);
};

// Radial colonization profile c_z(u): positive on [0,1), zero for u >= 1,
// bounded by c_max. The support convention is half-open, so the value at
// u = 1 is zero exactly.
struct Kernel {
    std::string kind = "uniform";
    std::function<double(const Position&, double)> profile;  // evaluated for u in [0,1)
    double c_max = 0;
    bool position_dependent = false;
    Vector params;

    double operator()(const Position& z, double u) const {
        return u >= 1.0 ? 0.0 : profile(z, u);
    }

    static Kernel uniform(double c0);
    static Kernel triangle(double c0);     // c0 (1 - u)
    static Kernel quartic(double c0);      // c0 (1 - u^2)^2
    static Kernel cosine(double c0);       // c0 (1 + cos(pi u)) / 2
    // c0 (1-u)^(g0 + g . z): position-dependent exponent, clamped to >= 0.1.
    static Kernel power_affine(double c0, double g0, const Position& g);
};

}  // namespace metapop
