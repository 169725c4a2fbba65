#pragma once

#include <memory>
#include <optional>

#include "metapop/colonization.hpp"
#include "metapop/domain.hpp"
#include "metapop/fields.hpp"
#include "metapop/types.hpp"

namespace metapop {

struct QuadratureSpec {
    int radial = 64;     // radial Gauss-Legendre points for ball integrals
    int angular = 64;    // azimuthal points (d >= 2)
    int volume = 128;    // per-axis points for the habitat volume integral
    double grid_factor = 8.0;  // default grid spacing is r / grid_factor
};

// Habitat geometry plus the model coefficient fields and kernel.
// `area` is A = integral of sigma over the domain, computed at construction.
struct Landscape {
    Domain domain;
    ScalarField extinction;  // e
    ScalarField emigration;  // a
    ScalarField density;     // sigma
    Kernel kernel;
    double r = 0;            // dispersal radius
    QuadratureSpec quad;
    double area = 0;
    std::optional<double> declared_rho_lipschitz;

    int dim() const { return domain.dim(); }
    double default_grid_step() const { return r / quad.grid_factor; }
};

Landscape make_landscape(Domain domain, ScalarField e, ScalarField a, ScalarField sigma,
                         Kernel kernel, double r, QuadratureSpec quad = {},
                         std::optional<double> declared_rho_lipschitz = std::nullopt);

// Checks the declared field bounds and Lipschitz constants on a dense grid,
// and the kernel support convention. Throws with the offending name.
void validate_landscape(const Landscape& L, double grid_step = -1);

// Local colonization intensity rho(z) = int_Omega a(y) c(z,y;r) sigma(y) dy,
// evaluated by a product rule over the dispersal ball clipped to the domain.
// Throws std::domain_error if z lies outside the domain.
double rho(const Landscape& L, const Position& z);

// Max over interior grid pairs of |rho(z)-rho(z')| / |z-z'|. The grid covers
// the region at distance >= r from the boundary, where rho is free of
// clipping transients; boundary behaviour is not part of the estimate.
double estimate_L_rho(const Landscape& L, double grid_step);

// min over a grid of region of q_1(z) (or q_alpha via the alpha argument).
double eta(const Landscape& L, const ColonizationFunction& f, const Region& region,
           double grid_step = -1, double alpha = 1.0);

// min over a grid of region of int_0^1 c_z(u) u^d du.
double c_bar(const Landscape& L, const Region& region, double grid_step = -1);

// Upper estimate of the number of balls of the given radius needed to cover
// the domain: greedy max-coverage over a grid of pitch radius/sqrt(d) when
// the grid is small, otherwise a cell-counting bound. Never below the true
// covering number by construction of the candidate covers it returns.
int covering_number(const Landscape& L, double radius);

// A^{-1} * int over the domain of 1(|y-z| <= radius) sigma(y) dy, minimized
// over a grid of z in the domain.
double min_local_mass(const Landscape& L, double radius, double grid_step = -1);

struct RSmoothExponent {
    double grid_value;      // n * min_z A^{-1} int 1(|y-z| <= r/3) sigma dy
    double analytic_value;  // c_d sigma_min n r^d / A
    double c_d;
};

// Both forms of the exponent controlling the covering term. Requires an
// r-smooth domain (union of balls with radii >= r; a 1-D box qualifies).
RSmoothExponent r_smooth_exponent(const Landscape& L, int n);

// Geometric constant c_d: the smallest volume of B_z(r/3) intersected with an
// r-smooth domain, divided by r^d. The minimizing configuration is a point on
// the boundary of a ball of radius exactly r, so c_d is the lens volume of
// balls with radii r/3 and r whose centers are r apart.
double r_smooth_constant(int d);

struct LandscapeConstants {
    double rho_max;      // a_max c_max sigma_max v_d
    double L_rho;        // declared or grid-estimated
    bool L_rho_estimated;
    double L_q;          // (sqrt(d)/e_min) (2 L_f L_rho + L_e)
    double C2;           // 1 / (3 c_max^2 sigma_max v_d)
    double C3;           // v_d c_max (a_max L_sigma + sigma_max L_a)
    double v_d;
    double v_dminus1;
};

LandscapeConstants landscape_constants(const Landscape& L, const ColonizationFunction& f);

}  // namespace metapop
