#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "metapop/landscape.hpp"
#include "oracles.hpp"

using namespace metapop;

namespace {

Position pos1(double x) {
    Position p(1);
    p << x;
    return p;
}

Position pos2(double x, double y) {
    Position p(2);
    p << x, y;
    return p;
}

Landscape flat_square(double r, double c0 = 1.0) {
    Domain dom = Domain::box(pos2(0, 0), pos2(1, 1));
    return make_landscape(dom, ScalarField::constant(0.2), ScalarField::constant(1.0),
                          ScalarField::constant(1.0), Kernel::uniform(c0), r, {}, 0.0);
}

}  // namespace

TEST_CASE("rho on a constant landscape equals the full or clipped ball mass") {
    Landscape L = flat_square(0.2);
    // interior: a=1, sigma=1, c=1 on [0,1): integral is v_2 = pi
    CHECK(rho(L, pos2(0.5, 0.5)) == doctest::Approx(kPi).epsilon(1e-12));
    // on a straight edge, symmetry halves the ball
    CHECK(rho(L, pos2(0.0, 0.5)) == doctest::Approx(kPi / 2).epsilon(1e-9));
    // outside the habitat: domain error
    CHECK_THROWS_AS(rho(L, pos2(-0.1, 0.5)), std::domain_error);
}

TEST_CASE("rho with linearly varying density matches the high-resolution oracle") {
    Domain dom = Domain::box(pos2(0, 0), pos2(1, 1));
    BoundingBox bb = dom.bounding_box();
    Landscape L = make_landscape(dom, ScalarField::constant(0.2), ScalarField::constant(1.0),
                                 ScalarField::affine(1.0, pos2(0.1, 0.0), bb),
                                 Kernel::quartic(1.0), 0.2);
    Position z = pos2(0.5, 0.6);  // interior: dispersal ball clear of the boundary
    double got = rho(L, z);
    // odd term cancels over the ball, so the exact value is sigma(z) * 2 pi * int c(u) u du
    double exact = (1.0 + 0.1 * 0.5) * 2.0 * kPi * (1.0 / 6.0);
    CHECK(got == doctest::Approx(exact).epsilon(1e-12));
    double oracle = oracles::rho_oracle(L, z);  // >= 1e6-node tensor midpoint rule
    CHECK(std::abs(got - oracle) < 1e-8);
}

TEST_CASE("rho never exceeds rho_max on a grid") {
    Domain dom = Domain::box(pos2(0, 0), pos2(1, 1));
    BoundingBox bb = dom.bounding_box();
    Landscape L = make_landscape(dom, ScalarField::constant(0.2),
                                 ScalarField::affine(1.0, pos2(0.2, 0.1), bb),
                                 ScalarField::bump(0.5, 0.8, pos2(0.5, 0.5), 0.3),
                                 Kernel::triangle(2.0), 0.15);
    ColonizationFunction f = ColonizationFunction::saturating();
    LandscapeConstants k = landscape_constants(L, f);
    for (const auto& z : grid_points(bb.lo, bb.hi, 0.1))
        CHECK(rho(L, z) <= k.rho_max * (1 + 1e-12));
}

TEST_CASE("estimate_L_rho vanishes for a constant landscape") {
    Landscape L = flat_square(0.1);
    CHECK(estimate_L_rho(L, 0.02) <= 1e-8);
    CHECK_THROWS(estimate_L_rho(L, 0.05));  // grid_step must stay below r/4
}

TEST_CASE("estimate_L_rho tracks the interior gradient of rho") {
    Domain dom = Domain::box(pos2(0, 0), pos2(1, 1));
    BoundingBox bb = dom.bounding_box();
    Landscape L = make_landscape(dom, ScalarField::constant(0.2), ScalarField::constant(1.0),
                                 ScalarField::affine(1.0, pos2(0.1, 0.0), bb),
                                 Kernel::quartic(1.0), 0.15);
    double est = estimate_L_rho(L, 0.03);
    // rho(z) = (1 + 0.1 z1) * pi/3 in the interior; finite differences of the
    // midpoint-rule oracle provide the reference slope.
    Position za = pos2(0.45, 0.5), zb = pos2(0.55, 0.5);
    double fd = std::abs(oracles::rho_oracle(L, zb) - oracles::rho_oracle(L, za)) / 0.1;
    CHECK(est == doctest::Approx(fd).epsilon(0.10));

    // refinement never loses more than 10%
    double est_fine = estimate_L_rho(L, 0.015);
    CHECK(est_fine >= est * 0.9);
}

TEST_CASE("rho is Lipschitz on the interior grid with the declared constant") {
    Domain dom = Domain::box(pos2(0, 0), pos2(1, 1));
    BoundingBox bb = dom.bounding_box();
    Landscape L = make_landscape(dom, ScalarField::constant(0.2), ScalarField::constant(1.0),
                                 ScalarField::affine(1.0, pos2(0.1, 0.0), bb),
                                 Kernel::quartic(1.0), 0.15, {}, 0.1047198);
    double est = estimate_L_rho(L, 0.02);
    CHECK(est <= *L.declared_rho_lipschitz + 1e-6);
}

TEST_CASE("eta: closed form, extinct regime, and fine-grid consistency") {
    ColonizationFunction lin = ColonizationFunction::linear();

    // constant landscape tuned so rho = 0.8 exactly: q1 = 1 - e/rho = 0.75
    Domain dom = Domain::box(pos2(0, 0), pos2(1, 1));
    double c0 = 0.8 / kPi;
    Landscape L = make_landscape(dom, ScalarField::constant(0.2), ScalarField::constant(1.0),
                                 ScalarField::constant(1.0), Kernel::uniform(c0), 0.1, {}, 0.0);
    Region inner = Region::ball(pos2(0.5, 0.5), 0.3);  // clear of boundary clipping
    CHECK(eta(L, lin, inner) == doctest::Approx(0.75).epsilon(1e-9));

    // f'(0) rho <= e everywhere: the zero solution is the only one
    Landscape dead = make_landscape(dom, ScalarField::constant(0.9), ScalarField::constant(1.0),
                                    ScalarField::constant(1.0), Kernel::uniform(c0), 0.1, {}, 0.0);
    CHECK(eta(dead, lin, Region::whole_domain()) == 0.0);

    // spatially varying e: coarse grid min within L_q * diameter of a 10x finer one
    BoundingBox bb = dom.bounding_box();
    Landscape vary = make_landscape(dom, ScalarField::affine(0.15, pos2(0.1, 0.0), bb),
                                    ScalarField::constant(1.0), ScalarField::constant(1.0),
                                    Kernel::uniform(c0), 0.1, {}, 0.0);
    double coarse_h = 0.05;
    double coarse = eta(vary, lin, inner, coarse_h);
    double fine = eta(vary, lin, inner, coarse_h / 10.0);
    LandscapeConstants k = landscape_constants(vary, lin);
    CHECK(std::abs(coarse - fine) <= k.L_q * coarse_h * std::sqrt(2.0) + 1e-12);
    CHECK(coarse >= fine - 1e-12);  // a finer grid can only lower the minimum
}

TEST_CASE("c_bar: moment integrals of the kernel profiles") {
    Landscape L = flat_square(0.1);
    Region whole = Region::whole_domain();
    CHECK(c_bar(L, whole) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

    Domain dom = Domain::box(pos2(0, 0), pos2(1, 1));
    Landscape Ltri = make_landscape(dom, ScalarField::constant(0.2), ScalarField::constant(1.0),
                                    ScalarField::constant(1.0), Kernel::triangle(1.0), 0.1);
    CHECK(c_bar(Ltri, whole) == doctest::Approx(1.0 / 12.0).epsilon(1e-12));

    // position-dependent profile: (1-u)^(1+z1), moment 2/((g+1)(g+2)(g+3)),
    // minimized at the largest exponent (z1 = 1 -> g = 2 -> 1/30)
    Landscape Lpow = make_landscape(dom, ScalarField::constant(0.2), ScalarField::constant(1.0),
                                    ScalarField::constant(1.0),
                                    Kernel::power_affine(1.0, 1.0, pos2(1.0, 0.0)), 0.1);
    CHECK(c_bar(Lpow, whole, 0.02) == doctest::Approx(1.0 / 30.0).epsilon(1e-6));
}

TEST_CASE("covering_number: single-ball cases and lattice cross-check") {
    // a ball of radius t is covered by one ball of radius 2t
    Matrix c(1, 2);
    c << 0.5, 0.5;
    Domain ball = Domain::ball_union(c, Vector::Constant(1, 0.3));
    Landscape Lball = make_landscape(ball, ScalarField::constant(0.2), ScalarField::constant(1.0),
                                     ScalarField::constant(1.0), Kernel::uniform(1.0), 0.05);
    CHECK(covering_number(Lball, 0.6) == 1);

    // the unit square is inscribed in a unit ball
    Landscape Lsq = flat_square(0.05);
    CHECK(covering_number(Lsq, 1.0) == 1);

    // radius 0.1: upper estimate within a factor 4 of the packing lower bound
    int upper = covering_number(Lsq, 0.1);
    int lower = oracles::packing_lower_bound(Lsq, 0.1, 0.25);
    CHECK(upper >= lower);
    CHECK(upper <= 4 * lower);
}

TEST_CASE("r_smooth_exponent: interior mass, boundary factor, analytic bound") {
    // big ball: away from the boundary the local mass is the full small ball
    Matrix c(1, 2);
    c << 0.5, 0.5;
    Domain ball = Domain::ball_union(c, Vector::Constant(1, 0.45));
    Landscape L = make_landscape(ball, ScalarField::constant(0.2), ScalarField::constant(1.0),
                                 ScalarField::constant(1.0), Kernel::uniform(1.0), 0.06);
    int n = 1000;
    double full_ball_mass = kPi * std::pow(0.06 / 3.0, 2) / L.area;

    RSmoothExponent ex = r_smooth_exponent(L, n);
    CHECK(ex.grid_value >= ex.analytic_value * (1 - 1e-9));
    CHECK(ex.grid_value <= n * full_ball_mass * (1 + 1e-9));

    // the worst case sits on the rim: a 1-D endpoint is a true half-space
    // tangent, where the local mass is exactly half the interior value
    Position lo1(1), hi1(1);
    lo1 << 0.0;
    hi1 << 1.0;
    Landscape L1 = make_landscape(Domain::box(lo1, hi1), ScalarField::constant(0.2),
                                  ScalarField::constant(1.0), ScalarField::constant(1.0),
                                  Kernel::uniform(1.0), 0.06);
    double interior1 = 2.0 * (0.06 / 3.0);  // both sides
    CHECK(min_local_mass(L1, 0.02, 0.01) ==
          doctest::Approx(0.5 * interior1 / L1.area).epsilon(1e-9));

    // union of two overlapping balls: grid value still dominates the bound
    Matrix centers(2, 2);
    centers << 0.35, 0.5, 0.65, 0.5;
    Vector radii(2);
    radii << 0.3, 0.3;
    Domain uni = Domain::ball_union(centers, radii);
    Landscape L2 = make_landscape(uni, ScalarField::constant(0.2), ScalarField::constant(1.0),
                                  ScalarField::constant(1.0), Kernel::uniform(1.0), 0.06);
    RSmoothExponent ex2 = r_smooth_exponent(L2, n);
    CHECK(ex2.grid_value >= ex2.analytic_value * (1 - 1e-9));

    // not r-smooth: a 2-D box
    Landscape Lsq = flat_square(0.06);
    CHECK_THROWS(r_smooth_exponent(Lsq, n));
}

TEST_CASE("rho in three dimensions integrates the full ball") {
    Position lo(3), hi(3);
    lo << 0, 0, 0;
    hi << 1, 1, 1;
    QuadratureSpec quad;
    quad.radial = 24;
    quad.angular = 24;
    quad.volume = 24;
    Landscape L = make_landscape(Domain::box(lo, hi), ScalarField::constant(0.2),
                                 ScalarField::constant(1.0), ScalarField::constant(1.0),
                                 Kernel::uniform(1.0), 0.2, quad, 0.0);
    Position z(3);
    z << 0.5, 0.5, 0.5;
    CHECK(rho(L, z) == doctest::Approx(4.0 * kPi / 3.0).epsilon(1e-10));
    // triangular profile: 4 pi c0 int (1-u) u^2 du = pi/3
    Landscape Lt = make_landscape(Domain::box(lo, hi), ScalarField::constant(0.2),
                                  ScalarField::constant(1.0), ScalarField::constant(1.0),
                                  Kernel::triangle(1.0), 0.2, quad, 0.0);
    CHECK(rho(Lt, z) == doctest::Approx(kPi / 3.0).epsilon(1e-10));
}

TEST_CASE("r_smooth geometric constant matches the closed-form lens volumes") {
    CHECK(r_smooth_constant(1) == doctest::Approx(1.0 / 3.0));
    CHECK(r_smooth_constant(2) == doctest::Approx(0.16215264244220084).epsilon(1e-12));
    CHECK(r_smooth_constant(3) == doctest::Approx(0.06787391535533503).epsilon(1e-12));
}

TEST_CASE("landscape validation catches declared-bound violations") {
    Landscape L = flat_square(0.1);
    CHECK_NOTHROW(validate_landscape(L, 0.05));

    Domain dom = Domain::box(pos2(0, 0), pos2(1, 1));
    ScalarField bad = ScalarField::constant(0.2);
    bad.upper = 0.1;  // declared bounds now exclude the actual value
    Landscape Lbad = make_landscape(dom, bad, ScalarField::constant(1.0),
                                    ScalarField::constant(1.0), Kernel::uniform(1.0), 0.1);
    CHECK_THROWS_AS(validate_landscape(Lbad, 0.05), std::invalid_argument);
}

TEST_CASE("q1 is Lipschitz on the viable interior with constant at most L_q") {
    Domain dom = Domain::box(pos1(0.0), pos1(1.0));
    BoundingBox bb = dom.bounding_box();
    Landscape L = make_landscape(dom, ScalarField::affine(0.06, pos1(0.02), bb),
                                 ScalarField::constant(1.0), ScalarField::constant(1.0),
                                 Kernel::uniform(0.1), 0.02, {}, 0.0);
    ColonizationFunction f = ColonizationFunction::saturating();
    LandscapeConstants k = landscape_constants(L, f);
    double h = 0.005;
    double prev_q = -1, prev_z = 0;
    for (double z = 0.1; z <= 0.9; z += h) {
        double q = solve_equilibrium_root(f, rho(L, pos1(z)), L.extinction(pos1(z)));
        if (prev_q > 0 && q > 0)
            CHECK(std::abs(q - prev_q) <= k.L_q * (z - prev_z) * (1 + 1e-6) + 1e-9);
        prev_q = q;
        prev_z = z;
    }
}
