#pragma once

#include <functional>
#include <vector>

#include "metapop/types.hpp"

namespace metapop {

// Gauss-Legendre nodes and weights on [-1,1].
struct GaussRule {
    Vector nodes;
    Vector weights;
};

const GaussRule& gauss_legendre(int n);  // cached per n

// Product rule for integrals over the ball B(center, radius) in d dimensions,
// d in {1,2,3}. Radial direction uses Gauss-Legendre (so the kernel support
// [0, r] is resolved exactly); angles use a trapezoid rule in the azimuth and
// Gauss-Legendre in cos(polar) for d = 3. Node count is roughly
// radial * angular^(d-1).
struct BallRule {
    Matrix points;        // k x d
    Vector weights;       // k
    Vector radial_frac;   // |y - center| / radius at each node (exact)
};

BallRule ball_rule(const Position& center, double radius, int radial, int angular);

// Tensor Gauss-Legendre rule over an axis-aligned box, pts_per_axis^d nodes.
struct BoxRule {
    Matrix points;
    Vector weights;
};

BoxRule box_rule(const Position& lo, const Position& hi, int pts_per_axis);

// 1-D Gauss-Legendre integral of g over [a,b].
double integrate_1d(const std::function<double(double)>& g, double a, double b, int n);

}  // namespace metapop
