#include "metapop/fields.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace metapop {

ScalarField ScalarField::constant(double v) {
    if (!(v > 0)) throw std::invalid_argument("ScalarField::constant: value must be positive");
    ScalarField f;
    f.kind = "constant";
    f.eval = [v](const Position&) { return v; };
    f.lower = f.upper = v;
    f.lipschitz = 0;
    f.params.resize(1);
    f.params << v;
    return f;
}

ScalarField ScalarField::affine(double c0, const Position& grad, const BoundingBox& bbox) {
    ScalarField f;
    f.kind = "affine";
    Position g = grad;
    f.eval = [c0, g](const Position& z) { return c0 + g.dot(z); };
    double lo = c0, hi = c0;
    for (int a = 0; a < grad.size(); ++a) {
        lo += std::min(grad(a) * bbox.lo(a), grad(a) * bbox.hi(a));
        hi += std::max(grad(a) * bbox.lo(a), grad(a) * bbox.hi(a));
    }
    if (!(lo > 0)) throw std::invalid_argument("ScalarField::affine: field must stay positive on the box");
    f.lower = lo;
    f.upper = hi;
    f.lipschitz = grad.norm();
    f.params.resize(1 + grad.size());
    f.params(0) = c0;
    for (int a = 0; a < grad.size(); ++a) f.params(1 + a) = grad(a);
    return f;
}

ScalarField ScalarField::bump(double base, double amp, const Position& center, double width) {
    if (!(base > 0) || !(width > 0))
        throw std::invalid_argument("ScalarField::bump: base and width must be positive");
    ScalarField f;
    f.kind = "bump";
    Position c = center;
    double w2 = 2.0 * width * width;
    f.eval = [base, amp, c, w2](const Position& z) {
        return base + amp * std::exp(-(z - c).squaredNorm() / w2);
    };
    f.lower = amp >= 0 ? base : base + amp;
    f.upper = amp >= 0 ? base + amp : base;
    if (!(f.lower > 0)) throw std::invalid_argument("ScalarField::bump: field must stay positive");
    // max |d/ds exp(-s^2/2w^2)| = exp(-1/2)/w at s = w
    f.lipschitz = std::abs(amp) * std::exp(-0.5) / width;
    f.params.resize(2 + center.size() + 1);
    f.params(0) = base;
    f.params(1) = amp;
    for (int a = 0; a < center.size(); ++a) f.params(2 + a) = center(a);
    f.params(2 + center.size()) = width;
    return f;
}

ScalarField ScalarField::gaussian_sum(double base, const Vector& amps, const Matrix& centers,
                                      const Vector& widths, double lo, double hi) {
    if (amps.size() != centers.rows() || amps.size() != widths.size())
        throw std::invalid_argument("ScalarField::gaussian_sum: inconsistent component counts");
    if (!(lo > 0) || !(lo < hi))
        throw std::invalid_argument("ScalarField::gaussian_sum: need 0 < lo < hi");
    ScalarField f;
    f.kind = "gaussian_sum";
    Vector a = amps, w = widths;
    Matrix c = centers;
    f.eval = [base, a, c, w, lo, hi](const Position& z) {
        double v = base;
        for (int i = 0; i < a.size(); ++i)
            v += a(i) * std::exp(-(z - c.row(i)).squaredNorm() / (2.0 * w(i) * w(i)));
        return std::clamp(v, lo, hi);
    };
    f.lower = lo;
    f.upper = hi;
    double L = 0;
    for (int i = 0; i < a.size(); ++i) L += std::abs(a(i)) * std::exp(-0.5) / w(i);
    f.lipschitz = L;  // clamping does not increase the constant
    return f;
}

ScalarField ScalarField::custom(std::function<double(const Position&)> fn, double lo, double hi,
                                double lipschitz) {
    ScalarField f;
    f.kind = "custom";
    f.eval = std::move(fn);
    f.lower = lo;
    f.upper = hi;
    f.lipschitz = lipschitz;
    return f;
}

static void check_c0(double c0) {
    if (!(c0 > 0)) throw std::invalid_argument("Kernel: c0 must be positive");
}

Kernel Kernel::uniform(double c0) {
    check_c0(c0);
    Kernel k;
    k.kind = "uniform";
    k.profile = [c0](const Position&, double) { return c0; };
    k.c_max = c0;
    k.params.resize(1);
    k.params << c0;
    return k;
}

Kernel Kernel::triangle(double c0) {
    check_c0(c0);
    Kernel k;
    k.kind = "triangle";
    k.profile = [c0](const Position&, double u) { return c0 * (1.0 - u); };
    k.c_max = c0;
    k.params.resize(1);
    k.params << c0;
    return k;
}

Kernel Kernel::quartic(double c0) {
    check_c0(c0);
    Kernel k;
    k.kind = "quartic";
    k.profile = [c0](const Position&, double u) {
        double s = 1.0 - u * u;
        return c0 * s * s;
    };
    k.c_max = c0;
    k.params.resize(1);
    k.params << c0;
    return k;
}

Kernel Kernel::cosine(double c0) {
    check_c0(c0);
    Kernel k;
    k.kind = "cosine";
    k.profile = [c0](const Position&, double u) { return 0.5 * c0 * (1.0 + std::cos(kPi * u)); };
    k.c_max = c0;
    k.params.resize(1);
    k.params << c0;
    return k;
}

Kernel Kernel::power_affine(double c0, double g0, const Position& g) {
    check_c0(c0);
    Kernel k;
    k.kind = "power_affine";
    Position gg = g;
    k.profile = [c0, g0, gg](const Position& z, double u) {
        double ex = std::max(0.1, g0 + gg.dot(z));
        return c0 * std::pow(1.0 - u, ex);
    };
    k.c_max = c0;
    k.position_dependent = true;
    k.params.resize(2 + g.size());
    k.params(0) = c0;
    k.params(1) = g0;
    for (int a = 0; a < g.size(); ++a) k.params(2 + a) = g(a);
    return k;
}

}  // namespace metapop
