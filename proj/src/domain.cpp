#include "metapop/domain.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace metapop {

Domain Domain::box(const Position& lo, const Position& hi) {
    if (lo.size() != hi.size() || lo.size() < 1 || lo.size() > 3)
        throw std::invalid_argument("Domain::box: dimension must be 1, 2 or 3");
    for (int a = 0; a < lo.size(); ++a)
        if (!(lo(a) < hi(a))) throw std::invalid_argument("Domain::box: lo must be < hi per axis");
    Domain d;
    d.kind_ = Kind::Box;
    d.dim_ = static_cast<int>(lo.size());
    d.lo_ = lo;
    d.hi_ = hi;
    return d;
}

Domain Domain::ball_union(const Matrix& centers, const Vector& radii) {
    if (centers.rows() == 0 || centers.rows() != radii.size())
        throw std::invalid_argument("Domain::ball_union: need one radius per center");
    if (centers.cols() < 1 || centers.cols() > 3)
        throw std::invalid_argument("Domain::ball_union: dimension must be 1, 2 or 3");
    for (int i = 0; i < radii.size(); ++i)
        if (!(radii(i) > 0)) throw std::invalid_argument("Domain::ball_union: radii must be positive");
    Domain d;
    d.kind_ = Kind::Balls;
    d.dim_ = static_cast<int>(centers.cols());
    d.centers_ = centers;
    d.radii_ = radii;
    return d;
}

bool Domain::contains(const Position& z) const {
    if (kind_ == Kind::Box) {
        for (int a = 0; a < dim_; ++a)
            if (z(a) < lo_(a) || z(a) > hi_(a)) return false;
        return true;
    }
    for (int i = 0; i < centers_.rows(); ++i)
        if ((z - centers_.row(i)).norm() <= radii_(i)) return true;
    return false;
}

bool Domain::intersects_cube(const Position& lo, const Position& hi) const {
    if (kind_ == Kind::Box) {
        for (int a = 0; a < dim_; ++a)
            if (hi(a) < lo_(a) || lo(a) > hi_(a)) return false;
        return true;
    }
    for (int i = 0; i < centers_.rows(); ++i) {
        double d2 = 0;
        for (int a = 0; a < dim_; ++a) {
            double c = std::clamp(centers_(i, a), lo(a), hi(a)) - centers_(i, a);
            d2 += c * c;
        }
        if (d2 <= radii_(i) * radii_(i)) return true;
    }
    return false;
}

double Domain::interior_margin(const Position& z) const {
    if (kind_ == Kind::Box) {
        double m = std::numeric_limits<double>::infinity();
        for (int a = 0; a < dim_; ++a) m = std::min({m, z(a) - lo_(a), hi_(a) - z(a)});
        return m;
    }
    double m = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < centers_.rows(); ++i)
        m = std::max(m, radii_(i) - (z - centers_.row(i)).norm());
    return m;
}

BoundingBox Domain::bounding_box() const {
    if (kind_ == Kind::Box) return {lo_, hi_};
    Position lo(dim_), hi(dim_);
    lo.setConstant(std::numeric_limits<double>::infinity());
    hi.setConstant(-std::numeric_limits<double>::infinity());
    for (int i = 0; i < centers_.rows(); ++i) {
        for (int a = 0; a < dim_; ++a) {
            lo(a) = std::min(lo(a), centers_(i, a) - radii_(i));
            hi(a) = std::max(hi(a), centers_(i, a) + radii_(i));
        }
    }
    return {lo, hi};
}

bool Domain::r_smooth(double r) const {
    if (kind_ == Kind::Balls) return radii_.minCoeff() >= r;
    if (dim_ == 1) return hi_(0) - lo_(0) >= 2.0 * r;  // a 1-D box is a ball
    return false;
}

std::vector<Position> grid_points(const Position& lo, const Position& hi, double h) {
    const int d = static_cast<int>(lo.size());
    std::vector<int> counts(d);
    long total = 1;
    for (int a = 0; a < d; ++a) {
        counts[a] = std::max(2, static_cast<int>(std::ceil((hi(a) - lo(a)) / h)) + 1);
        total *= counts[a];
    }
    std::vector<Position> pts;
    pts.reserve(total);
    std::vector<int> idx(d, 0);
    for (long k = 0; k < total; ++k) {
        Position p(d);
        long rem = k;
        for (int a = 0; a < d; ++a) {
            int i = rem % counts[a];
            rem /= counts[a];
            p(a) = lo(a) + (hi(a) - lo(a)) * i / (counts[a] - 1);
        }
        pts.push_back(p);
    }
    return pts;
}

}  // namespace metapop
