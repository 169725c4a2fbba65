#pragma once

#include <vector>

#include "metapop/types.hpp"

namespace metapop {

struct BoundingBox {
    Position lo;
    Position hi;
};

// Habitat geometry: an axis-aligned box or a finite union of closed balls.
// Membership tests are exact in both representations.
class Domain {
  public:
    enum class Kind { Box, Balls };

    static Domain box(const Position& lo, const Position& hi);
    static Domain ball_union(const Matrix& centers, const Vector& radii);

    Kind kind() const { return kind_; }
    int dim() const { return dim_; }

    bool contains(const Position& z) const;

    // Exact test of whether the axis-aligned cube [lo, hi] meets the domain.
    bool intersects_cube(const Position& lo, const Position& hi) const;

    // Lower bound on the distance from an interior point to the boundary
    // (exact for boxes; for ball unions, the best single-ball margin).
    double interior_margin(const Position& z) const;

    BoundingBox bounding_box() const;

    // True when the domain is a union of balls all of radius >= r.
    // A 1-D box of length >= 2r is a ball and qualifies.
    bool r_smooth(double r) const;

    const Matrix& ball_centers() const { return centers_; }
    const Vector& ball_radii() const { return radii_; }
    const Position& box_lo() const { return lo_; }
    const Position& box_hi() const { return hi_; }

  private:
    Kind kind_ = Kind::Box;
    int dim_ = 0;
    Position lo_, hi_;   // box
    Matrix centers_;     // balls
    Vector radii_;
};

// A query region: either the whole domain or a closed ball inside it.
struct Region {
    bool whole = true;
    Position center;
    double radius = 0;

    static Region whole_domain() { return Region{}; }
    static Region ball(const Position& c, double t) { return Region{false, c, t}; }
    bool contains(const Position& z) const {
        return whole || (z - center).norm() <= radius;
    }
};

// Axis-aligned grid of points with spacing <= h covering box [lo, hi],
// endpoints included.
std::vector<Position> grid_points(const Position& lo, const Position& hi, double h);

}  // namespace metapop
