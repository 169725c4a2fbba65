#pragma once

#include <Eigen/Dense>

namespace metapop {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Position = Eigen::RowVectorXd;   // a point in R^d, d in {1,2,3}
using IntVector = Eigen::VectorXi;

inline constexpr double kPi = 3.14159265358979323846;

// Volume of the d-dimensional unit ball (v_0 = 1 by convention).
inline double unit_ball_volume(int d) {
    switch (d) {
        case 0: return 1.0;
        case 1: return 2.0;
        case 2: return kPi;
        case 3: return 4.0 * kPi / 3.0;
        default: return 0.0;
    }
}

}  // namespace metapop
