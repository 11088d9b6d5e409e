#pragma once

#include <Eigen/Core>

namespace diffkit {

// Spherical linear interpolation between nonzero vectors:
//   sin((1-alpha) theta)/sin(theta) * a + sin(alpha theta)/sin(theta) * b,
// theta the angle between a and b. Falls back to linear interpolation when
// sin(theta) < 1e-7 (near-parallel or antipodal inputs).
Eigen::RowVectorXd slerp(const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b, double alpha);

} // namespace diffkit
