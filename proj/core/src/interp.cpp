#include "diffkit/interp.hpp"

#include <cmath>
#include <stdexcept>

namespace diffkit {

Eigen::RowVectorXd slerp(const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b, double alpha) {
    if (a.size() != b.size()) throw std::invalid_argument("slerp: size mismatch");
    const double na = a.norm();
    const double nb = b.norm();
    if (na == 0.0 || nb == 0.0) throw std::invalid_argument("slerp: zero-length input");

    const double cos_theta = std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
    const double theta = std::acos(cos_theta);
    const double sin_theta = std::sin(theta);
    if (sin_theta < 1e-7) {
        // Near-parallel or antipodal: the spherical weights are ill-posed.
        return (1.0 - alpha) * a + alpha * b;
    }
    return (std::sin((1.0 - alpha) * theta) / sin_theta) * a +
           (std::sin(alpha * theta) / sin_theta) * b;
}

} // namespace diffkit
