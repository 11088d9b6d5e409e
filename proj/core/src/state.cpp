#include "diffkit/state.hpp"

#include <cmath>
#include <stdexcept>

namespace diffkit {

void StateBatch::validate() const {
    if (data.rows() < 1 || data.cols() < 1)
        throw std::invalid_argument("StateBatch: empty batch");
    if (!data.allFinite())
        throw std::invalid_argument("StateBatch: non-finite entries");
}

Eigen::VectorXd log_density(const GaussianParams& params, const Eigen::MatrixXd& x) {
    if (x.rows() != params.mean.rows() || x.cols() != params.mean.cols())
        throw std::invalid_argument("log_density: shape mismatch");
    if (!(params.var > 0.0))
        throw std::domain_error("log_density: requires positive variance");
    const double d = static_cast<double>(x.cols());
    const double norm = -0.5 * d * std::log(2.0 * M_PI * params.var);
    return ((x - params.mean).rowwise().squaredNorm() * (-0.5 / params.var)).array() + norm;
}

} // namespace diffkit
