#pragma once

#include <Eigen/Core>

namespace diffkit {

// A batch of points in sample space, labelled with the timestep they
// inhabit (0 = data, T = terminal noise level).
struct StateBatch {
    Eigen::MatrixXd data; // (batch, d)
    int t = 0;

    Eigen::Index batch() const { return data.rows(); }
    int dim() const { return static_cast<int>(data.cols()); }

    // Throws std::invalid_argument on non-finite entries or empty shape.
    void validate() const;
};

// Isotropic Gaussian: covariance is var * I.
struct GaussianParams {
    Eigen::MatrixXd mean; // (batch, d)
    double var = 0.0;
};

// Row-wise log density of x under the isotropic Gaussian. Requires var > 0.
Eigen::VectorXd log_density(const GaussianParams& params, const Eigen::MatrixXd& x);

} // namespace diffkit
