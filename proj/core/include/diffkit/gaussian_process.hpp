#pragma once

#include "diffkit/schedule.hpp"
#include "diffkit/state.hpp"

namespace diffkit {

// x_t = sqrt(alpha_t) x_0 + sqrt(1 - alpha_t) * noise. Requires x0.t == 0
// and noise shaped like x0.data; t = 0 returns x_0 unchanged.
StateBatch forward_marginal_sample(const NoiseSchedule& schedule, const StateBatch& x0,
                                   int t, const Eigen::MatrixXd& noise);

// Parameters of the reverse conditional q_sigma(x_{t_to} | x_{t_from}, x_0):
//   mean = sqrt(a_to) x_0
//        + sqrt(1 - a_to - sigma^2) * (x_t - sqrt(a_from) x_0) / sqrt(1 - a_from)
//   var  = sigma^2
// Requires 1 <= t_to < t_from <= T and sigma^2 <= 1 - a_to (the boundary is
// allowed; beyond it is a domain error, not a clamp).
GaussianParams reverse_conditional_params(const NoiseSchedule& schedule, const StateBatch& x_t,
                                          const StateBatch& x0, int t_from, int t_to,
                                          double sigma);

// Classic Markovian-chain posterior q(x_{t-1} | x_t, x_0) with variance
// beta_tilde_t = (1 - a_{t-1}) / (1 - a_t) * beta_t.
GaussianParams ddpm_posterior_params(const NoiseSchedule& schedule, const StateBatch& x_t,
                                     const StateBatch& x0, int t);

// The sigma value at which the reverse conditional reduces to the
// Markovian posterior: sqrt((1 - a_{t-1})/(1 - a_t)) * sqrt(1 - a_t/a_{t-1}).
double sigma_ddpm(const NoiseSchedule& schedule, int t);

// Forward kernel q_sigma(x_t | x_{t-1}, x_0) obtained from the density
// ratio of the reverse conditional and the two marginals. Requires t >= 2
// and sigma > 0 (the sigma = 0 kernel is degenerate).
GaussianParams bayes_forward_params(const NoiseSchedule& schedule, const StateBatch& x_prev,
                                    const StateBatch& x0, int t, double sigma);

// Affine coefficients of the reverse-conditional mean in (x_t, x_0):
// mean = xt_coeff * x_t + x0_coeff * x_0. Exposed for closed-form
// propagation checks.
struct ReverseMeanCoeffs {
    double xt_coeff;
    double x0_coeff;
};
ReverseMeanCoeffs reverse_mean_coeffs(const NoiseSchedule& schedule, int t_from, int t_to,
                                      double sigma);

} // namespace diffkit
