#pragma once

#include "diffkit/denoiser.hpp"
#include "diffkit/schedule.hpp"
#include "diffkit/state.hpp"

namespace diffkit {

// Rescaled coordinates: x_bar = x / sqrt(alpha), sigma_level = sqrt((1-alpha)/alpha).
// Bijective with (x, alpha) for alpha in (0, 1].
struct OdeState {
    Eigen::MatrixXd x_bar;
    double sigma_level = 0.0;
};

double sigma_level(const NoiseSchedule& schedule, int t);

OdeState to_ode_state(const NoiseSchedule& schedule, const StateBatch& x);
StateBatch from_ode_state(const NoiseSchedule& schedule, const OdeState& state, int t);

// Euler iterate in the rescaled coordinates:
//   x_bar(t_to) = x_bar(t_from) + (sigma(t_to) - sigma(t_from)) * eps_hat.
// Works in both directions (the sign of the sigma increment flips). The
// model is evaluated at t_eval; by default that is t_from for generation
// steps and t_to when stepping out of t = 0, where no noise level exists.
StateBatch ddim_euler_step(const NoiseSchedule& schedule, const StateBatch& x, int t_from,
                           int t_to, const DenoiserModel& model, int t_eval = -1);

// Euler iterate of the probability-flow form:
//   x_bar(t_to) = x_bar(t_from)
//               + 0.5 * (sigma(t_to)^2 - sigma(t_from)^2) / sigma(t_from) * eps_hat.
// Agrees with ddim_euler_step to second order in the sigma increment.
// Requires t_from >= 1.
StateBatch prob_flow_euler_step(const NoiseSchedule& schedule, const StateBatch& x, int t_from,
                                int t_to, const DenoiserModel& model);

// Deterministic latent encoding: integrates the Euler iterate in
// increasing-t order over the trajectory (starting from t = 0), pairing
// each interval with the model at its upper timestep. Output sits at t = T.
StateBatch encode(const NoiseSchedule& schedule, const StateBatch& x0, const Trajectory& traj,
                  const DenoiserModel& model);

// Score of the noise-perturbed density in the rescaled coordinates:
// -eps_hat / sigma(t). Requires t >= 1.
Eigen::MatrixXd score_from_eps(const NoiseSchedule& schedule, const Eigen::MatrixXd& eps_hat,
                               int t);

} // namespace diffkit
