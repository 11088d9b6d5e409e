#pragma once

#include <optional>
#include <string>
#include <vector>

#include "diffkit/denoiser.hpp"
#include "diffkit/rng.hpp"
#include "diffkit/schedule.hpp"
#include "diffkit/state.hpp"

namespace diffkit {

// Noise scale for transition i of the trajectory (tau_i -> tau_{i-1},
// with tau_0 := 0 and alpha_0 = 1):
//   sigma_{tau_i}(eta) = eta * sqrt((1-a_{tau_{i-1}})/(1-a_{tau_i}))
//                            * sqrt(1 - a_{tau_i}/a_{tau_{i-1}})
// eta = 0 is the deterministic sampler, eta = 1 the stochastic chain.
double sigma_eta(const NoiseSchedule& schedule, const Trajectory& traj, int i, double eta);

// Over-dispersed variant: sigma_hat_{tau_i} = sqrt(1 - a_{tau_i}/a_{tau_{i-1}}).
// Pointwise >= sigma_eta(.., 1); on the full trajectory its square equals
// the stepwise beta.
double sigma_hat(const NoiseSchedule& schedule, const Trajectory& traj, int i);

// Resolved scales for one transition. `direction` enters the
// sqrt(1 - a_to - sigma^2) coefficient; `noise` multiplies the fresh
// Gaussian draw. They differ only for the sigma_hat policy, whose noise
// scale exceeds the eta = 1 value while the direction keeps sigma(1).
struct StepSigmas {
    double noise = 0.0;
    double direction = 0.0;
};

class SigmaPolicy {
public:
    static SigmaPolicy eta(double eta);
    static SigmaPolicy sigma_hat();
    static SigmaPolicy explicit_vector(std::vector<double> sigmas); // sigmas[i-1] for transition i

    StepSigmas resolve(const NoiseSchedule& schedule, const Trajectory& traj, int i) const;

    // Checks the direction radicand 1 - a_{tau_{i-1}} - sigma_dir^2 >= 0
    // for every transition with tau_{i-1} >= 1. Throws std::invalid_argument
    // when the policy is infeasible for the trajectory.
    void validate(const NoiseSchedule& schedule, const Trajectory& traj) const;

    std::string label() const;
    bool deterministic() const; // true only for eta == 0

private:
    enum class Kind { Eta, SigmaHat, Explicit };
    Kind kind_ = Kind::Eta;
    double eta_ = 0.0;
    std::vector<double> explicit_;
};

// One generative transition x_{tau_i} -> x_{tau_{i-1}}:
//   sqrt(a_to) * predicted_x0 + sqrt(1 - a_to - sigma_dir^2) * eps_hat
//   + sigma_noise * noise
// The final transition (i == 1, tau_0 = 0) emits the predicted x_0
// directly, plus the noise term when the resolved sigma is positive.
// `noise` may be null when the resolved noise scale is zero.
StateBatch generalized_step(const NoiseSchedule& schedule, const StateBatch& x,
                            const Trajectory& traj, int i, const DenoiserModel& model,
                            const SigmaPolicy& policy, const Eigen::MatrixXd* noise);

struct RunOptions {
    bool record_intermediates = false;
    int threads = 1;
};

struct TrajectoryRun {
    StateBatch x0;
    // When recorded: states after each transition, in sampling order
    // (t = tau_{S-1}, ..., tau_1, 0).
    std::vector<StateBatch> intermediates;
};

// Applies generalized_step for i = S down to 1. The noise draw for step i
// of chain c is a pure function of (stream seed, c, tau_i), so chain
// results are independent of batch partitioning; parallel and serial runs
// agree bitwise.
TrajectoryRun run_trajectory(const NoiseSchedule& schedule, const StateBatch& x_T,
                             const Trajectory& traj, const DenoiserModel& model,
                             const SigmaPolicy& policy, const NoiseStream& stream,
                             const RunOptions& options = {});

} // namespace diffkit
