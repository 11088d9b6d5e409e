#include "diffkit/ode.hpp"

#include <cmath>
#include <stdexcept>

namespace diffkit {

namespace {

double checked_alpha(const NoiseSchedule& schedule, int t) {
    const double a = schedule.alpha(t);
    if (a < 1e-300) throw std::domain_error("ode: alpha underflow");
    return a;
}

} // namespace

double sigma_level(const NoiseSchedule& schedule, int t) {
    const double a = checked_alpha(schedule, t);
    return std::sqrt((1.0 - a) / a);
}

OdeState to_ode_state(const NoiseSchedule& schedule, const StateBatch& x) {
    const double a = checked_alpha(schedule, x.t);
    return OdeState{x.data / std::sqrt(a), sigma_level(schedule, x.t)};
}

StateBatch from_ode_state(const NoiseSchedule& schedule, const OdeState& state, int t) {
    const double a = checked_alpha(schedule, t);
    return StateBatch{state.x_bar * std::sqrt(a), t};
}

StateBatch ddim_euler_step(const NoiseSchedule& schedule, const StateBatch& x, int t_from,
                           int t_to, const DenoiserModel& model, int t_eval) {
    if (x.t != t_from) throw std::invalid_argument("ddim_euler_step: x.t must equal t_from");
    if (t_from == t_to) throw std::invalid_argument("ddim_euler_step: t_from == t_to");
    if (t_eval < 0) t_eval = t_from >= 1 ? t_from : t_to;

    const Eigen::MatrixXd eps_hat = model.eval(x, t_eval);
    const double a_from = checked_alpha(schedule, t_from);
    const double a_to = checked_alpha(schedule, t_to);
    const double dsigma = sigma_level(schedule, t_to) - sigma_level(schedule, t_from);

    StateBatch out;
    out.data = (x.data / std::sqrt(a_from) + dsigma * eps_hat) * std::sqrt(a_to);
    out.t = t_to;
    return out;
}

StateBatch prob_flow_euler_step(const NoiseSchedule& schedule, const StateBatch& x, int t_from,
                                int t_to, const DenoiserModel& model) {
    if (x.t != t_from)
        throw std::invalid_argument("prob_flow_euler_step: x.t must equal t_from");
    if (t_from < 1)
        throw std::domain_error("prob_flow_euler_step: requires t_from >= 1 (sigma > 0)");
    if (t_from == t_to) throw std::invalid_argument("prob_flow_euler_step: t_from == t_to");

    const Eigen::MatrixXd eps_hat = model.eval(x, t_from);
    const double a_from = checked_alpha(schedule, t_from);
    const double a_to = checked_alpha(schedule, t_to);
    const double s_from = sigma_level(schedule, t_from);
    const double s_to = sigma_level(schedule, t_to);
    const double coeff = 0.5 * (s_to * s_to - s_from * s_from) / s_from;

    StateBatch out;
    out.data = (x.data / std::sqrt(a_from) + coeff * eps_hat) * std::sqrt(a_to);
    out.t = t_to;
    return out;
}

StateBatch encode(const NoiseSchedule& schedule, const StateBatch& x0, const Trajectory& traj,
                  const DenoiserModel& model) {
    if (x0.t != 0) throw std::invalid_argument("encode: input must sit at t = 0");
    StateBatch cur = x0;
    int prev = 0;
    // Each interval [tau_{i-1}, tau_i] is paired with the model at its
    // upper timestep, mirroring the generation step over the same interval.
    for (int i = 1; i <= traj.S(); ++i) {
        const int t = traj.at(i);
        cur = ddim_euler_step(schedule, cur, prev, t, model, /*t_eval=*/t);
        prev = t;
    }
    return cur;
}

Eigen::MatrixXd score_from_eps(const NoiseSchedule& schedule, const Eigen::MatrixXd& eps_hat,
                               int t) {
    if (t < 1) throw std::domain_error("score_from_eps: requires t >= 1 (sigma > 0)");
    return -eps_hat / sigma_level(schedule, t);
}

} // namespace diffkit
