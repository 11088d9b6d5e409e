#include "diffkit/objective.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "diffkit/gaussian_process.hpp"

namespace diffkit {

StateBatch SamplePlan::x_at(const NoiseSchedule& schedule, int t) const {
    if (t < 1 || t > T()) throw std::invalid_argument("SamplePlan::x_at: t out of [1, T]");
    const double a = schedule.alpha(t);
    return StateBatch{std::sqrt(a) * x0 + std::sqrt(1.0 - a) * eps[static_cast<std::size_t>(t - 1)],
                      t};
}

SamplePlan SamplePlan::make(const NoiseSchedule& schedule, Eigen::MatrixXd x0,
                            std::uint64_t seed) {
    SamplePlan plan;
    plan.x0 = std::move(x0);
    plan.eps.resize(static_cast<std::size_t>(schedule.T()));
    NoiseStream stream(seed);
    for (int t = 1; t <= schedule.T(); ++t) {
        Eigen::MatrixXd e(plan.x0.rows(), plan.x0.cols());
        Rng rng = stream.keyed(NoiseStream::Domain::Plan, t);
        rng.fill_normal(e);
        plan.eps[static_cast<std::size_t>(t - 1)] = std::move(e);
    }
    return plan;
}

double l_gamma(const NoiseSchedule& schedule, const DenoiserModel& model, const SamplePlan& plan,
               const WeightVector& gamma) {
    if (plan.T() != schedule.T())
        throw std::invalid_argument("l_gamma: plan does not cover the schedule");
    if (gamma.gamma.size() != schedule.T())
        throw std::invalid_argument("l_gamma: weight vector length mismatch");
    if ((gamma.gamma.array() <= 0.0).any())
        throw std::invalid_argument("l_gamma: weights must be positive");

    double total = 0.0;
    for (int t = 1; t <= schedule.T(); ++t) {
        const StateBatch x_t = plan.x_at(schedule, t);
        const Eigen::MatrixXd eps_hat = model.eval(x_t, t);
        total += gamma.at(t) *
                 (eps_hat - plan.eps[static_cast<std::size_t>(t - 1)]).rowwise().squaredNorm().mean();
    }
    return total;
}

double objective_term(const NoiseSchedule& schedule, const DenoiserModel& model,
                      const SamplePlan& plan, int t, double sigma_t) {
    if (!(sigma_t > 0.0))
        throw std::domain_error("objective_term: sigma_t must be positive (sigma = 0 is not "
                                "covered by the equivalence)");
    const StateBatch x_t = plan.x_at(schedule, t);
    const Eigen::MatrixXd eps_hat = model.eval(x_t, t);
    const Eigen::MatrixXd f = predict_x0(schedule, x_t, t, eps_hat);

    if (t == 1) {
        return (plan.x0 - f).rowwise().squaredNorm().mean() / (2.0 * sigma_t * sigma_t);
    }
    const StateBatch x0_state{plan.x0, 0};
    const StateBatch f_state{f, 0};
    const GaussianParams q = reverse_conditional_params(schedule, x_t, x0_state, t, t - 1, sigma_t);
    const GaussianParams p = reverse_conditional_params(schedule, x_t, f_state, t, t - 1, sigma_t);
    // Equal-covariance Gaussian KL: ||mean difference||^2 / (2 sigma^2).
    return (q.mean - p.mean).rowwise().squaredNorm().mean() / (2.0 * sigma_t * sigma_t);
}

ObjectiveValue j_sigma(const NoiseSchedule& schedule, const DenoiserModel& model,
                       const SamplePlan& plan, const Eigen::VectorXd& sigma) {
    const int T = schedule.T();
    if (plan.T() != T) throw std::invalid_argument("j_sigma: plan does not cover the schedule");
    if (sigma.size() != T) throw std::invalid_argument("j_sigma: sigma vector length mismatch");
    for (int t = 1; t <= T; ++t)
        if (!(sigma(t - 1) > 0.0))
            throw std::domain_error("j_sigma: sigma_" + std::to_string(t) +
                                    " must be positive (sigma = 0 is not covered)");

    ObjectiveValue value;
    for (int t = 1; t <= T; ++t)
        value.theta_dependent += objective_term(schedule, model, plan, t, sigma(t - 1));

    // Model-independent channel: the t = 1 log-normalizer plus the prior
    // cross term E[log q(x_T | x_0) - log p(x_T)], both computable from
    // the plan.
    const double d = static_cast<double>(plan.dim());
    value.theta_independent += 0.5 * d * std::log(2.0 * M_PI * sigma(0) * sigma(0));

    const double a_T = schedule.alpha(T);
    const StateBatch x_T = plan.x_at(schedule, T);
    const Eigen::VectorXd eps_norm2 =
        plan.eps[static_cast<std::size_t>(T - 1)].rowwise().squaredNorm();
    const Eigen::VectorXd log_q = (-0.5 * eps_norm2).array() - 0.5 * d * std::log(2.0 * M_PI * (1.0 - a_T));
    const Eigen::VectorXd log_p =
        (-0.5 * x_T.data.rowwise().squaredNorm()).array() - 0.5 * d * std::log(2.0 * M_PI);
    value.theta_independent += (log_q - log_p).mean();
    return value;
}

WeightVector equivalence_gamma(const Eigen::VectorXd& sigma, const NoiseSchedule& schedule) {
    const int T = schedule.T();
    if (sigma.size() != T)
        throw std::invalid_argument("equivalence_gamma: sigma vector length mismatch");
    Eigen::VectorXd gamma(T);
    for (int t = 1; t <= T; ++t) {
        const double s = sigma(t - 1);
        if (!(s > 0.0))
            throw std::domain_error("equivalence_gamma: sigma entries must be positive");
        const double a = schedule.alpha(t);
        if (t == 1) {
            gamma(0) = (1.0 - a) / (2.0 * s * s * a);
        } else {
            const ReverseMeanCoeffs k = reverse_mean_coeffs(schedule, t, t - 1, s);
            gamma(t - 1) = k.x0_coeff * k.x0_coeff * (1.0 - a) / (2.0 * s * s * a);
        }
    }
    return WeightVector{std::move(gamma)};
}

std::vector<ObjectiveReportRow> objective_report(const NoiseSchedule& schedule,
                                                 const DenoiserModel& model,
                                                 const SamplePlan& plan,
                                                 const Eigen::VectorXd& sigma) {
    const WeightVector gamma = equivalence_gamma(sigma, schedule);
    std::vector<ObjectiveReportRow> rows;
    rows.reserve(static_cast<std::size_t>(schedule.T()));
    for (int t = 1; t <= schedule.T(); ++t) {
        const double kl = objective_term(schedule, model, plan, t, sigma(t - 1));
        const StateBatch x_t = plan.x_at(schedule, t);
        const Eigen::MatrixXd eps_hat = model.eval(x_t, t);
        const double mse =
            (eps_hat - plan.eps[static_cast<std::size_t>(t - 1)]).rowwise().squaredNorm().mean();
        const double l = gamma.at(t) * mse;
        rows.push_back(ObjectiveReportRow{t, kl, l, gamma.at(t), kl - l});
    }
    return rows;
}

} // namespace diffkit
