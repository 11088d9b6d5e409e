#include "diffkit/gaussian_process.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace diffkit {

namespace {

void require_same_shape(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const char* what) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw std::invalid_argument(std::string(what) + ": shape mismatch");
}

// 1 - a_to - sigma^2, with a few ulps of slack at the boundary so that
// policies computed from the closed forms do not trip the guard.
double direction_radicand(double alpha_to, double sigma) {
    const double rad = 1.0 - alpha_to - sigma * sigma;
    const double slack = 64.0 * std::numeric_limits<double>::epsilon() *
                         (1.0 - alpha_to + sigma * sigma);
    if (rad < -slack)
        throw std::domain_error("sigma^2 exceeds 1 - alpha_to (negative radicand)");
    return rad < 0.0 ? 0.0 : rad;
}

} // namespace

StateBatch forward_marginal_sample(const NoiseSchedule& schedule, const StateBatch& x0, int t,
                                   const Eigen::MatrixXd& noise) {
    if (x0.t != 0)
        throw std::invalid_argument("forward_marginal_sample: x0 must sit at t = 0");
    require_same_shape(x0.data, noise, "forward_marginal_sample");
    const double a = schedule.alpha(t);
    StateBatch out;
    out.data = std::sqrt(a) * x0.data + std::sqrt(1.0 - a) * noise;
    out.t = t;
    return out;
}

ReverseMeanCoeffs reverse_mean_coeffs(const NoiseSchedule& schedule, int t_from, int t_to,
                                      double sigma) {
    if (!(t_to >= 1 && t_to < t_from && t_from <= schedule.T()))
        throw std::invalid_argument("reverse conditional: require 1 <= t_to < t_from <= T");
    if (sigma < 0.0) throw std::invalid_argument("reverse conditional: sigma must be >= 0");
    const double a_from = schedule.alpha(t_from);
    const double a_to = schedule.alpha(t_to);
    const double c = std::sqrt(direction_radicand(a_to, sigma)) / std::sqrt(1.0 - a_from);
    return ReverseMeanCoeffs{c, std::sqrt(a_to) - c * std::sqrt(a_from)};
}

GaussianParams reverse_conditional_params(const NoiseSchedule& schedule, const StateBatch& x_t,
                                          const StateBatch& x0, int t_from, int t_to,
                                          double sigma) {
    require_same_shape(x_t.data, x0.data, "reverse_conditional_params");
    const ReverseMeanCoeffs k = reverse_mean_coeffs(schedule, t_from, t_to, sigma);
    GaussianParams out;
    out.mean = k.xt_coeff * x_t.data + k.x0_coeff * x0.data;
    out.var = sigma * sigma;
    return out;
}

GaussianParams ddpm_posterior_params(const NoiseSchedule& schedule, const StateBatch& x_t,
                                     const StateBatch& x0, int t) {
    if (t < 1 || t > schedule.T())
        throw std::invalid_argument("ddpm_posterior_params: t out of [1, T]");
    require_same_shape(x_t.data, x0.data, "ddpm_posterior_params");
    const double a_prev = schedule.alpha(t - 1);
    const double a = schedule.alpha(t);
    const Stepwise sw = stepwise(schedule, t);
    const double x0_coeff = std::sqrt(a_prev) * sw.beta / (1.0 - a);
    const double xt_coeff = std::sqrt(sw.alpha_step) * (1.0 - a_prev) / (1.0 - a);
    GaussianParams out;
    out.mean = x0_coeff * x0.data + xt_coeff * x_t.data;
    out.var = (1.0 - a_prev) / (1.0 - a) * sw.beta;
    return out;
}

double sigma_ddpm(const NoiseSchedule& schedule, int t) {
    if (t < 1 || t > schedule.T())
        throw std::invalid_argument("sigma_ddpm: t out of [1, T]");
    const double a_prev = schedule.alpha(t - 1);
    const double a = schedule.alpha(t);
    return std::sqrt((1.0 - a_prev) / (1.0 - a)) * std::sqrt(1.0 - a / a_prev);
}

GaussianParams bayes_forward_params(const NoiseSchedule& schedule, const StateBatch& x_prev,
                                    const StateBatch& x0, int t, double sigma) {
    if (t < 2 || t > schedule.T())
        throw std::invalid_argument("bayes_forward_params: t out of [2, T]");
    if (!(sigma > 0.0))
        throw std::domain_error(
            "bayes_forward_params: sigma = 0 kernel is degenerate (x_t is fixed given "
            "x_{t-1}, x_0)");
    require_same_shape(x_prev.data, x0.data, "bayes_forward_params");

    // Completing the square in x_t of
    //   log q(x_{t-1}|x_t,x_0) + log q(x_t|x_0) - log q(x_{t-1}|x_0).
    const double a = schedule.alpha(t);
    const ReverseMeanCoeffs k = reverse_mean_coeffs(schedule, t, t - 1, sigma);
    const double var_rev = sigma * sigma;
    const double var_marg = 1.0 - a;
    const double precision = k.xt_coeff * k.xt_coeff / var_rev + 1.0 / var_marg;
    const double var_fwd = 1.0 / precision;

    GaussianParams out;
    out.mean = var_fwd * ((k.xt_coeff / var_rev) * (x_prev.data - k.x0_coeff * x0.data) +
                          (std::sqrt(a) / var_marg) * x0.data);
    out.var = var_fwd;
    return out;
}

} // namespace diffkit
