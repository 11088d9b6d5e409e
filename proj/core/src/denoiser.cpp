#include "diffkit/denoiser.hpp"

#include <cmath>
#include <stdexcept>

namespace diffkit {

void MixtureSpec::validate() const {
    if (weights.size() < 1) throw std::invalid_argument("MixtureSpec: need K >= 1");
    if (means.rows() != weights.size())
        throw std::invalid_argument("MixtureSpec: weights/means length mismatch");
    if (means.cols() < 1) throw std::invalid_argument("MixtureSpec: need d >= 1");
    if ((weights.array() < 0.0).any())
        throw std::invalid_argument("MixtureSpec: negative weight");
    if (std::abs(weights.sum() - 1.0) > 1e-12)
        throw std::invalid_argument("MixtureSpec: weights must sum to 1");
    if (component_std < 0.0)
        throw std::invalid_argument("MixtureSpec: component_std must be >= 0");
    if (!means.allFinite()) throw std::invalid_argument("MixtureSpec: non-finite mean");
}

Eigen::RowVectorXd MixtureSpec::mean() const { return weights.transpose() * means; }

Eigen::MatrixXd MixtureSpec::covariance() const {
    const Eigen::RowVectorXd mu = mean();
    const int d = dim();
    Eigen::MatrixXd cov = Eigen::MatrixXd::Identity(d, d) * (component_std * component_std);
    for (int k = 0; k < components(); ++k) {
        const Eigen::RowVectorXd delta = means.row(k) - mu;
        cov += weights(k) * delta.transpose() * delta;
    }
    return cov;
}

double MixtureSpec::data_std() const {
    return std::sqrt(covariance().trace() / dim());
}

Eigen::MatrixXd MixtureSpec::sample(Eigen::Index n, Rng& rng) const {
    const int d = dim();
    Eigen::MatrixXd out(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double u = rng.uniform();
        double acc = 0.0;
        int k = components() - 1;
        for (int c = 0; c < components(); ++c) {
            acc += weights(c);
            if (u < acc) {
                k = c;
                break;
            }
        }
        for (int j = 0; j < d; ++j)
            out(i, j) = means(k, j) + component_std * rng.normal();
    }
    return out;
}

Eigen::MatrixXd predict_x0(const NoiseSchedule& schedule, const StateBatch& x_t, int t,
                           const Eigen::MatrixXd& eps_hat) {
    if (t < 1 || t > schedule.T())
        throw std::invalid_argument("predict_x0: t out of [1, T]");
    if (x_t.data.rows() != eps_hat.rows() || x_t.data.cols() != eps_hat.cols())
        throw std::invalid_argument("predict_x0: shape mismatch");
    const double a = schedule.alpha(t);
    if (a < 1e-300) throw std::domain_error("predict_x0: alpha_t underflow");
    return (x_t.data - std::sqrt(1.0 - a) * eps_hat) / std::sqrt(a);
}

Eigen::MatrixXd mixture_posterior_mean(const MixtureSpec& spec, const NoiseSchedule& schedule,
                                       const StateBatch& x_t, int t) {
    spec.validate();
    if (t < 1 || t > schedule.T())
        throw std::invalid_argument("mixture_posterior_mean: t out of [1, T]");
    if (x_t.data.cols() != spec.dim())
        throw std::invalid_argument("mixture_posterior_mean: dimension mismatch");

    const double a = schedule.alpha(t);
    const double s2 = spec.component_std * spec.component_std;
    const double marg_var = a * s2 + (1.0 - a); // per-component variance of x_t
    const double sqrt_a = std::sqrt(a);
    const int K = spec.components();
    const int d = spec.dim();

    Eigen::MatrixXd out(x_t.data.rows(), d);
    Eigen::VectorXd logw(K);
    for (int k = 0; k < K; ++k) logw(k) = std::log(spec.weights(k) > 0 ? spec.weights(k) : 1e-300);

    Eigen::VectorXd logr(K);
    Eigen::RowVectorXd acc(d);
    for (Eigen::Index i = 0; i < x_t.data.rows(); ++i) {
        const Eigen::RowVectorXd x = x_t.data.row(i);
        for (int k = 0; k < K; ++k) {
            const double dist2 = (x - sqrt_a * spec.means.row(k)).squaredNorm();
            logr(k) = logw(k) - 0.5 * dist2 / marg_var;
        }
        const double m = logr.maxCoeff();
        double z = 0.0;
        for (int k = 0; k < K; ++k) z += std::exp(logr(k) - m);

        // Posterior mean per component: ((1-a) m_k + sqrt(a) s^2 x) / marg_var.
        acc.setZero();
        for (int k = 0; k < K; ++k) {
            const double r = std::exp(logr(k) - m) / z;
            acc += r * spec.means.row(k);
        }
        out.row(i) = ((1.0 - a) * acc + (sqrt_a * s2) * x) / marg_var;
    }
    return out;
}

Eigen::MatrixXd mixture_optimal_eps(const MixtureSpec& spec, const NoiseSchedule& schedule,
                                    const StateBatch& x_t, int t) {
    if (t < 1)
        throw std::domain_error("mixture_optimal_eps: undefined at t = 0 (1 - alpha_0 = 0)");
    const Eigen::MatrixXd post = mixture_posterior_mean(spec, schedule, x_t, t);
    const double a = schedule.alpha(t);
    return (x_t.data - std::sqrt(a) * post) / std::sqrt(1.0 - a);
}

AnalyticMixtureDenoiser::AnalyticMixtureDenoiser(MixtureSpec spec, NoiseSchedule schedule)
    : spec_(std::move(spec)), schedule_(std::move(schedule)) {
    spec_.validate();
}

Eigen::MatrixXd AnalyticMixtureDenoiser::eval(const StateBatch& x, int t) const {
    return mixture_optimal_eps(spec_, schedule_, x, t);
}

Eigen::MatrixXd ConstantDenoiser::eval(const StateBatch& x, int /*t*/) const {
    if (x.data.cols() != value_.cols())
        throw std::invalid_argument("ConstantDenoiser: dimension mismatch");
    return value_.replicate(x.data.rows(), 1);
}

double epsilon_risk(const DenoiserModel& model, const NoiseSchedule& schedule,
                    const Eigen::MatrixXd& x0, std::uint64_t seed) {
    const int T = schedule.T();
    const Eigen::Index n = x0.rows();
    const int d = static_cast<int>(x0.cols());
    NoiseStream stream(seed);
    double total = 0.0;
    Eigen::MatrixXd eps(n, d);
    for (int t = 1; t <= T; ++t) {
        Rng rng = stream.keyed(NoiseStream::Domain::Plan, t);
        rng.fill_normal(eps);
        const double a = schedule.alpha(t);
        StateBatch x_t{std::sqrt(a) * x0 + std::sqrt(1.0 - a) * eps, t};
        total += (model.eval(x_t, t) - eps).rowwise().squaredNorm().mean();
    }
    return total / T;
}

} // namespace diffkit
