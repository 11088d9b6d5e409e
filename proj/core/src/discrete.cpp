#include "diffkit/discrete.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace diffkit::discrete {

void CategoricalState::validate() const {
    if (probs.size() < 1) throw std::invalid_argument("CategoricalState: need K >= 1");
    if ((probs.array() < 0.0).any())
        throw std::invalid_argument("CategoricalState: negative probability");
    if (std::abs(probs.sum() - 1.0) > 1e-12)
        throw std::invalid_argument("CategoricalState: probabilities must sum to 1");
}

CategoricalState CategoricalState::one_hot(int K, int index) {
    if (index < 0 || index >= K) throw std::invalid_argument("one_hot: index out of range");
    Eigen::VectorXd p = Eigen::VectorXd::Zero(K);
    p(index) = 1.0;
    return CategoricalState{std::move(p)};
}

CategoricalState CategoricalState::uniform(int K) {
    return CategoricalState{Eigen::VectorXd::Constant(K, 1.0 / K)};
}

double DiscreteSchedule::alpha(int t) const {
    if (t < 0 || t > T()) throw std::invalid_argument("DiscreteSchedule::alpha: t out of range");
    return alphas[static_cast<std::size_t>(t)];
}

DiscreteSchedule DiscreteSchedule::from_alphas(std::vector<double> alphas) {
    if (alphas.size() < 2) throw std::invalid_argument("DiscreteSchedule: need T >= 1");
    if (alphas.front() != 1.0)
        throw std::invalid_argument("DiscreteSchedule: alpha_0 must equal 1");
    if (alphas.back() != 0.0)
        throw std::invalid_argument("DiscreteSchedule: alpha_T must equal 0");
    for (std::size_t t = 1; t < alphas.size(); ++t) {
        if (alphas[t] > alphas[t - 1])
            throw std::invalid_argument("DiscreteSchedule: alphas must be non-increasing");
        if (alphas[t] < 0.0 || alphas[t] > 1.0)
            throw std::invalid_argument("DiscreteSchedule: alphas must lie in [0, 1]");
    }
    return DiscreteSchedule{std::move(alphas)};
}

DiscreteSchedule DiscreteSchedule::linear(int T) {
    if (T < 1) throw std::invalid_argument("DiscreteSchedule::linear: T must be >= 1");
    std::vector<double> alphas(static_cast<std::size_t>(T) + 1);
    for (int t = 0; t <= T; ++t)
        alphas[static_cast<std::size_t>(t)] = 1.0 - static_cast<double>(t) / T;
    alphas.back() = 0.0;
    return from_alphas(std::move(alphas));
}

CategoricalState cat_forward_marginal(const DiscreteSchedule& schedule,
                                      const CategoricalState& x0, int t) {
    x0.validate();
    const double a = schedule.alpha(t);
    const int K = x0.K();
    CategoricalState out{a * x0.probs + Eigen::VectorXd::Constant(K, (1.0 - a) / K)};
    return out;
}

MixtureWeights reverse_mixture_weights(const DiscreteSchedule& schedule, int t, double sigma_t) {
    if (t < 1 || t > schedule.T())
        throw std::invalid_argument("reverse_mixture_weights: t out of [1, T]");
    const double a_prev = schedule.alpha(t - 1);
    const double a = schedule.alpha(t);
    const MixtureWeights w{sigma_t, a_prev - sigma_t * a, (1.0 - a_prev) - (1.0 - a) * sigma_t};
    if (w.on_xt < 0.0)
        throw std::domain_error("reverse mixture: weight on x_t is negative (sigma_t < 0)");
    if (w.on_x0 < 0.0)
        throw std::domain_error("reverse mixture: weight on x_0 is negative (sigma_t > "
                                "alpha_{t-1}/alpha_t)");
    if (w.on_uniform < 0.0)
        throw std::domain_error("reverse mixture: weight on the uniform component is negative "
                                "(sigma_t > (1-alpha_{t-1})/(1-alpha_t))");
    return w;
}

double sigma_max(const DiscreteSchedule& schedule, int t) {
    if (t < 1 || t > schedule.T()) throw std::invalid_argument("sigma_max: t out of [1, T]");
    const double a_prev = schedule.alpha(t - 1);
    const double a = schedule.alpha(t);
    const double inf = std::numeric_limits<double>::infinity();
    const double from_x0 = a > 0.0 ? a_prev / a : inf;
    const double from_uniform = a < 1.0 ? (1.0 - a_prev) / (1.0 - a) : inf;
    return std::min(from_x0, from_uniform);
}

CategoricalState cat_reverse_conditional(const DiscreteSchedule& schedule,
                                         const CategoricalState& x_t,
                                         const CategoricalState& x0, int t, double sigma_t) {
    x_t.validate();
    x0.validate();
    if (x_t.K() != x0.K())
        throw std::invalid_argument("cat_reverse_conditional: K mismatch");
    const MixtureWeights w = reverse_mixture_weights(schedule, t, sigma_t);
    const int K = x_t.K();
    CategoricalState out{w.on_xt * x_t.probs + w.on_x0 * x0.probs +
                         Eigen::VectorXd::Constant(K, w.on_uniform / K)};
    return out;
}

CategoricalState cat_reverse_model(const DiscreteSchedule& schedule, const CategoricalState& x_t,
                                   int t, const SimplexFn& f, double sigma_t) {
    const CategoricalState pred = f(x_t);
    pred.validate();
    if (pred.K() != x_t.K())
        throw std::invalid_argument("cat_reverse_model: prediction K mismatch");
    return cat_reverse_conditional(schedule, x_t, pred, t, sigma_t);
}

double kl_categorical(const CategoricalState& q, const CategoricalState& p) {
    if (q.K() != p.K()) throw std::invalid_argument("kl_categorical: K mismatch");
    double kl = 0.0;
    for (int i = 0; i < q.K(); ++i) {
        const double qi = q.probs(i);
        if (qi == 0.0) continue;
        const double pi = p.probs(i);
        if (pi == 0.0) return std::numeric_limits<double>::infinity();
        kl += qi * std::log(qi / pi);
    }
    return std::max(kl, 0.0);
}

KlAndBound cat_kl_and_bound(const DiscreteSchedule& schedule, const CategoricalState& x_t,
                            const CategoricalState& x0, int t, double sigma_t,
                            const SimplexFn& f) {
    const CategoricalState q = cat_reverse_conditional(schedule, x_t, x0, t, sigma_t);
    const CategoricalState p = cat_reverse_model(schedule, x_t, t, f, sigma_t);
    const MixtureWeights w = reverse_mixture_weights(schedule, t, sigma_t);
    const double kl = kl_categorical(q, p);
    const double bound = w.on_x0 * kl_categorical(x0, f(x_t));
    return KlAndBound{kl, bound};
}

} // namespace diffkit::discrete
