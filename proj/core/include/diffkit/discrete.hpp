#pragma once

#include <functional>
#include <vector>

#include <Eigen/Core>

namespace diffkit::discrete {

// Distribution over K categories; observed states are one-hot.
struct CategoricalState {
    Eigen::VectorXd probs;

    int K() const { return static_cast<int>(probs.size()); }
    void validate() const;

    static CategoricalState one_hot(int K, int index);
    static CategoricalState uniform(int K);
};

// Categorical analogue of the cumulative schedule: alphas[0] = 1 and
// alphas[T] = 0 exactly, monotone non-increasing in between.
struct DiscreteSchedule {
    std::vector<double> alphas;

    int T() const { return static_cast<int>(alphas.size()) - 1; }
    double alpha(int t) const;

    static DiscreteSchedule from_alphas(std::vector<double> alphas);
    static DiscreteSchedule linear(int T); // alpha_t = 1 - t/T
};

// q(x_t | x_0) = Cat(alpha_t x_0 + (1 - alpha_t) u), u uniform.
CategoricalState cat_forward_marginal(const DiscreteSchedule& schedule,
                                      const CategoricalState& x0, int t);

// Convex weights of the three-component reverse mixture; throws
// std::domain_error naming the violated weight when sigma_t is infeasible.
struct MixtureWeights {
    double on_xt;
    double on_x0;
    double on_uniform;
};
MixtureWeights reverse_mixture_weights(const DiscreteSchedule& schedule, int t, double sigma_t);

// Upper end of the feasible sigma_t region:
// min(alpha_{t-1}/alpha_t, (1-alpha_{t-1})/(1-alpha_t)).
double sigma_max(const DiscreteSchedule& schedule, int t);

// q(x_{t-1} | x_t, x_0): mixture sigma_t on x_t, (alpha_{t-1} - sigma_t alpha_t)
// on x_0, remainder on uniform.
CategoricalState cat_reverse_conditional(const DiscreteSchedule& schedule,
                                         const CategoricalState& x_t,
                                         const CategoricalState& x0, int t, double sigma_t);

using SimplexFn = std::function<CategoricalState(const CategoricalState&)>;

// Model-based reverse: the x_0 slot is filled by f(x_t), which must be a
// valid simplex vector.
CategoricalState cat_reverse_model(const DiscreteSchedule& schedule, const CategoricalState& x_t,
                                   int t, const SimplexFn& f, double sigma_t);

// KL(q || p) between categoricals; +infinity when q has mass where p has none.
double kl_categorical(const CategoricalState& q, const CategoricalState& p);

struct KlAndBound {
    double kl;
    double bound;
};

// KL between the conditioned and model-based reverse distributions, plus
// the convexity bound (alpha_{t-1} - sigma_t alpha_t) * KL(Cat(x_0) || Cat(f(x_t))).
KlAndBound cat_kl_and_bound(const DiscreteSchedule& schedule, const CategoricalState& x_t,
                            const CategoricalState& x0, int t, double sigma_t,
                            const SimplexFn& f);

} // namespace diffkit::discrete
