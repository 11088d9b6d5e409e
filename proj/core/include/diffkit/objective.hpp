#pragma once

#include <vector>

#include "diffkit/denoiser.hpp"
#include "diffkit/rng.hpp"
#include "diffkit/schedule.hpp"

namespace diffkit {

// Positive per-timestep weights; gamma(t-1) weights the t-th term.
struct WeightVector {
    Eigen::VectorXd gamma;

    double at(int t) const { return gamma(t - 1); }
    static WeightVector ones(int T) { return {Eigen::VectorXd::Ones(T)}; }
};

// Frozen evaluation set: an x0 batch plus one noise matrix per timestep.
// Sharing the plan across objective evaluations makes the equivalence
// checks deterministic identities instead of Monte-Carlo statements.
struct SamplePlan {
    Eigen::MatrixXd x0;                   // (n, d)
    std::vector<Eigen::MatrixXd> eps;     // eps[t-1] is the draw for level t

    int T() const { return static_cast<int>(eps.size()); }
    int dim() const { return static_cast<int>(x0.cols()); }
    Eigen::Index size() const { return x0.rows(); }

    // Forward marginal x_t assembled from the plan's noise.
    StateBatch x_at(const NoiseSchedule& schedule, int t) const;

    static SamplePlan make(const NoiseSchedule& schedule, Eigen::MatrixXd x0,
                           std::uint64_t seed);
};

// Weighted sum over t of the mean squared noise-prediction error on the plan.
double l_gamma(const NoiseSchedule& schedule, const DenoiserModel& model,
               const SamplePlan& plan, const WeightVector& gamma);

struct ObjectiveValue {
    double theta_dependent = 0.0;   // sum of KL / reconstruction terms
    double theta_independent = 0.0; // entropies, prior cross term, log-normalizers
    double total() const { return theta_dependent + theta_independent; }
};

// The t-th model-dependent term of the variational objective on the plan:
// for t >= 2 the KL between the two equal-covariance reverse conditionals
// (conditioning on x_0 vs. on the model's denoised estimate), which is
// ||mean difference||^2 / (2 sigma_t^2); for t = 1 the Gaussian
// reconstruction term ||x_0 - f(x_1)||^2 / (2 sigma_1^2).
double objective_term(const NoiseSchedule& schedule, const DenoiserModel& model,
                      const SamplePlan& plan, int t, double sigma_t);

// Full variational objective, split into the model-dependent sum and the
// model-independent constant channel. Requires sigma_t > 0 for every t.
ObjectiveValue j_sigma(const NoiseSchedule& schedule, const DenoiserModel& model,
                       const SamplePlan& plan, const Eigen::VectorXd& sigma);

// Weights for which j_sigma minus l_gamma is model-independent on every
// plan. For t >= 2:
//   gamma_t = (sqrt(a_{t-1}) - c_t sqrt(a_t))^2 (1 - a_t) / (2 sigma_t^2 a_t),
//   c_t = sqrt(1 - a_{t-1} - sigma_t^2) / sqrt(1 - a_t);
// for t = 1: gamma_1 = (1 - a_1) / (2 sigma_1^2 a_1). The equivalence is an
// identical per-sample quadratic rewrite, so the residual is constant
// per-plan, not merely in expectation.
WeightVector equivalence_gamma(const Eigen::VectorXd& sigma, const NoiseSchedule& schedule);

struct ObjectiveReportRow {
    int t;
    double kl_term;  // model-dependent objective term
    double l_term;   // gamma_t * mean squared prediction error
    double gamma_t;
    double residual; // kl_term - l_term; zero up to round-off
};

std::vector<ObjectiveReportRow> objective_report(const NoiseSchedule& schedule,
                                                 const DenoiserModel& model,
                                                 const SamplePlan& plan,
                                                 const Eigen::VectorXd& sigma);

} // namespace diffkit
