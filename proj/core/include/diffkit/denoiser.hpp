#pragma once

#include <string_view>

#include "diffkit/rng.hpp"
#include "diffkit/schedule.hpp"
#include "diffkit/state.hpp"

namespace diffkit {

// Noise-prediction function family. Implementations must be pure and
// row-independent: evaluating a batch row by row yields bitwise the same
// values as evaluating the whole batch, which is what makes parallel and
// serial sampling agree exactly.
class DenoiserModel {
public:
    virtual ~DenoiserModel() = default;

    // Predicted noise for each row of x.data, given that x sits at
    // timestep t. Output shape equals input shape.
    virtual Eigen::MatrixXd eval(const StateBatch& x, int t) const = 0;

    virtual std::string_view kind() const = 0;
};

// Isotropic Gaussian mixture over sample space; the desk-scale stand-in
// for a data distribution. component_std == 0 degenerates to a weighted
// point set.
struct MixtureSpec {
    Eigen::VectorXd weights; // length K, sums to 1
    Eigen::MatrixXd means;   // (K, d)
    double component_std = 0.0;

    int components() const { return static_cast<int>(weights.size()); }
    int dim() const { return static_cast<int>(means.cols()); }

    void validate() const;

    Eigen::RowVectorXd mean() const;
    Eigen::MatrixXd covariance() const;
    // RMS per-dimension standard deviation, used as the data scale.
    double data_std() const;

    Eigen::MatrixXd sample(Eigen::Index n, Rng& rng) const;
};

// Denoised-observation estimate: (x_t - sqrt(1 - a_t) eps_hat) / sqrt(a_t).
Eigen::MatrixXd predict_x0(const NoiseSchedule& schedule, const StateBatch& x_t, int t,
                           const Eigen::MatrixXd& eps_hat);

// Exact posterior mean E[x_0 | x_t] under the mixture and the forward
// marginal at level t. Standard Gaussian conditioning: component k of the
// x_t-marginal has variance a_t s^2 + (1 - a_t); responsibilities follow,
// and the per-component posterior mean shrinks x_t toward m_k.
Eigen::MatrixXd mixture_posterior_mean(const MixtureSpec& spec, const NoiseSchedule& schedule,
                                       const StateBatch& x_t, int t);

// Risk-optimal noise prediction for mixture data:
// (x_t - sqrt(a_t) E[x_0 | x_t]) / sqrt(1 - a_t). Requires t >= 1.
Eigen::MatrixXd mixture_optimal_eps(const MixtureSpec& spec, const NoiseSchedule& schedule,
                                    const StateBatch& x_t, int t);

class AnalyticMixtureDenoiser : public DenoiserModel {
public:
    AnalyticMixtureDenoiser(MixtureSpec spec, NoiseSchedule schedule);

    Eigen::MatrixXd eval(const StateBatch& x, int t) const override;
    std::string_view kind() const override { return "analytic-mixture"; }

    const MixtureSpec& spec() const { return spec_; }

private:
    MixtureSpec spec_;
    NoiseSchedule schedule_;
};

// Returns the same row for every input row; test fixture and the
// "model outputs 0" baseline.
class ConstantDenoiser : public DenoiserModel {
public:
    explicit ConstantDenoiser(Eigen::RowVectorXd value) : value_(std::move(value)) {}

    Eigen::MatrixXd eval(const StateBatch& x, int t) const override;
    std::string_view kind() const override { return "constant"; }

private:
    Eigen::RowVectorXd value_;
};

// Mean over t = 1..T and over a fresh evaluation set of the per-sample
// squared prediction error ||eps_hat - eps||^2. Draws are keyed by
// (seed, t), so every model sees the identical evaluation set.
double epsilon_risk(const DenoiserModel& model, const NoiseSchedule& schedule,
                    const Eigen::MatrixXd& x0, std::uint64_t seed);

} // namespace diffkit
