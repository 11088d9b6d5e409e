#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "diffkit/denoiser.hpp"

namespace diffkit {

struct TrainConfig {
    int steps = 2000;
    int batch = 128;
    double lr = 1e-3;
    std::uint64_t seed = 0;
    int hidden = 64;
};

// Time-conditioned feed-forward noise predictor: input is the sample
// concatenated with sinusoidal features of t/T, two tanh hidden layers,
// linear output. Small enough to close the risk gap on 2D mixtures.
class MlpDenoiser : public DenoiserModel {
public:
    static constexpr int kTimeFeatures = 8;

    MlpDenoiser(int d, int T, int hidden, std::uint64_t init_seed);

    Eigen::MatrixXd eval(const StateBatch& x, int t) const override;
    std::string_view kind() const override { return "trained"; }

    int dim() const { return d_; }
    int T() const { return T_; }
    int hidden() const { return hidden_; }

    Eigen::VectorXd params() const;
    void set_params(const Eigen::VectorXd& packed);
    int param_count() const;

    // Mean over the batch of ||eps_hat - eps||^2 at the given timesteps,
    // with analytic parameter gradients (backprop) written to *grad when
    // non-null. The batch is (x0 rows, per-row timestep, per-row noise).
    double loss_and_grad(const NoiseSchedule& schedule, const Eigen::MatrixXd& x0,
                         const Eigen::VectorXi& ts, const Eigen::MatrixXd& eps,
                         Eigen::VectorXd* grad) const;

    // Checkpoint: one JSON header line (architecture, schedule hash, seed)
    // followed by the flat little-endian IEEE-754 64-bit parameter payload.
    void save(const std::filesystem::path& path, const std::string& schedule_hash,
              std::uint64_t seed) const;
    static MlpDenoiser load(const std::filesystem::path& path,
                            const std::string& expected_schedule_hash = "");

private:
    int d_;
    int T_;
    int hidden_;
    Eigen::MatrixXd w1_, w2_, w3_;
    Eigen::VectorXd b1_, b2_, b3_;

    Eigen::VectorXd features(const Eigen::RowVectorXd& x, int t) const;
    Eigen::RowVectorXd forward_row(const Eigen::RowVectorXd& x, int t) const;

    friend struct MlpBackprop;
};

// Trains on the unit-weight denoising objective: per step, draw x0 from
// the mixture, a uniform timestep, unit Gaussian noise, and take an Adam
// step on the squared prediction error. Deterministic under the config
// seed. Throws TrainingError if the loss leaves the finite range.
MlpDenoiser train_toy_denoiser(const MixtureSpec& data, const NoiseSchedule& schedule,
                               const TrainConfig& config);

} // namespace diffkit
