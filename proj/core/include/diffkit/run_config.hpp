#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "diffkit/denoiser.hpp"
#include "diffkit/mlp_denoiser.hpp"
#include "diffkit/sampler.hpp"
#include "diffkit/schedule.hpp"

namespace diffkit {

struct ScheduleSpec {
    // Either (T, beta_start, beta_end) or an explicit alphas vector.
    int T = 0;
    double beta_start = 1e-4;
    double beta_end = 0.02;
    std::vector<double> alphas; // non-empty selects the explicit form
};

struct DataSpec {
    enum class Kind { Mixture, Points };
    Kind kind = Kind::Mixture;
    MixtureSpec mixture;     // Points are carried as a zero-width mixture
};

struct ModelSpec {
    enum class Kind { Analytic, Checkpoint, Train };
    Kind kind = Kind::Analytic;
    std::string checkpoint_path;
    TrainConfig train;
};

struct SamplerSpec {
    std::vector<int> steps{50};
    SpacingMode mode = SpacingMode::Linear;
    double eta = 0.0;
    bool use_sigma_hat = false;
};

// Parsed + validated run configuration. A JSON document with exactly the
// fields below; unknown fields are errors, and the seed is mandatory (no
// implicit entropy).
struct RunConfig {
    ScheduleSpec schedule;
    DataSpec data;
    ModelSpec model;
    SamplerSpec sampler;
    std::uint64_t seed = 0;
    std::string out = "out";
    int chains = 256;
    bool plot = false;
    int threads = 1;
    bool intermediates = false;

    NoiseSchedule build_schedule() const;
    std::unique_ptr<DenoiserModel> build_model(const NoiseSchedule& schedule) const;
    SigmaPolicy build_policy() const;
    std::string policy_label() const;
};

RunConfig load_run_config(const std::filesystem::path& path);
RunConfig parse_run_config(const std::string& json_text);

struct CliOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::vector<int>> steps;
    std::optional<double> eta;
    bool sigma_hat = false;
    std::optional<SpacingMode> mode;
    std::optional<std::string> out;
    std::optional<int> chains;
    std::optional<bool> plot;
};

void apply_overrides(RunConfig& config, const CliOverrides& overrides);

} // namespace diffkit
