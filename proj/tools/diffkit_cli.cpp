// Command-line driver for the 2D diffusion-sampling experiments:
// sample | encode | reconstruct | interpolate | verify | bench.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "diffkit/checks.hpp"
#include "diffkit/errors.hpp"
#include "diffkit/interp.hpp"
#include "diffkit/metrics.hpp"
#include "diffkit/mlp_denoiser.hpp"
#include "diffkit/objective.hpp"
#include "diffkit/ode.hpp"
#include "diffkit/run_config.hpp"
#include "diffkit/sampler.hpp"
#include "diffkit/svg_plot.hpp"
#include "diffkit/tensor_io.hpp"

namespace fs = std::filesystem;
using namespace diffkit;

namespace {

// Removes the files a failed command leaves behind.
class OutputGuard {
public:
    ~OutputGuard() {
        if (committed_) return;
        std::error_code ec;
        for (const fs::path& p : created_) fs::remove(p, ec);
    }

    fs::path track(fs::path p) {
        created_.push_back(p);
        return p;
    }
    void commit() { committed_ = true; }

private:
    std::vector<fs::path> created_;
    bool committed_ = false;
};

struct CommonFlags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::vector<int> steps;
    std::optional<double> eta;
    bool sigma_hat = false;
    std::string mode;
    std::string out;
    std::optional<int> chains;
    std::string plot;
};

void add_common_flags(CLI::App* cmd, CommonFlags& flags, bool config_required) {
    auto* config = cmd->add_option("--config", flags.config_path, "run configuration (JSON)");
    if (config_required) config->required();
    cmd->add_option("--seed", flags.seed, "override the run seed");
    cmd->add_option("--steps", flags.steps, "trajectory length(s), comma separated")
        ->delimiter(',');
    auto* eta = cmd->add_option("--eta", flags.eta, "noise-scale family parameter");
    cmd->add_flag("--sigma-hat", flags.sigma_hat, "use the over-dispersed noise policy")
        ->excludes(eta);
    cmd->add_option("--mode", flags.mode, "timestep spacing: linear | quadratic")
        ->check(CLI::IsMember({"linear", "quadratic"}));
    cmd->add_option("--out", flags.out, "output directory");
    cmd->add_option("--chains", flags.chains, "number of parallel chains");
    cmd->add_option("--plot", flags.plot, "emit SVG plots: on | off")
        ->check(CLI::IsMember({"on", "off"}));
}

RunConfig build_config(const CommonFlags& flags) {
    RunConfig config = load_run_config(flags.config_path);
    CliOverrides overrides;
    overrides.seed = flags.seed;
    if (!flags.steps.empty()) overrides.steps = flags.steps;
    overrides.eta = flags.eta;
    overrides.sigma_hat = flags.sigma_hat;
    if (!flags.mode.empty()) overrides.mode = spacing_mode_from_string(flags.mode);
    if (!flags.out.empty()) overrides.out = flags.out;
    overrides.chains = flags.chains;
    if (!flags.plot.empty()) overrides.plot = flags.plot == "on";
    apply_overrides(config, overrides);

    const NoiseSchedule ns = config.build_schedule();
    for (int S : config.sampler.steps)
        if (S < 1 || S > ns.T())
            throw ConfigError("sampler.steps", "S = " + std::to_string(S) +
                                                   " outside [1, T = " + std::to_string(ns.T()) +
                                                   "]");
    return config;
}

struct RunContext {
    RunConfig config;
    NoiseSchedule schedule;
    std::unique_ptr<DenoiserModel> model;
    std::string hash;

    explicit RunContext(RunConfig cfg)
        : config(std::move(cfg)),
          schedule(config.build_schedule()),
          model(config.build_model(schedule)),
          hash(schedule_hash_hex(schedule)) {}

    NoiseStream stream() const { return NoiseStream(config.seed); }

    // Freshly trained models are persisted for reuse via model.kind = checkpoint.
    void save_model_if_trained(OutputGuard& guard) const {
        if (config.model.kind != ModelSpec::Kind::Train) return;
        if (const auto* mlp = dynamic_cast<const MlpDenoiser*>(model.get())) {
            mlp->save(guard.track(fs::path(config.out) / "model.bin"), hash, config.seed);
        }
    }

    StateBatch draw_terminal(Eigen::Index n) const {
        const NoiseStream s = stream();
        StateBatch x_T{Eigen::MatrixXd(n, config.data.mixture.dim()), schedule.T()};
        for (Eigen::Index c = 0; c < n; ++c)
            x_T.data.row(c) = s.init_noise(c, config.data.mixture.dim());
        return x_T;
    }

    Eigen::MatrixXd draw_data(Eigen::Index n) const {
        Rng rng = stream().keyed(NoiseStream::Domain::Data, 0);
        return config.data.mixture.sample(n, rng);
    }
};

int single_steps(const RunConfig& config, const char* command) {
    if (config.sampler.steps.size() != 1)
        throw ConfigError("sampler.steps",
                          std::string(command) + " takes a single trajectory length");
    return config.sampler.steps.front();
}

double elapsed_since(const std::chrono::steady_clock::time_point& start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

int cmd_sample(const CommonFlags& flags) {
    RunContext ctx{build_config(flags)};
    const int S = single_steps(ctx.config, "sample");
    fs::create_directories(ctx.config.out);
    OutputGuard guard;
    ctx.save_model_if_trained(guard);

    const Trajectory traj = select_subsequence(ctx.schedule.T(), S, ctx.config.sampler.mode);
    const SigmaPolicy policy = ctx.config.build_policy();
    const StateBatch x_T = ctx.draw_terminal(ctx.config.chains);

    RunOptions options;
    options.record_intermediates = ctx.config.intermediates;
    options.threads = ctx.config.threads;
    const TrajectoryRun run =
        run_trajectory(ctx.schedule, x_T, traj, *ctx.model, policy, ctx.stream(), options);

    const fs::path samples = guard.track(fs::path(ctx.config.out) / "samples.bin");
    write_tensor(samples, run.x0.data, ctx.hash, ctx.config.seed);
    for (const StateBatch& state : run.intermediates) {
        const fs::path p = guard.track(fs::path(ctx.config.out) /
                                       ("intermediate_t" + std::to_string(state.t) + ".bin"));
        write_tensor(p, state.data, ctx.hash, ctx.config.seed);
    }
    if (ctx.config.plot && run.x0.dim() == 2) {
        write_scatter_svg(guard.track(fs::path(ctx.config.out) / "samples.svg"), run.x0.data,
                          "samples S=" + std::to_string(S) + " " + policy.label());
    }
    guard.commit();
    std::cout << "wrote " << samples.string() << " (" << run.x0.batch() << " x " << run.x0.dim()
              << ", S=" << S << ", " << policy.label() << ")\n";
    return 0;
}

int cmd_encode(const CommonFlags& flags) {
    RunContext ctx{build_config(flags)};
    const int S = single_steps(ctx.config, "encode");
    fs::create_directories(ctx.config.out);
    OutputGuard guard;
    ctx.save_model_if_trained(guard);

    const Trajectory traj = select_subsequence(ctx.schedule.T(), S, ctx.config.sampler.mode);
    const Eigen::MatrixXd x0 = ctx.draw_data(ctx.config.chains);
    const StateBatch latents = encode(ctx.schedule, StateBatch{x0, 0}, traj, *ctx.model);

    const fs::path x0_path = guard.track(fs::path(ctx.config.out) / "x0.bin");
    const fs::path latent_path = guard.track(fs::path(ctx.config.out) / "latents.bin");
    write_tensor(x0_path, x0, ctx.hash, ctx.config.seed);
    write_tensor(latent_path, latents.data, ctx.hash, ctx.config.seed);
    if (ctx.config.plot && latents.dim() == 2) {
        write_scatter_svg(guard.track(fs::path(ctx.config.out) / "latents.svg"), latents.data,
                          "latents S=" + std::to_string(S));
    }
    guard.commit();
    std::cout << "wrote " << latent_path.string() << " (" << latents.batch() << " x "
              << latents.dim() << ", S=" << S << ")\n";
    return 0;
}

int cmd_reconstruct(const CommonFlags& flags) {
    RunContext ctx{build_config(flags)};
    fs::create_directories(ctx.config.out);
    OutputGuard guard;
    ctx.save_model_if_trained(guard);

    const Eigen::MatrixXd x0 = ctx.draw_data(ctx.config.chains);
    const SigmaPolicy ddim = SigmaPolicy::eta(0.0); // reconstruction is the deterministic map
    MetricsWriter metrics(guard.track(fs::path(ctx.config.out) / "metrics.csv"));

    std::vector<double> steps, errors;
    for (int S : ctx.config.sampler.steps) {
        const auto start = std::chrono::steady_clock::now();
        const Trajectory traj = select_subsequence(ctx.schedule.T(), S, ctx.config.sampler.mode);
        const StateBatch latents = encode(ctx.schedule, StateBatch{x0, 0}, traj, *ctx.model);
        RunOptions options;
        options.threads = ctx.config.threads;
        const TrajectoryRun decoded =
            run_trajectory(ctx.schedule, latents, traj, *ctx.model, ddim, ctx.stream(), options);
        const double mse = (decoded.x0.data - x0).array().square().mean();
        const double seconds = elapsed_since(start);
        metrics.append(MetricsRow{"reconstruct", S, "eta=0", "per_dim_mse", mse, seconds});
        steps.push_back(S);
        errors.push_back(mse);
        std::cout << "S=" << S << "  per_dim_mse=" << mse << "  (" << seconds << "s)\n";
    }
    if (ctx.config.plot && steps.size() >= 2) {
        write_line_svg(guard.track(fs::path(ctx.config.out) / "reconstruction.svg"), steps,
                       errors, "per-dim MSE vs S");
    }
    guard.commit();
    return 0;
}

int cmd_interpolate(const CommonFlags& flags) {
    RunContext ctx{build_config(flags)};
    const int S = single_steps(ctx.config, "interpolate");
    fs::create_directories(ctx.config.out);
    OutputGuard guard;
    ctx.save_model_if_trained(guard);

    const int d = ctx.config.data.mixture.dim();
    const NoiseStream stream = ctx.stream();
    // Two latent pairs; slerp within pairs by the row coefficient and
    // across pairs by the column coefficient.
    Eigen::RowVectorXd z00 = stream.init_noise(0, d);
    Eigen::RowVectorXd z01 = stream.init_noise(1, d);
    Eigen::RowVectorXd z10 = stream.init_noise(2, d);
    Eigen::RowVectorXd z11 = stream.init_noise(3, d);

    const int grid = 11;
    Eigen::MatrixXd latents(grid * grid, d);
    for (int r = 0; r < grid; ++r) {
        const double a = static_cast<double>(r) / (grid - 1);
        const Eigen::RowVectorXd top = slerp(z00, z01, a);
        const Eigen::RowVectorXd bottom = slerp(z10, z11, a);
        for (int c = 0; c < grid; ++c) {
            const double b = static_cast<double>(c) / (grid - 1);
            latents.row(r * grid + c) = slerp(top, bottom, b);
        }
    }

    const Trajectory traj = select_subsequence(ctx.schedule.T(), S, ctx.config.sampler.mode);
    const SigmaPolicy ddim = SigmaPolicy::eta(0.0);
    const TrajectoryRun decoded = run_trajectory(
        ctx.schedule, StateBatch{latents, ctx.schedule.T()}, traj, *ctx.model, ddim, stream);

    const fs::path latents_path = guard.track(fs::path(ctx.config.out) / "interp_latents.bin");
    const fs::path decoded_path = guard.track(fs::path(ctx.config.out) / "interp_decoded.bin");
    write_tensor(latents_path, latents, ctx.hash, ctx.config.seed);
    write_tensor(decoded_path, decoded.x0.data, ctx.hash, ctx.config.seed);
    if (ctx.config.plot && d == 2) {
        std::vector<int> groups(static_cast<std::size_t>(grid * grid));
        for (int i = 0; i < grid * grid; ++i) groups[static_cast<std::size_t>(i)] = i / grid;
        write_scatter_svg(guard.track(fs::path(ctx.config.out) / "interp_decoded.svg"),
                          decoded.x0.data, "decoded slerp grid", groups);
    }
    guard.commit();
    std::cout << "wrote " << decoded_path.string() << " (" << grid << "x" << grid
              << " grid, S=" << S << ")\n";
    return 0;
}

int cmd_bench(const CommonFlags& flags) {
    RunContext ctx{build_config(flags)};
    fs::create_directories(ctx.config.out);
    OutputGuard guard;
    ctx.save_model_if_trained(guard);

    const SigmaPolicy policy = ctx.config.build_policy();
    const StateBatch x_T = ctx.draw_terminal(ctx.config.chains);
    MetricsWriter metrics(guard.track(fs::path(ctx.config.out) / "metrics.csv"));

    std::vector<double> steps, times;
    for (int S : ctx.config.sampler.steps) {
        const Trajectory traj = select_subsequence(ctx.schedule.T(), S, ctx.config.sampler.mode);
        double best = 1e300;
        for (int rep = 0; rep < 3; ++rep) {
            const auto start = std::chrono::steady_clock::now();
            run_trajectory(ctx.schedule, x_T, traj, *ctx.model, policy, ctx.stream());
            best = std::min(best, elapsed_since(start));
        }
        metrics.append(MetricsRow{"bench", S, policy.label(), "wall_clock_s", best, best});
        steps.push_back(S);
        times.push_back(best);
        std::cout << "S=" << S << "  wall_clock_s=" << best << "\n";
    }
    if (steps.size() >= 2) {
        const LinearFit fit = fit_linear(steps, times);
        std::cout << "linear fit: time = " << fit.slope << "*S + " << fit.intercept
                  << "  (R^2 = " << fit.r_squared << ")\n";
        if (ctx.config.plot)
            write_line_svg(guard.track(fs::path(ctx.config.out) / "bench.svg"), steps, times,
                           "wall clock vs S");
    }
    guard.commit();
    return 0;
}

int cmd_verify(const CommonFlags& flags) {
    std::string out_dir = flags.out;
    if (!flags.config_path.empty()) {
        RunConfig config = build_config(flags);
        if (out_dir.empty()) out_dir = config.out;
    }

    nlohmann::json summary;
    summary["checks"] = nlohmann::json::array();
    bool all_pass = true;
    for (const NamedCheck& check : all_checks()) {
        const CheckResult result = check.run();
        all_pass = all_pass && result.pass;
        std::cout << (result.pass ? "[PASS] " : "[FAIL] ") << result.name << ": " << result.detail
                  << " (" << result.seconds << "s)\n";
        summary["checks"].push_back({{"name", result.name},
                                     {"pass", result.pass},
                                     {"value", result.value},
                                     {"detail", result.detail},
                                     {"seconds", result.seconds}});
    }
    summary["all_pass"] = all_pass;
    std::cout << (all_pass ? "verify: all checks passed\n" : "verify: FAILURES present\n");

    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        std::ofstream json_out(fs::path(out_dir) / "verify.json");
        json_out << summary.dump(2) << '\n';

        // Per-timestep equivalence report on a small fixture.
        const NoiseSchedule ns = make_linear_beta_schedule(10, 0.05, 0.35);
        MixtureSpec data;
        data.weights = Eigen::Vector2d(0.5, 0.5);
        data.means = (Eigen::MatrixXd(2, 2) << 1.5, 0.0, -1.5, 0.5).finished();
        data.component_std = 0.3;
        Rng rng(4);
        const SamplePlan plan = SamplePlan::make(ns, data.sample(64, rng), 12);
        const MlpDenoiser model(2, ns.T(), 32, 5);
        Eigen::VectorXd sigma(ns.T());
        for (int t = 1; t <= ns.T(); ++t)
            sigma(t - 1) = 0.5 * (t == 1 ? 0.5 : std::sqrt(1.0 - ns.alpha(t - 1)));
        std::ofstream report(fs::path(out_dir) / "objective_report.csv");
        report << "t,kl_term,l_term,gamma_t,residual\n";
        for (const ObjectiveReportRow& row : objective_report(ns, model, plan, sigma)) {
            report << row.t << ',' << row.kl_term << ',' << row.l_term << ',' << row.gamma_t
                   << ',' << row.residual << '\n';
        }
    }
    return all_pass ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"desk-scale diffusion sampling toolkit"};
    app.require_subcommand(1);

    CommonFlags sample_flags, encode_flags, reconstruct_flags, interpolate_flags, verify_flags,
        bench_flags;
    CLI::App* sample = app.add_subcommand("sample", "draw samples along a trajectory");
    CLI::App* enc = app.add_subcommand("encode", "encode data to terminal latents");
    CLI::App* reconstruct =
        app.add_subcommand("reconstruct", "encode/decode round trip, per-dim MSE vs S");
    CLI::App* interpolate =
        app.add_subcommand("interpolate", "decode a slerp grid between latent pairs");
    CLI::App* verify = app.add_subcommand("verify", "run the named verification checks");
    CLI::App* bench = app.add_subcommand("bench", "wall-clock scaling with trajectory length");
    add_common_flags(sample, sample_flags, true);
    add_common_flags(enc, encode_flags, true);
    add_common_flags(reconstruct, reconstruct_flags, true);
    add_common_flags(interpolate, interpolate_flags, true);
    add_common_flags(verify, verify_flags, false);
    add_common_flags(bench, bench_flags, true);

    CLI11_PARSE(app, argc, argv);

    try {
        if (sample->parsed()) return cmd_sample(sample_flags);
        if (enc->parsed()) return cmd_encode(encode_flags);
        if (reconstruct->parsed()) return cmd_reconstruct(reconstruct_flags);
        if (interpolate->parsed()) return cmd_interpolate(interpolate_flags);
        if (verify->parsed()) return cmd_verify(verify_flags);
        if (bench->parsed()) return cmd_bench(bench_flags);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
