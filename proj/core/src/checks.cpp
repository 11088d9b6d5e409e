#include "diffkit/checks.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <sstream>

#include "diffkit/denoiser.hpp"
#include "diffkit/discrete.hpp"
#include "diffkit/gaussian_process.hpp"
#include "diffkit/interp.hpp"
#include "diffkit/metrics.hpp"
#include "diffkit/mlp_denoiser.hpp"
#include "diffkit/objective.hpp"
#include "diffkit/ode.hpp"
#include "diffkit/rng.hpp"
#include "diffkit/sampler.hpp"
#include "diffkit/schedule.hpp"

namespace diffkit {

namespace {

class Stopwatch {
public:
    double elapsed() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string format_double(double v) {
    std::ostringstream out;
    out.precision(4);
    out << v;
    return out.str();
}

NoiseSchedule standard_schedule() { return make_linear_beta_schedule(1000, 1e-4, 0.02); }

// Three-component 2D mixture used across the sampling experiments.
MixtureSpec desk_mixture() {
    MixtureSpec spec;
    spec.weights = Eigen::Vector3d(0.4, 0.35, 0.25);
    spec.means = Eigen::MatrixXd(3, 2);
    spec.means << 2.2, 0.8, -1.8, 2.0, 0.4, -2.4;
    spec.component_std = 0.35;
    return spec;
}

StateBatch shared_terminal_noise(const NoiseSchedule& ns, Eigen::Index chains, int d,
                                 std::uint64_t seed) {
    NoiseStream stream(seed);
    StateBatch x_T{Eigen::MatrixXd(chains, d), ns.T()};
    for (Eigen::Index c = 0; c < chains; ++c) x_T.data.row(c) = stream.init_noise(c, d);
    return x_T;
}

double mean_row_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    return (a - b).rowwise().norm().mean();
}

// U-statistic energy distance between two point sets.
double energy_distance(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
    const Eigen::Index n = x.rows(), m = y.rows();
    double cross = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < m; ++j) cross += (x.row(i) - y.row(j)).norm();
    cross /= static_cast<double>(n) * static_cast<double>(m);

    auto within = [](const Eigen::MatrixXd& z) {
        const Eigen::Index k = z.rows();
        double acc = 0.0;
        for (Eigen::Index i = 0; i < k; ++i)
            for (Eigen::Index j = i + 1; j < k; ++j) acc += (z.row(i) - z.row(j)).norm();
        return 2.0 * acc / (static_cast<double>(k) * static_cast<double>(k - 1));
    };
    const double ed2 = 2.0 * cross - within(x) - within(y);
    return std::sqrt(std::max(ed2, 0.0));
}

struct BandedEstimate {
    double mean;
    double stderr3; // 3 * standard error over blocks
};

BandedEstimate blocked_energy_distance(const Eigen::MatrixXd& gen, const Eigen::MatrixXd& truth,
                                       int blocks) {
    const Eigen::Index per = gen.rows() / blocks;
    std::vector<double> estimates;
    for (int b = 0; b < blocks; ++b) {
        estimates.push_back(energy_distance(gen.middleRows(b * per, per),
                                            truth.middleRows(b * per, per)));
    }
    double mean = 0.0;
    for (double e : estimates) mean += e;
    mean /= blocks;
    double var = 0.0;
    for (double e : estimates) var += (e - mean) * (e - mean);
    var /= (blocks - 1);
    return BandedEstimate{mean, 3.0 * std::sqrt(var / blocks)};
}

CheckResult finish(const std::string& name, bool pass, double value, std::string detail,
                   const Stopwatch& watch, double budget_seconds = 0.0) {
    CheckResult result;
    result.name = name;
    result.value = value;
    result.seconds = watch.elapsed();
    if (budget_seconds > 0.0 && result.seconds >= budget_seconds) {
        pass = false;
        detail += " [exceeded " + format_double(budget_seconds) + "s budget]";
    }
    result.pass = pass;
    result.detail = std::move(detail);
    return result;
}

// closed-form marginal-consistency identities at T = 1000
// plus Monte-Carlo corroboration at d = 2, N = 200k.
CheckResult check_marginal_consistency() {
    Stopwatch watch;
    const NoiseSchedule ns = standard_schedule();
    Rng rng(101);

    double max_dev = 0.0;
    for (int t = 2; t <= ns.T(); ++t) {
        const double a_prev = ns.alpha(t - 1);
        const double a = ns.alpha(t);
        for (int k = 0; k < 100; ++k) {
            const double sigma = rng.uniform() * std::sqrt(1.0 - a_prev);
            const ReverseMeanCoeffs coef = reverse_mean_coeffs(ns, t, t - 1, sigma);
            // Variance propagation: sigma^2 + c^2 (1 - a_t) == 1 - a_{t-1}.
            const double var_dev =
                std::abs(sigma * sigma + coef.xt_coeff * coef.xt_coeff * (1.0 - a) -
                         (1.0 - a_prev));
            // Mean cancellation: c sqrt(a_t) + B == sqrt(a_{t-1}).
            const double mean_dev = std::abs(coef.xt_coeff * std::sqrt(a) + coef.x0_coeff -
                                             std::sqrt(a_prev));
            max_dev = std::max({max_dev, var_dev, mean_dev});
        }
    }
    bool pass = max_dev < 1e-12;

    // Monte-Carlo corroboration at one representative transition.
    const int t = 300;
    const double sigma = 0.6 * std::sqrt(1.0 - ns.alpha(t - 1));
    const Eigen::Index n = 200000;
    const int d = 2;
    Eigen::MatrixXd x0_row(1, d);
    x0_row << 1.2, -0.7;
    const Eigen::MatrixXd x0 = x0_row.replicate(n, 1);
    Eigen::MatrixXd noise(n, d);
    rng.fill_normal(noise);
    const StateBatch x_t = forward_marginal_sample(ns, StateBatch{x0, 0}, t, noise);
    const GaussianParams params =
        reverse_conditional_params(ns, x_t, StateBatch{x0, 0}, t, t - 1, sigma);
    rng.fill_normal(noise);
    const Eigen::MatrixXd x_prev = params.mean + sigma * noise;

    const Eigen::RowVectorXd emp_mean = x_prev.colwise().mean();
    const Eigen::RowVectorXd expected_mean = std::sqrt(ns.alpha(t - 1)) * x0_row;
    const double mean_err = (emp_mean - expected_mean).cwiseAbs().maxCoeff();
    const Eigen::RowVectorXd centered_var =
        (x_prev.rowwise() - emp_mean).array().square().colwise().mean();
    const double expected_var = 1.0 - ns.alpha(t - 1);
    const double var_rel_err =
        ((centered_var.array() - expected_var).abs() / expected_var).maxCoeff();
    pass = pass && mean_err < 0.01 && var_rel_err < 0.02;

    return finish("marginal_consistency", pass, max_dev,
                  "max identity dev " + format_double(max_dev) + ", MC mean err " +
                      format_double(mean_err) + ", MC var rel err " + format_double(var_rel_err),
                  watch, 30.0);
}

// J_sigma - L_gamma is the same number for independently
// initialized denoisers sharing a plan.
CheckResult check_objective_equivalence() {
    Stopwatch watch;
    const NoiseSchedule ns = make_linear_beta_schedule(10, 0.05, 0.35);
    const int T = ns.T();

    Rng data_rng(7);
    MixtureSpec data = desk_mixture();
    const Eigen::MatrixXd x0 = data.sample(64, data_rng);
    const SamplePlan plan = SamplePlan::make(ns, x0, 77);

    std::vector<MlpDenoiser> models;
    for (int m = 0; m < 5; ++m) models.emplace_back(2, T, 32, 1000 + m);

    Rng rng(313);
    double worst = 0.0;
    for (int rep = 0; rep < 10; ++rep) {
        Eigen::VectorXd sigma(T);
        for (int t = 1; t <= T; ++t) {
            const double cap = t == 1 ? 0.6 : std::sqrt(1.0 - ns.alpha(t - 1));
            sigma(t - 1) = cap * (0.15 + 0.8 * rng.uniform());
        }
        const WeightVector gamma = equivalence_gamma(sigma, ns);

        double lo = 0.0, hi = 0.0, mean = 0.0;
        for (std::size_t m = 0; m < models.size(); ++m) {
            const double residual =
                j_sigma(ns, models[m], plan, sigma).total() - l_gamma(ns, models[m], plan, gamma);
            if (m == 0) lo = hi = residual;
            lo = std::min(lo, residual);
            hi = std::max(hi, residual);
            mean += residual;
        }
        mean /= static_cast<double>(models.size());
        worst = std::max(worst, (hi - lo) / std::max(std::abs(mean), 1e-30));
    }
    return finish("objective_equivalence", worst < 1e-8, worst,
                  "max relative residual spread " + format_double(worst) +
                      " over 10 sigma draws x 5 denoisers",
                  watch, 10.0);
}

// the eta = 1 step law coincides with the Markovian posterior
// law at every t.
CheckResult check_ddpm_reduction() {
    Stopwatch watch;
    const NoiseSchedule ns = standard_schedule();
    const int T = ns.T();
    Rng rng(212);

    const Eigen::Index n = 8;
    const int d = 2;
    Eigen::MatrixXd x0m(n, d), xtm(n, d);
    rng.fill_normal(x0m);
    rng.fill_normal(xtm);
    x0m *= 1.5;

    double max_dev = 0.0;
    for (int t = 2; t <= T; ++t) {
        const StateBatch x_t{xtm, t};
        const StateBatch x0{x0m, 0};
        const GaussianParams general =
            reverse_conditional_params(ns, x_t, x0, t, t - 1, sigma_ddpm(ns, t));
        const GaussianParams posterior = ddpm_posterior_params(ns, x_t, x0, t);
        max_dev = std::max(max_dev, (general.mean - posterior.mean).cwiseAbs().maxCoeff());
        max_dev = std::max(max_dev, std::abs(general.var - posterior.var));
    }

    // Step law through the sampler: the eta = 1 transition equals the
    // posterior mean at the model's denoised estimate plus sigma * noise.
    const Trajectory full = select_subsequence(T, T, SpacingMode::Linear);
    const SigmaPolicy policy = SigmaPolicy::eta(1.0);
    const ConstantDenoiser model((Eigen::RowVectorXd(d) << 0.3, -0.6).finished());
    Eigen::MatrixXd noise(n, d);
    rng.fill_normal(noise);
    for (int t = 1; t <= T; ++t) {
        const StateBatch x_t{xtm, t};
        const StateBatch out = generalized_step(ns, x_t, full, t, model, policy, &noise);
        const Eigen::MatrixXd f = predict_x0(ns, x_t, t, model.eval(x_t, t));
        const GaussianParams posterior = ddpm_posterior_params(ns, x_t, StateBatch{f, 0}, t);
        const Eigen::MatrixXd expected = posterior.mean + sigma_ddpm(ns, t) * noise;
        max_dev = std::max(max_dev, (out.data - expected).cwiseAbs().maxCoeff());
    }

    return finish("ddpm_reduction", max_dev < 1e-10, max_dev,
                  "max mean/variance deviation " + format_double(max_dev) + " over all t",
                  watch, 5.0);
}

// sigma = 0 runs are bit-identical and consistent across
// trajectory lengths from a shared terminal state.
CheckResult check_ddim_determinism_consistency() {
    Stopwatch watch;
    const NoiseSchedule ns = standard_schedule();
    const MixtureSpec data = desk_mixture();
    const AnalyticMixtureDenoiser model(data, ns);
    const SigmaPolicy ddim = SigmaPolicy::eta(0.0);

    const StateBatch x_T_small = shared_terminal_noise(ns, 16, 2, 42);
    const Trajectory traj50 = select_subsequence(ns.T(), 50, SpacingMode::Linear);
    const TrajectoryRun a = run_trajectory(ns, x_T_small, traj50, model, ddim, NoiseStream(42));
    const TrajectoryRun b = run_trajectory(ns, x_T_small, traj50, model, ddim, NoiseStream(42));
    const TrajectoryRun c = run_trajectory(ns, x_T_small, traj50, model, ddim, NoiseStream(99));
    const bool bitwise =
        std::memcmp(a.x0.data.data(), b.x0.data.data(),
                    sizeof(double) * static_cast<std::size_t>(a.x0.data.size())) == 0 &&
        std::memcmp(a.x0.data.data(), c.x0.data.data(),
                    sizeof(double) * static_cast<std::size_t>(a.x0.data.size())) == 0;

    const StateBatch x_T = shared_terminal_noise(ns, 1024, 2, 7);
    const TrajectoryRun coarse = run_trajectory(ns, x_T, traj50, model, ddim, NoiseStream(1));
    const Trajectory traj1000 = select_subsequence(ns.T(), 1000, SpacingMode::Linear);
    const TrajectoryRun fine = run_trajectory(ns, x_T, traj1000, model, ddim, NoiseStream(1));
    const double dist = mean_row_distance(coarse.x0.data, fine.x0.data);
    const double ratio = dist / data.data_std();

    return finish("ddim_determinism_consistency", bitwise && ratio < 0.10, ratio,
                  std::string("bitwise ") + (bitwise ? "ok" : "FAILED") +
                      ", mean S=50 vs S=1000 distance = " + format_double(ratio) +
                      " of data std",
                  watch, 60.0);
}

// encode/decode per-dimension MSE falls with S.
CheckResult check_reconstruction_trend() {
    Stopwatch watch;
    const NoiseSchedule ns = standard_schedule();
    const MixtureSpec data = desk_mixture();
    const AnalyticMixtureDenoiser model(data, ns);
    const SigmaPolicy ddim = SigmaPolicy::eta(0.0);

    Rng rng(909);
    const Eigen::MatrixXd x0 = data.sample(256, rng);
    const std::vector<int> sweep{10, 50, 100, 500};
    std::vector<double> mse;
    for (int S : sweep) {
        const Trajectory traj = select_subsequence(ns.T(), S, SpacingMode::Linear);
        const StateBatch latents = encode(ns, StateBatch{x0, 0}, traj, model);
        const TrajectoryRun decoded =
            run_trajectory(ns, latents, traj, model, ddim, NoiseStream(3));
        mse.push_back((decoded.x0.data - x0).array().square().mean());
    }

    bool monotone = true;
    for (std::size_t i = 1; i < mse.size(); ++i)
        if (mse[i] >= mse[i - 1] * 1.05) monotone = false;
    const bool big_drop = mse.back() < mse.front() / 10.0;

    std::ostringstream detail;
    detail << "per-dim MSE:";
    for (std::size_t i = 0; i < sweep.size(); ++i)
        detail << " S=" << sweep[i] << ":" << format_double(mse[i]);
    return finish("reconstruction_trend", monotone && big_drop, mse.front() / mse.back(),
                  detail.str(), watch, 120.0);
}

// the two Euler discretizations converge to each other under
// refinement.
CheckResult check_integrator_agreement() {
    Stopwatch watch;
    const NoiseSchedule ns = standard_schedule();
    const MixtureSpec data = desk_mixture();
    const AnalyticMixtureDenoiser model(data, ns);

    const StateBatch x_T = shared_terminal_noise(ns, 256, 2, 11);
    auto integrate = [&](const Trajectory& traj, bool prob_flow) {
        StateBatch cur = x_T;
        for (int i = traj.S(); i >= 1; --i) {
            const int t_to = i >= 2 ? traj.at(i - 1) : 0;
            cur = prob_flow ? prob_flow_euler_step(ns, cur, traj.at(i), t_to, model)
                            : ddim_euler_step(ns, cur, traj.at(i), t_to, model);
        }
        return cur.data;
    };

    const std::vector<int> sweep{40, 80, 160, 320};
    std::vector<double> gaps;
    for (int S : sweep) {
        const Trajectory traj = select_subsequence(ns.T(), S, SpacingMode::Linear);
        gaps.push_back(mean_row_distance(integrate(traj, false), integrate(traj, true)));
    }
    bool pass = true;
    double worst_ratio = 0.0;
    for (std::size_t i = 1; i < gaps.size(); ++i) {
        const double ratio = gaps[i] / gaps[i - 1];
        worst_ratio = std::max(worst_ratio, ratio);
        if (!(ratio < 0.7)) pass = false;
    }
    std::ostringstream detail;
    detail << "terminal gaps:";
    for (std::size_t i = 0; i < sweep.size(); ++i)
        detail << " S=" << sweep[i] << ":" << format_double(gaps[i]);
    detail << "; worst halving ratio " << format_double(worst_ratio);
    return finish("integrator_agreement", pass, worst_ratio, detail.str(), watch, 60.0);
}

// exhaustive categorical marginalization plus the convexity
// bound.
CheckResult check_discrete_consistency() {
    Stopwatch watch;
    using namespace diffkit::discrete;
    Rng rng(555);

    auto random_schedule = [&rng](int T) {
        std::vector<double> alphas(static_cast<std::size_t>(T) + 1);
        alphas[0] = 1.0;
        alphas[static_cast<std::size_t>(T)] = 0.0;
        std::vector<double> interior;
        for (int i = 0; i < T - 1; ++i) interior.push_back(rng.uniform());
        std::sort(interior.begin(), interior.end(), std::greater<double>());
        for (int i = 1; i < T; ++i) alphas[static_cast<std::size_t>(i)] = interior[i - 1];
        return DiscreteSchedule::from_alphas(std::move(alphas));
    };

    double max_dev = 0.0;
    for (int rep = 0; rep < 200; ++rep) {
        const int K = 2 + rng.uniform_int(7);
        const int T = 2 + rng.uniform_int(15);
        const DiscreteSchedule schedule = random_schedule(T);
        const int t = 1 + rng.uniform_int(T);
        const double cap = std::min(sigma_max(schedule, t), 4.0);
        const double sigma = rng.uniform() * cap;
        const CategoricalState x0 = CategoricalState::one_hot(K, rng.uniform_int(K));

        const CategoricalState marg_t = cat_forward_marginal(schedule, x0, t);
        Eigen::VectorXd mixed = Eigen::VectorXd::Zero(K);
        for (int j = 0; j < K; ++j) {
            const CategoricalState x_t = CategoricalState::one_hot(K, j);
            mixed += marg_t.probs(j) *
                     cat_reverse_conditional(schedule, x_t, x0, t, sigma).probs;
        }
        const CategoricalState marg_prev = cat_forward_marginal(schedule, x0, t - 1);
        max_dev = std::max(max_dev, (mixed - marg_prev.probs).cwiseAbs().maxCoeff());
    }

    bool bound_ok = true;
    for (int rep = 0; rep < 1000; ++rep) {
        const int K = 2 + rng.uniform_int(7);
        const int T = 2 + rng.uniform_int(15);
        const DiscreteSchedule schedule = random_schedule(T);
        const int t = 1 + rng.uniform_int(T);
        const double sigma = rng.uniform() * std::min(sigma_max(schedule, t), 4.0);
        const CategoricalState x0 = CategoricalState::one_hot(K, rng.uniform_int(K));
        const CategoricalState x_t = CategoricalState::one_hot(K, rng.uniform_int(K));

        Eigen::VectorXd raw(K);
        for (int j = 0; j < K; ++j) raw(j) = rng.uniform() + 0.01;
        const CategoricalState pred{raw / raw.sum()};
        const auto result = cat_kl_and_bound(schedule, x_t, x0, t, sigma,
                                             [&pred](const CategoricalState&) { return pred; });
        if (!(result.kl <= result.bound + 1e-12)) bound_ok = false;
    }

    return finish("discrete_consistency", max_dev < 1e-12 && bound_ok, max_dev,
                  "max marginalization deviation " + format_double(max_dev) +
                      (bound_ok ? ", convexity bound held on 1000 instances"
                                : ", convexity bound VIOLATED"),
                  watch, 30.0);
}

// the over-dispersed policy degrades short trajectories but
// matches at S = T.
CheckResult check_sigma_hat_degradation() {
    Stopwatch watch;
    const NoiseSchedule ns = standard_schedule();
    const MixtureSpec data = desk_mixture();
    const AnalyticMixtureDenoiser model(data, ns);

    const Eigen::Index chains = 4096;
    Rng data_rng(606);
    const Eigen::MatrixXd truth = data.sample(chains, data_rng);
    const StateBatch x_T = shared_terminal_noise(ns, chains, 2, 21);

    auto sample_with = [&](const SigmaPolicy& policy, int S) {
        const Trajectory traj = select_subsequence(ns.T(), S, SpacingMode::Linear);
        return run_trajectory(ns, x_T, traj, model, policy, NoiseStream(33)).x0.data;
    };

    const int blocks = 8;
    const BandedEstimate eta0_s10 =
        blocked_energy_distance(sample_with(SigmaPolicy::eta(0.0), 10), truth, blocks);
    const BandedEstimate hat_s10 =
        blocked_energy_distance(sample_with(SigmaPolicy::sigma_hat(), 10), truth, blocks);
    const BandedEstimate eta0_full =
        blocked_energy_distance(sample_with(SigmaPolicy::eta(0.0), ns.T()), truth, blocks);
    const BandedEstimate hat_full =
        blocked_energy_distance(sample_with(SigmaPolicy::sigma_hat(), ns.T()), truth, blocks);

    const bool degrades = hat_s10.mean > eta0_s10.mean;
    const bool overlap = hat_full.mean - hat_full.stderr3 <= eta0_full.mean + eta0_full.stderr3 &&
                         eta0_full.mean - eta0_full.stderr3 <= hat_full.mean + hat_full.stderr3;

    std::ostringstream detail;
    detail << "energy distance S=10: sigma_hat " << format_double(hat_s10.mean) << " vs eta=0 "
           << format_double(eta0_s10.mean) << "; S=T: " << format_double(hat_full.mean) << "+-"
           << format_double(hat_full.stderr3) << " vs " << format_double(eta0_full.mean) << "+-"
           << format_double(eta0_full.stderr3);
    return finish("sigma_hat_degradation", degrades && overlap,
                  hat_s10.mean / std::max(eta0_s10.mean, 1e-30), detail.str(), watch, 120.0);
}

// wall-clock time is linear in the trajectory length.
CheckResult check_timing_linearity() {
    Stopwatch watch;
    const NoiseSchedule ns = standard_schedule();
    const MixtureSpec data = desk_mixture();
    const AnalyticMixtureDenoiser model(data, ns);
    const SigmaPolicy ddim = SigmaPolicy::eta(0.0);

    const StateBatch x_T = shared_terminal_noise(ns, 2048, 2, 17);
    const std::vector<int> sweep{10, 20, 50, 100};
    std::vector<double> times, steps;
    for (int S : sweep) {
        const Trajectory traj = select_subsequence(ns.T(), S, SpacingMode::Linear);
        double best = 1e300;
        for (int rep = 0; rep < 3; ++rep) {
            Stopwatch timer;
            run_trajectory(ns, x_T, traj, model, ddim, NoiseStream(2));
            best = std::min(best, timer.elapsed());
        }
        times.push_back(best);
        steps.push_back(static_cast<double>(S));
    }
    const LinearFit fit = fit_linear(steps, times);
    std::ostringstream detail;
    detail << "fit time = " << format_double(fit.slope) << "*S + " << format_double(fit.intercept)
           << ", R^2 = " << format_double(fit.r_squared);
    return finish("timing_linearity", fit.r_squared > 0.99, fit.r_squared, detail.str(), watch);
}

// backprop gradients match central finite differences.
CheckResult check_gradient() {
    Stopwatch watch;
    const NoiseSchedule ns = make_linear_beta_schedule(8, 0.05, 0.3);
    MlpDenoiser model(2, ns.T(), 32, 3);

    Rng rng(44);
    MixtureSpec data = desk_mixture();
    const Eigen::MatrixXd x0 = data.sample(16, rng);
    Eigen::VectorXi ts(16);
    for (int i = 0; i < 16; ++i) ts(i) = 1 + rng.uniform_int(ns.T());
    Eigen::MatrixXd eps(16, 2);
    rng.fill_normal(eps);

    Eigen::VectorXd analytic;
    model.loss_and_grad(ns, x0, ts, eps, &analytic);

    Eigen::VectorXd theta = model.params();
    double worst = 0.0;
    for (int k = 0; k < 20; ++k) {
        const int idx = rng.uniform_int(model.param_count());
        const double h = 1e-6 * std::max(1.0, std::abs(theta(idx)));
        Eigen::VectorXd perturbed = theta;
        perturbed(idx) = theta(idx) + h;
        model.set_params(perturbed);
        const double up = model.loss_and_grad(ns, x0, ts, eps, nullptr);
        perturbed(idx) = theta(idx) - h;
        model.set_params(perturbed);
        const double down = model.loss_and_grad(ns, x0, ts, eps, nullptr);
        model.set_params(theta);
        const double fd = (up - down) / (2.0 * h);
        const double rel =
            std::abs(fd - analytic(idx)) / std::max({std::abs(fd), std::abs(analytic(idx)), 1e-10});
        worst = std::max(worst, rel);
    }
    return finish("gradient_check", worst < 1e-4, worst,
                  "max relative error " + format_double(worst) + " over 20 coordinates", watch);
}

// Extra named check used by the CLI verify command.
CheckResult check_slerp_endpoints() {
    Stopwatch watch;
    Rng rng(8);
    bool pass = true;
    double worst = 0.0;
    for (int rep = 0; rep < 50; ++rep) {
        Eigen::RowVectorXd a(4), b(4);
        for (int j = 0; j < 4; ++j) {
            a(j) = rng.normal();
            b(j) = rng.normal();
        }
        worst = std::max(worst, (slerp(a, b, 0.0) - a).cwiseAbs().maxCoeff());
        worst = std::max(worst, (slerp(a, b, 1.0) - b).cwiseAbs().maxCoeff());
        const Eigen::RowVectorXd anti = slerp(a, (-a).eval(), 0.5);
        if (!anti.allFinite()) pass = false;
    }
    Eigen::RowVectorXd e1 = Eigen::RowVectorXd::Zero(2), e2 = Eigen::RowVectorXd::Zero(2);
    e1(0) = 1.0;
    e2(1) = 1.0;
    const double mid = std::sin(M_PI / 4.0) / std::sin(M_PI / 2.0);
    worst = std::max(worst,
                     (slerp(e1, e2, 0.5) - mid * (e1 + e2)).cwiseAbs().maxCoeff());
    return finish("slerp_endpoints", pass && worst < 1e-12, worst,
                  "max endpoint/midpoint deviation " + format_double(worst), watch);
}

} // namespace

const std::vector<NamedCheck>& all_checks() {
    static const std::vector<NamedCheck> checks = {
        {"marginal_consistency", check_marginal_consistency},
        {"objective_equivalence", check_objective_equivalence},
        {"ddpm_reduction", check_ddpm_reduction},
        {"ddim_determinism_consistency", check_ddim_determinism_consistency},
        {"reconstruction_trend", check_reconstruction_trend},
        {"integrator_agreement", check_integrator_agreement},
        {"discrete_consistency", check_discrete_consistency},
        {"sigma_hat_degradation", check_sigma_hat_degradation},
        {"timing_linearity", check_timing_linearity},
        {"gradient_check", check_gradient},
        {"slerp_endpoints", check_slerp_endpoints},
    };
    return checks;
}

std::vector<CheckResult> run_all_checks() {
    std::vector<CheckResult> results;
    for (const NamedCheck& check : all_checks()) results.push_back(check.run());
    return results;
}

} // namespace diffkit
