#include "diffkit/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "diffkit/gaussian_process.hpp"

namespace diffkit {

namespace {

// Cumulative alpha at trajectory slot i, with the tau_0 := 0 convention.
double alpha_at_slot(const NoiseSchedule& schedule, const Trajectory& traj, int i) {
    return i == 0 ? 1.0 : schedule.alpha(traj.at(i));
}

void check_slot(const Trajectory& traj, int i) {
    if (i < 1 || i > traj.S())
        throw std::invalid_argument("trajectory slot out of [1, S]");
}

} // namespace

double sigma_eta(const NoiseSchedule& schedule, const Trajectory& traj, int i, double eta) {
    check_slot(traj, i);
    if (eta < 0.0) throw std::invalid_argument("sigma_eta: eta must be >= 0");
    const double a_prev = alpha_at_slot(schedule, traj, i - 1);
    const double a_cur = alpha_at_slot(schedule, traj, i);
    return eta * std::sqrt((1.0 - a_prev) / (1.0 - a_cur)) * std::sqrt(1.0 - a_cur / a_prev);
}

double sigma_hat(const NoiseSchedule& schedule, const Trajectory& traj, int i) {
    check_slot(traj, i);
    const double a_prev = alpha_at_slot(schedule, traj, i - 1);
    const double a_cur = alpha_at_slot(schedule, traj, i);
    return std::sqrt(1.0 - a_cur / a_prev);
}

SigmaPolicy SigmaPolicy::eta(double eta) {
    if (eta < 0.0) throw std::invalid_argument("SigmaPolicy::eta: eta must be >= 0");
    SigmaPolicy p;
    p.kind_ = Kind::Eta;
    p.eta_ = eta;
    return p;
}

SigmaPolicy SigmaPolicy::sigma_hat() {
    SigmaPolicy p;
    p.kind_ = Kind::SigmaHat;
    return p;
}

SigmaPolicy SigmaPolicy::explicit_vector(std::vector<double> sigmas) {
    for (double s : sigmas)
        if (!(s >= 0.0)) throw std::invalid_argument("SigmaPolicy: sigma entries must be >= 0");
    SigmaPolicy p;
    p.kind_ = Kind::Explicit;
    p.explicit_ = std::move(sigmas);
    return p;
}

StepSigmas SigmaPolicy::resolve(const NoiseSchedule& schedule, const Trajectory& traj,
                                int i) const {
    check_slot(traj, i);
    switch (kind_) {
        case Kind::Eta: {
            const double s = diffkit::sigma_eta(schedule, traj, i, eta_);
            return {s, s};
        }
        case Kind::SigmaHat:
            // Over-dispersed noise; the direction coefficient keeps sigma(1)
            // so its radicand stays valid.
            return {diffkit::sigma_hat(schedule, traj, i),
                    diffkit::sigma_eta(schedule, traj, i, 1.0)};
        case Kind::Explicit: {
            if (static_cast<int>(explicit_.size()) != traj.S())
                throw std::invalid_argument(
                    "SigmaPolicy: explicit sigma vector length must equal S");
            const double s = explicit_[static_cast<std::size_t>(i) - 1];
            return {s, s};
        }
    }
    throw std::logic_error("unreachable");
}

void SigmaPolicy::validate(const NoiseSchedule& schedule, const Trajectory& traj) const {
    for (int i = 1; i <= traj.S(); ++i) {
        const StepSigmas s = resolve(schedule, traj, i);
        if (i == 1) continue; // final transition drops the direction term
        const double a_to = schedule.alpha(traj.at(i - 1));
        const double slack = 64.0 * std::numeric_limits<double>::epsilon();
        if (s.direction * s.direction > 1.0 - a_to + slack) {
            std::ostringstream msg;
            msg << "SigmaPolicy: sigma(" << i << ")^2 = " << s.direction * s.direction
                << " exceeds 1 - alpha_{tau_{i-1}} = " << 1.0 - a_to;
            throw std::invalid_argument(msg.str());
        }
    }
}

std::string SigmaPolicy::label() const {
    switch (kind_) {
        case Kind::Eta: {
            std::ostringstream out;
            out << "eta=" << eta_;
            return out.str();
        }
        case Kind::SigmaHat:
            return "sigma_hat";
        case Kind::Explicit:
            return "explicit";
    }
    return "?";
}

bool SigmaPolicy::deterministic() const { return kind_ == Kind::Eta && eta_ == 0.0; }

StateBatch generalized_step(const NoiseSchedule& schedule, const StateBatch& x,
                            const Trajectory& traj, int i, const DenoiserModel& model,
                            const SigmaPolicy& policy, const Eigen::MatrixXd* noise) {
    check_slot(traj, i);
    const int t_from = traj.at(i);
    const int t_to = i >= 2 ? traj.at(i - 1) : 0;
    if (x.t != t_from)
        throw std::invalid_argument("generalized_step: x.t must equal tau_i");

    const Eigen::MatrixXd eps_hat = model.eval(x, t_from);
    const Eigen::MatrixXd x0_pred = predict_x0(schedule, x, t_from, eps_hat);
    const StepSigmas sigmas = policy.resolve(schedule, traj, i);

    StateBatch out;
    out.t = t_to;
    if (t_to == 0) {
        // tau_0 := 0, alpha = 1: the update emits the predicted x_0; the
        // noise term survives only when the resolved sigma is positive.
        out.data = x0_pred;
    } else {
        const double a_to = schedule.alpha(t_to);
        const double rad = 1.0 - a_to - sigmas.direction * sigmas.direction;
        const double slack = 64.0 * std::numeric_limits<double>::epsilon() *
                             (1.0 - a_to + sigmas.direction * sigmas.direction);
        if (rad < -slack)
            throw std::domain_error("generalized_step: negative direction radicand (policy "
                                    "infeasible for this transition)");
        out.data = std::sqrt(a_to) * x0_pred + std::sqrt(std::max(rad, 0.0)) * eps_hat;
    }
    if (sigmas.noise > 0.0) {
        if (noise == nullptr)
            throw std::invalid_argument("generalized_step: noise required when sigma > 0");
        if (noise->rows() != x.data.rows() || noise->cols() != x.data.cols())
            throw std::invalid_argument("generalized_step: noise shape mismatch");
        out.data += sigmas.noise * (*noise);
    }
    return out;
}

namespace {

struct BlockResult {
    Eigen::MatrixXd x0;
    std::vector<Eigen::MatrixXd> intermediates;
};

BlockResult run_block(const NoiseSchedule& schedule, const Eigen::MatrixXd& x_T_block,
                      Eigen::Index chain_offset, const Trajectory& traj,
                      const DenoiserModel& model, const SigmaPolicy& policy,
                      const NoiseStream& stream, bool record) {
    const int S = traj.S();
    const int d = static_cast<int>(x_T_block.cols());
    BlockResult result;
    if (record) result.intermediates.reserve(static_cast<std::size_t>(S));

    StateBatch cur{x_T_block, traj.at(S)};
    Eigen::MatrixXd noise(x_T_block.rows(), d);
    for (int i = S; i >= 1; --i) {
        const StepSigmas sigmas = policy.resolve(schedule, traj, i);
        const Eigen::MatrixXd* noise_ptr = nullptr;
        if (sigmas.noise > 0.0) {
            for (Eigen::Index r = 0; r < noise.rows(); ++r)
                noise.row(r) = stream.step_noise(chain_offset + r, traj.at(i), d);
            noise_ptr = &noise;
        }
        cur = generalized_step(schedule, cur, traj, i, model, policy, noise_ptr);
        if (record) result.intermediates.push_back(cur.data);
    }
    result.x0 = std::move(cur.data);
    return result;
}

} // namespace

TrajectoryRun run_trajectory(const NoiseSchedule& schedule, const StateBatch& x_T,
                             const Trajectory& traj, const DenoiserModel& model,
                             const SigmaPolicy& policy, const NoiseStream& stream,
                             const RunOptions& options) {
    x_T.validate();
    const int S = traj.S();
    if (traj.at(S) != schedule.T())
        throw std::invalid_argument("run_trajectory: trajectory must end at T");
    if (x_T.t != schedule.T())
        throw std::invalid_argument("run_trajectory: x_T.t must equal T");
    policy.validate(schedule, traj);

    const Eigen::Index n = x_T.batch();
    const int threads = std::clamp<int>(options.threads, 1, static_cast<int>(n));

    TrajectoryRun run;
    if (threads == 1) {
        BlockResult block = run_block(schedule, x_T.data, 0, traj, model, policy, stream,
                                      options.record_intermediates);
        run.x0 = StateBatch{std::move(block.x0), 0};
        if (options.record_intermediates) {
            for (int i = S; i >= 1; --i) {
                const int t = i >= 2 ? traj.at(i - 1) : 0;
                run.intermediates.push_back(
                    StateBatch{std::move(block.intermediates[static_cast<std::size_t>(S - i)]), t});
            }
        }
        return run;
    }

    // Chains are row-independent, so contiguous blocks can run in parallel
    // and stitch back bitwise-identically to the serial pass.
    std::vector<Eigen::Index> starts;
    const Eigen::Index per = (n + threads - 1) / threads;
    for (Eigen::Index s = 0; s < n; s += per) starts.push_back(s);

    std::vector<BlockResult> results(starts.size());
    std::vector<std::thread> pool;
    pool.reserve(starts.size());
    for (std::size_t b = 0; b < starts.size(); ++b) {
        pool.emplace_back([&, b]() {
            const Eigen::Index begin = starts[b];
            const Eigen::Index rows = std::min<Eigen::Index>(per, n - begin);
            results[b] = run_block(schedule, x_T.data.middleRows(begin, rows), begin, traj,
                                   model, policy, stream, options.record_intermediates);
        });
    }
    for (auto& th : pool) th.join();

    run.x0 = StateBatch{Eigen::MatrixXd(n, x_T.dim()), 0};
    for (std::size_t b = 0; b < starts.size(); ++b) {
        const Eigen::Index begin = starts[b];
        run.x0.data.middleRows(begin, results[b].x0.rows()) = results[b].x0;
    }
    if (options.record_intermediates) {
        for (int i = S; i >= 1; --i) {
            const int t = i >= 2 ? traj.at(i - 1) : 0;
            StateBatch state{Eigen::MatrixXd(n, x_T.dim()), t};
            for (std::size_t b = 0; b < starts.size(); ++b) {
                const Eigen::Index begin = starts[b];
                const Eigen::MatrixXd& block =
                    results[b].intermediates[static_cast<std::size_t>(S - i)];
                state.data.middleRows(begin, block.rows()) = block;
            }
            run.intermediates.push_back(std::move(state));
        }
    }
    return run;
}

} // namespace diffkit
