#include <doctest.h>

#include <cmath>

#include "diffkit/gaussian_process.hpp"
#include "diffkit/mlp_denoiser.hpp"
#include "diffkit/objective.hpp"

using namespace diffkit;

namespace {

// Model that returns exactly the plan's noise draw at each level.
class PlanPerfectDenoiser : public DenoiserModel {
public:
    explicit PlanPerfectDenoiser(const SamplePlan& plan) : plan_(&plan) {}
    Eigen::MatrixXd eval(const StateBatch& x, int t) const override {
        (void)x;
        return plan_->eps[static_cast<std::size_t>(t - 1)];
    }
    std::string_view kind() const override { return "plan-perfect"; }

private:
    const SamplePlan* plan_;
};

// Per-timestep constant-output table.
class LookupDenoiser : public DenoiserModel {
public:
    explicit LookupDenoiser(Eigen::MatrixXd table) : table_(std::move(table)) {}
    Eigen::MatrixXd eval(const StateBatch& x, int t) const override {
        return table_.row(t - 1).replicate(x.data.rows(), 1);
    }
    std::string_view kind() const override { return "lookup"; }
    Eigen::MatrixXd table_;
};

// Generic Gaussian KL oracle (isotropic covariances), independent of the
// library's equal-covariance shortcut.
double generic_gaussian_kl(const Eigen::RowVectorXd& m1, double v1, const Eigen::RowVectorXd& m2,
                           double v2) {
    const double d = static_cast<double>(m1.size());
    return 0.5 * (d * (v1 / v2) + (m2 - m1).squaredNorm() / v2 - d + d * std::log(v2 / v1));
}

NoiseSchedule small_schedule() { return make_linear_beta_schedule(10, 0.05, 0.35); }

MixtureSpec plan_mixture() {
    MixtureSpec spec;
    spec.weights = Eigen::Vector2d(0.5, 0.5);
    spec.means = (Eigen::MatrixXd(2, 2) << 1.5, 0.3, -1.5, -0.3).finished();
    spec.component_std = 0.4;
    return spec;
}

Eigen::VectorXd valid_sigma(const NoiseSchedule& ns, Rng& rng) {
    Eigen::VectorXd sigma(ns.T());
    for (int t = 1; t <= ns.T(); ++t) {
        const double cap = t == 1 ? 0.6 : std::sqrt(1.0 - ns.alpha(t - 1));
        sigma(t - 1) = cap * (0.15 + 0.8 * rng.uniform());
    }
    return sigma;
}

} // namespace

TEST_CASE("l_gamma vanishes for the plan-perfect model") {
    const NoiseSchedule ns = small_schedule();
    Rng rng(1);
    const SamplePlan plan = SamplePlan::make(ns, plan_mixture().sample(32, rng), 5);
    const PlanPerfectDenoiser perfect(plan);
    CHECK(l_gamma(ns, perfect, plan, WeightVector::ones(ns.T())) == 0.0);
}

TEST_CASE("l_gamma of the zero model estimates T * d") {
    const NoiseSchedule ns = small_schedule();
    Rng rng(2);
    const SamplePlan plan = SamplePlan::make(ns, plan_mixture().sample(4096, rng), 6);
    const ConstantDenoiser zero(Eigen::RowVectorXd::Zero(2));
    const double value = l_gamma(ns, zero, plan, WeightVector::ones(ns.T()));
    CHECK(value == doctest::Approx(10.0 * 2.0).epsilon(0.02));
}

TEST_CASE("l_gamma is linear in the weights") {
    const NoiseSchedule ns = small_schedule();
    Rng rng(3);
    const SamplePlan plan = SamplePlan::make(ns, plan_mixture().sample(16, rng), 7);
    const MlpDenoiser model(2, ns.T(), 16, 2);
    const WeightVector ones = WeightVector::ones(ns.T());
    const WeightVector doubled{2.0 * ones.gamma};
    CHECK(l_gamma(ns, model, plan, doubled) ==
          doctest::Approx(2.0 * l_gamma(ns, model, plan, ones)).epsilon(1e-14));
}

TEST_CASE("j_sigma: model-dependent part vanishes for the plan-perfect model") {
    const NoiseSchedule ns = small_schedule();
    Rng rng(4);
    const SamplePlan plan = SamplePlan::make(ns, plan_mixture().sample(32, rng), 8);
    const PlanPerfectDenoiser perfect(plan);
    Eigen::VectorXd sigma = valid_sigma(ns, rng);
    const ObjectiveValue value = j_sigma(ns, perfect, plan, sigma);
    CHECK(value.theta_dependent < 1e-24);
    CHECK(std::isfinite(value.theta_independent));
}

TEST_CASE("j_sigma rejects zero sigma entries") {
    const NoiseSchedule ns = small_schedule();
    Rng rng(5);
    const SamplePlan plan = SamplePlan::make(ns, plan_mixture().sample(8, rng), 9);
    const MlpDenoiser model(2, ns.T(), 16, 1);
    Eigen::VectorXd sigma = valid_sigma(ns, rng);
    sigma(4) = 0.0;
    CHECK_THROWS_AS(j_sigma(ns, model, plan, sigma), std::domain_error);
}

TEST_CASE("objective terms equal the generic Gaussian KL oracle") {
    const NoiseSchedule ns = small_schedule();
    Rng rng(6);
    const SamplePlan plan = SamplePlan::make(ns, plan_mixture().sample(24, rng), 10);
    const MlpDenoiser model(2, ns.T(), 16, 4);
    const Eigen::VectorXd sigma = valid_sigma(ns, rng);

    for (int t = 2; t <= ns.T(); ++t) {
        const StateBatch x_t = plan.x_at(ns, t);
        const Eigen::MatrixXd f = predict_x0(ns, x_t, t, model.eval(x_t, t));
        const GaussianParams q = reverse_conditional_params(ns, x_t, StateBatch{plan.x0, 0}, t,
                                                            t - 1, sigma(t - 1));
        const GaussianParams p =
            reverse_conditional_params(ns, x_t, StateBatch{f, 0}, t, t - 1, sigma(t - 1));
        double oracle = 0.0;
        for (Eigen::Index i = 0; i < plan.size(); ++i)
            oracle += generic_gaussian_kl(q.mean.row(i), q.var, p.mean.row(i), p.var);
        oracle /= static_cast<double>(plan.size());
        CHECK(objective_term(ns, model, plan, t, sigma(t - 1)) ==
              doctest::Approx(oracle).epsilon(1e-10));
    }
}

TEST_CASE("equivalence residual is constant across independently initialized denoisers") {
    const NoiseSchedule ns = small_schedule();
    Rng rng(7);
    const SamplePlan plan = SamplePlan::make(ns, plan_mixture().sample(48, rng), 11);

    std::vector<MlpDenoiser> models;
    for (int m = 0; m < 3; ++m) models.emplace_back(2, ns.T(), 24, 50 + m);

    for (int rep = 0; rep < 10; ++rep) {
        Eigen::VectorXd sigma = valid_sigma(ns, rng);
        const WeightVector gamma = equivalence_gamma(sigma, ns);
        double lo = 1e300, hi = -1e300;
        for (const MlpDenoiser& model : models) {
            const double residual =
                j_sigma(ns, model, plan, sigma).total() - l_gamma(ns, model, plan, gamma);
            lo = std::min(lo, residual);
            hi = std::max(hi, residual);
        }
        CHECK((hi - lo) / std::max(std::abs(lo), 1e-30) < 1e-8);
    }
}

TEST_CASE("negative control: perturbing one weight breaks constancy") {
    const NoiseSchedule ns = small_schedule();
    Rng rng(8);
    const SamplePlan plan = SamplePlan::make(ns, plan_mixture().sample(48, rng), 12);
    const MlpDenoiser a(2, ns.T(), 24, 60);
    const MlpDenoiser b(2, ns.T(), 24, 61);

    Eigen::VectorXd sigma = valid_sigma(ns, rng);
    WeightVector gamma = equivalence_gamma(sigma, ns);
    gamma.gamma(5) *= 1.1;

    const double res_a = j_sigma(ns, a, plan, sigma).total() - l_gamma(ns, a, plan, gamma);
    const double res_b = j_sigma(ns, b, plan, sigma).total() - l_gamma(ns, b, plan, gamma);
    CHECK(std::abs(res_a - res_b) / std::max(std::abs(res_a), 1e-30) > 1e-6);
}

TEST_CASE("equivalence_gamma: t = 1 inversion and the alpha -> 1 limit") {
    const NoiseSchedule ns = small_schedule();
    // gamma_1 = (1 - a_1) / (2 sigma_1^2 a_1) == 1 at sigma_1^2 = (1 - a_1) / (2 a_1).
    Eigen::VectorXd sigma(ns.T());
    Rng rng(9);
    sigma = valid_sigma(ns, rng);
    sigma(0) = std::sqrt((1.0 - ns.alpha(1)) / (2.0 * ns.alpha(1)));
    const WeightVector gamma = equivalence_gamma(sigma, ns);
    CHECK(gamma.at(1) == doctest::Approx(1.0).epsilon(1e-12));

    // alpha_1 -> 1 with fixed sigma drives gamma_1 -> 0.
    const NoiseSchedule near_one = NoiseSchedule::from_alphas({1.0, 1.0 - 1e-9});
    Eigen::VectorXd s1(1);
    s1(0) = 0.3;
    CHECK(equivalence_gamma(s1, near_one).at(1) < 1e-7);

    Eigen::VectorXd bad = sigma;
    bad(3) = 0.0;
    CHECK_THROWS_AS(equivalence_gamma(bad, ns), std::domain_error);
}

TEST_CASE("separability: the lookup-table minimizer does not depend on gamma") {
    const NoiseSchedule ns = small_schedule();
    Rng rng(10);
    const SamplePlan plan = SamplePlan::make(ns, plan_mixture().sample(64, rng), 13);
    Eigen::VectorXd sigma = valid_sigma(ns, rng);

    // Minimize l_gamma over the per-t table by exact-line-search gradient
    // descent; each table row only appears in its own term, so the argmin
    // must be weight-independent.
    auto minimize = [&](const WeightVector& gamma) {
        Eigen::MatrixXd table = Eigen::MatrixXd::Zero(ns.T(), 2);
        for (int t = 1; t <= ns.T(); ++t) {
            Eigen::RowVectorXd c = Eigen::RowVectorXd::Zero(2);
            const Eigen::RowVectorXd target =
                plan.eps[static_cast<std::size_t>(t - 1)].colwise().mean();
            for (int iter = 0; iter < 2; ++iter) {
                const Eigen::RowVectorXd grad = 2.0 * gamma.at(t) * (c - target);
                if (grad.norm() == 0.0) break;
                // Exact line search on the quadratic: step = 1 / (2 gamma_t).
                c -= grad / (2.0 * gamma.at(t));
            }
            table.row(t - 1) = c;
        }
        return table;
    };

    const Eigen::MatrixXd uniform = minimize(WeightVector::ones(ns.T()));
    const Eigen::MatrixXd weighted = minimize(equivalence_gamma(sigma, ns));
    CHECK((uniform - weighted).cwiseAbs().maxCoeff() < 1e-6);

    // And the argmin really minimizes: nudging any entry increases l_gamma.
    LookupDenoiser at_min(uniform);
    const double base = l_gamma(ns, at_min, plan, WeightVector::ones(ns.T()));
    LookupDenoiser nudged(uniform);
    nudged.table_(4, 0) += 0.05;
    CHECK(l_gamma(ns, nudged, plan, WeightVector::ones(ns.T())) > base);
}

TEST_CASE("per-term structure matches the Markovian bound at sigma_ddpm") {
    const NoiseSchedule ns = small_schedule();
    Rng rng(11);
    const SamplePlan plan = SamplePlan::make(ns, plan_mixture().sample(32, rng), 14);
    const MlpDenoiser model(2, ns.T(), 16, 70);

    for (int t = 2; t <= ns.T(); ++t) {
        const double sigma_t = sigma_ddpm(ns, t);
        const StateBatch x_t = plan.x_at(ns, t);
        const Eigen::MatrixXd f = predict_x0(ns, x_t, t, model.eval(x_t, t));

        // Oracle route: KL between the two Markovian posteriors.
        const GaussianParams q = ddpm_posterior_params(ns, x_t, StateBatch{plan.x0, 0}, t);
        const GaussianParams p = ddpm_posterior_params(ns, x_t, StateBatch{f, 0}, t);
        double oracle = 0.0;
        for (Eigen::Index i = 0; i < plan.size(); ++i)
            oracle += generic_gaussian_kl(q.mean.row(i), q.var, p.mean.row(i), p.var);
        oracle /= static_cast<double>(plan.size());

        CHECK(objective_term(ns, model, plan, t, sigma_t) ==
              doctest::Approx(oracle).epsilon(1e-10));
    }
}

TEST_CASE("objective report: per-term residuals vanish") {
    const NoiseSchedule ns = small_schedule();
    Rng rng(12);
    const SamplePlan plan = SamplePlan::make(ns, plan_mixture().sample(32, rng), 15);
    const MlpDenoiser model(2, ns.T(), 16, 80);
    const Eigen::VectorXd sigma = valid_sigma(ns, rng);

    const auto rows = objective_report(ns, model, plan, sigma);
    REQUIRE(rows.size() == static_cast<std::size_t>(ns.T()));
    for (const ObjectiveReportRow& row : rows) {
        CHECK(row.gamma_t > 0.0);
        CHECK(row.kl_term >= 0.0);
        CHECK(std::abs(row.residual) < 1e-10 * std::max(1.0, row.kl_term));
    }
}
