#include <doctest.h>

#include <cmath>

#include "diffkit/discrete.hpp"
#include "diffkit/rng.hpp"

using namespace diffkit::discrete;
using diffkit::Rng;

namespace {

DiscreteSchedule simple_schedule() {
    // alpha = [1, 0.9, 0.8, 0.6, 0.3, 0]
    return DiscreteSchedule::from_alphas({1.0, 0.9, 0.8, 0.6, 0.3, 0.0});
}

CategoricalState random_simplex(int K, Rng& rng, double floor = 0.01) {
    Eigen::VectorXd raw(K);
    for (int i = 0; i < K; ++i) raw(i) = rng.uniform() + floor;
    return CategoricalState{raw / raw.sum()};
}

} // namespace

TEST_CASE("discrete schedule endpoints are exact") {
    const DiscreteSchedule s = DiscreteSchedule::linear(7);
    CHECK(s.alpha(0) == 1.0);
    CHECK(s.alpha(7) == 0.0);
    CHECK_THROWS_AS(DiscreteSchedule::from_alphas({1.0, 0.5, 0.1}), std::invalid_argument);
    CHECK_THROWS_AS(DiscreteSchedule::from_alphas({0.9, 0.5, 0.0}), std::invalid_argument);
    CHECK_THROWS_AS(DiscreteSchedule::from_alphas({1.0, 0.5, 0.6, 0.0}), std::invalid_argument);
}

TEST_CASE("forward marginal: endpoints and the hand value") {
    const DiscreteSchedule s = simple_schedule();
    const CategoricalState x0 = CategoricalState::one_hot(4, 1);

    // alpha = 1 keeps the one-hot.
    CHECK((cat_forward_marginal(s, x0, 0).probs - x0.probs).cwiseAbs().maxCoeff() == 0.0);
    // alpha = 0 is uniform.
    const CategoricalState at_T = cat_forward_marginal(s, x0, 5);
    for (int i = 0; i < 4; ++i) CHECK(at_T.probs(i) == doctest::Approx(0.25).epsilon(1e-14));

    // K = 4, alpha = 0.6, x0 = e_2 -> [0.1, 0.7, 0.1, 0.1]
    const CategoricalState mid = cat_forward_marginal(s, x0, 3);
    CHECK(mid.probs(0) == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(mid.probs(1) == doctest::Approx(0.7).epsilon(1e-12));
    CHECK(mid.probs(2) == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(mid.probs(3) == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("reverse conditional: hand-computed two-point mixture") {
    // K = 2, alpha_{t-1} = 0.9, alpha_t = 0.8, sigma = 0.5:
    // weights 0.5 on x_t, 0.9 - 0.4 = 0.5 on x_0, and 0.1 - 0.2*0.5 = 0 on uniform.
    const DiscreteSchedule s = simple_schedule();
    const MixtureWeights w = reverse_mixture_weights(s, 2, 0.5);
    CHECK(w.on_xt == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(w.on_x0 == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(w.on_uniform == doctest::Approx(0.0).epsilon(1e-14));

    const CategoricalState x0 = CategoricalState::one_hot(2, 0);
    const CategoricalState x_t = CategoricalState::one_hot(2, 1);
    const CategoricalState out = cat_reverse_conditional(s, x_t, x0, 2, 0.5);
    CHECK(out.probs(0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(out.probs(1) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("reverse conditional: sigma = 0 mixes x0 and uniform only") {
    const DiscreteSchedule s = simple_schedule();
    const CategoricalState x0 = CategoricalState::one_hot(3, 0);
    const CategoricalState x_t = CategoricalState::one_hot(3, 2);
    const CategoricalState out = cat_reverse_conditional(s, x_t, x0, 3, 0.0);
    // weight on x_t is 0: entry 2 only carries the uniform share.
    const double uniform_share = (1.0 - s.alpha(2)) / 3.0;
    CHECK(out.probs(2) == doctest::Approx(uniform_share).epsilon(1e-12));
}

TEST_CASE("reverse conditional: infeasible sigma names the violated weight") {
    const DiscreteSchedule s = simple_schedule();
    const CategoricalState a = CategoricalState::one_hot(2, 0);
    // sigma = 0.8 keeps the x0 weight valid but drives the uniform weight
    // to 0.1 - 0.2*0.8 < 0.
    try {
        cat_reverse_conditional(s, a, a, 2, 0.8);
        FAIL("expected domain_error");
    } catch (const std::domain_error& e) {
        CHECK(std::string(e.what()).find("uniform") != std::string::npos);
    }
    // sigma = 2.0 violates the x0 weight 0.9 - 2*0.8 first.
    try {
        cat_reverse_conditional(s, a, a, 2, 2.0);
        FAIL("expected domain_error");
    } catch (const std::domain_error& e) {
        CHECK(std::string(e.what()).find("x_0") != std::string::npos);
    }
    CHECK_THROWS_AS(cat_reverse_conditional(s, a, a, 2, -0.1), std::domain_error);

    // sigma_max is the exact feasibility edge.
    const double edge = sigma_max(s, 2);
    CHECK_NOTHROW(cat_reverse_conditional(s, a, a, 2, edge - 1e-12));
    CHECK_THROWS_AS(cat_reverse_conditional(s, a, a, 2, edge + 1e-6), std::domain_error);
}

TEST_CASE("model-based reverse equals the conditioned one for a truthful model") {
    const DiscreteSchedule s = simple_schedule();
    const CategoricalState x0 = CategoricalState::one_hot(4, 2);
    const CategoricalState x_t = CategoricalState::one_hot(4, 0);
    const auto truthful = [&x0](const CategoricalState&) { return x0; };
    const CategoricalState via_model = cat_reverse_model(s, x_t, 3, truthful, 0.4);
    const CategoricalState direct = cat_reverse_conditional(s, x_t, x0, 3, 0.4);
    CHECK((via_model.probs - direct.probs).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("model-based reverse with a uniform prediction stays on the simplex") {
    const DiscreteSchedule s = simple_schedule();
    const CategoricalState x_t = CategoricalState::one_hot(5, 1);
    const auto uniform = [](const CategoricalState& x) {
        return CategoricalState::uniform(x.K());
    };
    const CategoricalState out = cat_reverse_model(s, x_t, 2, uniform, 0.3);
    CHECK_NOTHROW(out.validate());
}

TEST_CASE("KL positivity and the zero case (exhaustive over K <= 5)") {
    const DiscreteSchedule s = simple_schedule();
    Rng rng(41);
    for (int K = 2; K <= 5; ++K) {
        for (int idx = 0; idx < K; ++idx) {
            const CategoricalState x0 = CategoricalState::one_hot(K, idx);
            const CategoricalState x_t = CategoricalState::one_hot(K, (idx + 1) % K);
            const int t = 2;
            const double sigma = 0.5 * sigma_max(s, t);

            // Truthful prediction: KL exactly 0.
            const auto exact = cat_kl_and_bound(s, x_t, x0, t, sigma,
                                                [&x0](const CategoricalState&) { return x0; });
            CHECK(exact.kl == doctest::Approx(0.0).epsilon(1e-15));
            CHECK(exact.bound == doctest::Approx(0.0).epsilon(1e-15));

            // Any other strictly positive prediction: KL > 0 (the x0 weight
            // is positive at this t).
            const CategoricalState off = random_simplex(K, rng);
            const auto wrong = cat_kl_and_bound(s, x_t, x0, t, sigma,
                                                [&off](const CategoricalState&) { return off; });
            CHECK(wrong.kl > 0.0);
        }
    }
}

TEST_CASE("KL convexity bound: direct-summation oracle on a random instance") {
    const DiscreteSchedule s = simple_schedule();
    Rng rng(42);
    const int K = 3, t = 3;
    const CategoricalState x0 = CategoricalState::one_hot(K, 1);
    const CategoricalState x_t = CategoricalState::one_hot(K, 2);
    const double sigma = 0.7 * sigma_max(s, t);
    const CategoricalState pred = random_simplex(K, rng);
    const auto f = [&pred](const CategoricalState&) { return pred; };

    const auto got = cat_kl_and_bound(s, x_t, x0, t, sigma, f);

    // Direct summation of both sides from first principles.
    const MixtureWeights w = reverse_mixture_weights(s, t, sigma);
    Eigen::VectorXd q = w.on_xt * x_t.probs + w.on_x0 * x0.probs +
                        Eigen::VectorXd::Constant(K, w.on_uniform / K);
    Eigen::VectorXd p = w.on_xt * x_t.probs + w.on_x0 * pred.probs +
                        Eigen::VectorXd::Constant(K, w.on_uniform / K);
    double kl = 0.0;
    for (int i = 0; i < K; ++i)
        if (q(i) > 0.0) kl += q(i) * std::log(q(i) / p(i));
    double inner = 0.0;
    for (int i = 0; i < K; ++i)
        if (x0.probs(i) > 0.0) inner += x0.probs(i) * std::log(x0.probs(i) / pred.probs(i));

    CHECK(got.kl == doctest::Approx(kl).epsilon(1e-12));
    CHECK(got.bound == doctest::Approx(w.on_x0 * inner).epsilon(1e-12));
    CHECK(got.kl <= got.bound + 1e-12);
}

TEST_CASE("bound tightness: kl and bound go to zero together as f -> x0") {
    const DiscreteSchedule s = simple_schedule();
    const int K = 4, t = 2;
    const CategoricalState x0 = CategoricalState::one_hot(K, 0);
    const CategoricalState x_t = CategoricalState::one_hot(K, 3);
    const double sigma = 0.5 * sigma_max(s, t);

    double prev_kl = 1e300, prev_bound = 1e300;
    for (double mix : {0.5, 0.1, 0.01, 1e-4}) {
        Eigen::VectorXd probs = (1.0 - mix) * x0.probs +
                                mix * CategoricalState::uniform(K).probs;
        const CategoricalState pred{probs};
        const auto result = cat_kl_and_bound(s, x_t, x0, t, sigma,
                                             [&pred](const CategoricalState&) { return pred; });
        CHECK(result.kl <= result.bound + 1e-12);
        CHECK(result.kl < prev_kl);
        CHECK(result.bound < prev_bound);
        prev_kl = result.kl;
        prev_bound = result.bound;
    }
    CHECK(prev_kl < 1e-6);
    CHECK(prev_bound < 1e-3);
}

TEST_CASE("infinite KL when the prediction has a hard zero under x0 mass") {
    // Dyadic schedule; sigma at the feasibility edge zeroes the uniform
    // weight, so the model's hard zero is not smoothed away.
    const DiscreteSchedule s = DiscreteSchedule::from_alphas({1.0, 0.75, 0.5, 0.0});
    const int K = 3, t = 2;
    const CategoricalState x0 = CategoricalState::one_hot(K, 0);
    const CategoricalState x_t = CategoricalState::one_hot(K, 1);
    const double sigma = 0.5; // uniform weight = 0.25 - 0.5*0.5 = 0 exactly
    const CategoricalState pred = CategoricalState::one_hot(K, 2);
    const auto result = cat_kl_and_bound(s, x_t, x0, t, sigma,
                                         [&pred](const CategoricalState&) { return pred; });
    CHECK(std::isinf(result.kl));
    CHECK(std::isinf(result.bound));
    CHECK(result.kl <= result.bound); // inf <= inf
}

TEST_CASE("marginalization consistency: exhaustive summation") {
    Rng rng(43);
    for (int rep = 0; rep < 50; ++rep) {
        const int K = 2 + rng.uniform_int(7);
        const int T = 2 + rng.uniform_int(15);
        std::vector<double> alphas(static_cast<std::size_t>(T) + 1);
        alphas[0] = 1.0;
        alphas[static_cast<std::size_t>(T)] = 0.0;
        std::vector<double> interior;
        for (int i = 0; i < T - 1; ++i) interior.push_back(rng.uniform());
        std::sort(interior.begin(), interior.end(), std::greater<double>());
        for (int i = 1; i < T; ++i) alphas[static_cast<std::size_t>(i)] = interior[i - 1];
        const DiscreteSchedule schedule = DiscreteSchedule::from_alphas(std::move(alphas));

        const int t = 1 + rng.uniform_int(T);
        const double sigma = rng.uniform() * std::min(sigma_max(schedule, t), 3.0);
        const CategoricalState x0 = CategoricalState::one_hot(K, rng.uniform_int(K));

        const CategoricalState marg_t = cat_forward_marginal(schedule, x0, t);
        Eigen::VectorXd mixed = Eigen::VectorXd::Zero(K);
        for (int j = 0; j < K; ++j) {
            mixed += marg_t.probs(j) *
                     cat_reverse_conditional(schedule, CategoricalState::one_hot(K, j), x0, t,
                                             sigma)
                         .probs;
        }
        const CategoricalState want = cat_forward_marginal(schedule, x0, t - 1);
        CHECK((mixed - want.probs).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("composition of valid steps stays on the simplex") {
    const DiscreteSchedule s = DiscreteSchedule::linear(12);
    Rng rng(44);
    const int K = 6;
    CategoricalState state = cat_forward_marginal(s, CategoricalState::one_hot(K, 2), 12);
    const CategoricalState x0 = CategoricalState::one_hot(K, 2);
    for (int t = 12; t >= 1; --t) {
        const double sigma = rng.uniform() * std::min(sigma_max(s, t), 3.0);
        state = cat_reverse_conditional(s, state, x0, t, sigma);
        CHECK_NOTHROW(state.validate());
    }
}
