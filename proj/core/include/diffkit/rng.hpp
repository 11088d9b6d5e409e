#pragma once

#include <cstdint>

#include <Eigen/Core>

namespace diffkit {

// splitmix64 finalizer; also used as the generic 64-bit mixer for key
// derivation.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Small sequential generator (splitmix64 state walk + Box-Muller normals).
// Deterministic across platforms; no libc++/libstdc++ distribution
// differences leak into results.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Standard normal via Box-Muller; the second value of each pair is cached.
    double normal();

    // Uniform integer in [0, n).
    int uniform_int(int n);

    void fill_normal(Eigen::Ref<Eigen::MatrixXd> out);

private:
    std::uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// Domain-separated deterministic noise streams. Every draw is a pure
// function of (seed, domain, a, b), so results do not depend on batch
// partitioning or evaluation order. The sampler keys step noise by
// (chain, timestep); data/init draws use their own domains.
class NoiseStream {
public:
    enum class Domain : std::uint64_t {
        Init = 1,  // x_T draws
        Step = 2,  // per-transition sampler noise
        Data = 3,  // x_0 draws from the data distribution
        Plan = 4,  // objective SamplePlan noise
        Train = 5, // training batches
    };

    explicit NoiseStream(std::uint64_t seed) : seed_(seed) {}

    std::uint64_t seed() const { return seed_; }

    Rng keyed(Domain domain, std::int64_t a, std::int64_t b = 0) const {
        std::uint64_t k = mix64(seed_ ^ mix64(static_cast<std::uint64_t>(domain)));
        k = mix64(k ^ static_cast<std::uint64_t>(a));
        k = mix64(k ^ static_cast<std::uint64_t>(b));
        return Rng(k);
    }

    // Noise applied when stepping chain `chain` out of timestep `t`.
    Eigen::RowVectorXd step_noise(std::int64_t chain, std::int64_t t, int d) const;

    // Initial latent row for chain `chain`.
    Eigen::RowVectorXd init_noise(std::int64_t chain, int d) const;

private:
    std::uint64_t seed_;
};

} // namespace diffkit
