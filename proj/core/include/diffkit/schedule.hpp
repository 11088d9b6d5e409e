#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace diffkit {

// Cumulative noise schedule. alphas[t] holds the cumulative product
// (the usual "alpha bar") with the convention alphas[0] == 1; entries are
// strictly decreasing and lie in (0, 1].
struct NoiseSchedule {
    std::vector<double> alphas;

    int T() const { return static_cast<int>(alphas.size()) - 1; }
    double alpha(int t) const;

    // Validates the invariants (alphas[0] == 1 exactly, strictly
    // decreasing, entries in (0, 1]) and takes ownership.
    static NoiseSchedule from_alphas(std::vector<double> alphas);
};

// Linear stepwise-beta schedule: beta_t interpolates beta_start..beta_end
// over t = 1..T, alphas are the running products of (1 - beta_t).
NoiseSchedule make_linear_beta_schedule(int T, double beta_start, double beta_end);

struct Stepwise {
    double beta;       // 1 - alpha_t / alpha_{t-1}
    double alpha_step; // alpha_t / alpha_{t-1}
};

// Per-step quantities recovered from the cumulative schedule.
Stepwise stepwise(const NoiseSchedule& schedule, int t);

enum class SpacingMode { Linear, Quadratic };

SpacingMode spacing_mode_from_string(const std::string& s);
std::string to_string(SpacingMode mode);

// Increasing subsequence of [1..T]; the last element is always T.
struct Trajectory {
    std::vector<int> indices;

    int S() const { return static_cast<int>(indices.size()); }
    int at(int i) const { return indices.at(static_cast<std::size_t>(i) - 1); } // 1-based

    static Trajectory from_indices(std::vector<int> indices, int T);
};

// Picks S timesteps out of [1..T]: floor(c*i) with c = T/S (linear) or
// floor(c*i^2) with c = T/S^2 (quadratic), then clamps to [1,T],
// deduplicates, forces the last element to T, and tops up with the
// largest unused indices below T if collisions left fewer than S.
Trajectory select_subsequence(int T, int S, SpacingMode mode);

// Stable content hash of the schedule (used to stamp files).
std::uint64_t schedule_hash(const NoiseSchedule& schedule);
std::string schedule_hash_hex(const NoiseSchedule& schedule);

} // namespace diffkit
