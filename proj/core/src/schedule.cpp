#include "diffkit/schedule.hpp"

#include <algorithm>
#include <cstring>
#include <sstream>
#include <stdexcept>

namespace diffkit {

double NoiseSchedule::alpha(int t) const {
    if (t < 0 || t > T()) {
        throw std::invalid_argument("NoiseSchedule::alpha: t = " + std::to_string(t) +
                                    " out of [0, " + std::to_string(T()) + "]");
    }
    return alphas[static_cast<std::size_t>(t)];
}

NoiseSchedule NoiseSchedule::from_alphas(std::vector<double> alphas) {
    if (alphas.size() < 2) throw std::invalid_argument("NoiseSchedule: need T >= 1");
    if (alphas[0] != 1.0) throw std::invalid_argument("NoiseSchedule: alphas[0] must equal 1");
    for (std::size_t t = 1; t < alphas.size(); ++t) {
        const double a = alphas[t];
        if (!(a > 0.0 && a <= 1.0))
            throw std::invalid_argument("NoiseSchedule: alphas must lie in (0, 1]");
        if (!(a < alphas[t - 1]))
            throw std::invalid_argument("NoiseSchedule: alphas must be strictly decreasing");
    }
    return NoiseSchedule{std::move(alphas)};
}

NoiseSchedule make_linear_beta_schedule(int T, double beta_start, double beta_end) {
    if (T < 1) throw std::invalid_argument("make_linear_beta_schedule: T must be >= 1");
    if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0))
        throw std::invalid_argument(
            "make_linear_beta_schedule: need 0 < beta_start <= beta_end < 1");

    std::vector<double> alphas(static_cast<std::size_t>(T) + 1);
    alphas[0] = 1.0;
    double prod = 1.0;
    for (int t = 1; t <= T; ++t) {
        const double frac = T == 1 ? 0.0 : static_cast<double>(t - 1) / (T - 1);
        const double beta = beta_start + (beta_end - beta_start) * frac;
        prod *= 1.0 - beta;
        alphas[static_cast<std::size_t>(t)] = prod;
    }
    return NoiseSchedule::from_alphas(std::move(alphas));
}

Stepwise stepwise(const NoiseSchedule& schedule, int t) {
    if (t < 1 || t > schedule.T())
        throw std::invalid_argument("stepwise: t out of [1, T]");
    const double ratio = schedule.alpha(t) / schedule.alpha(t - 1);
    return Stepwise{1.0 - ratio, ratio};
}

SpacingMode spacing_mode_from_string(const std::string& s) {
    if (s == "linear") return SpacingMode::Linear;
    if (s == "quadratic") return SpacingMode::Quadratic;
    throw std::invalid_argument("spacing mode must be 'linear' or 'quadratic', got '" + s + "'");
}

std::string to_string(SpacingMode mode) {
    return mode == SpacingMode::Linear ? "linear" : "quadratic";
}

Trajectory Trajectory::from_indices(std::vector<int> indices, int T) {
    if (indices.empty()) throw std::invalid_argument("Trajectory: empty index set");
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] < 1 || indices[i] > T)
            throw std::invalid_argument("Trajectory: index out of [1, T]");
        if (i > 0 && indices[i] <= indices[i - 1])
            throw std::invalid_argument("Trajectory: indices must be strictly increasing");
    }
    if (indices.back() != T)
        throw std::invalid_argument("Trajectory: last index must equal T");
    return Trajectory{std::move(indices)};
}

Trajectory select_subsequence(int T, int S, SpacingMode mode) {
    if (T < 1) throw std::invalid_argument("select_subsequence: T must be >= 1");
    if (S < 1 || S > T)
        throw std::invalid_argument("select_subsequence: require 1 <= S <= T");

    // Integer arithmetic keeps floor(c*i) exact: c = T/S or T/S^2.
    std::vector<int> picked;
    picked.reserve(static_cast<std::size_t>(S));
    for (int i = 1; i <= S; ++i) {
        std::int64_t raw;
        if (mode == SpacingMode::Linear) {
            raw = static_cast<std::int64_t>(T) * i / S;
        } else {
            raw = static_cast<std::int64_t>(T) * i * i /
                  (static_cast<std::int64_t>(S) * S);
        }
        raw = std::clamp<std::int64_t>(raw, 1, T);
        picked.push_back(static_cast<int>(raw));
    }
    std::sort(picked.begin(), picked.end());
    picked.erase(std::unique(picked.begin(), picked.end()), picked.end());
    if (picked.back() != T) picked.push_back(T);

    // Collisions after flooring shrink the set; top up with the largest
    // unused indices below T.
    if (static_cast<int>(picked.size()) < S) {
        std::vector<char> used(static_cast<std::size_t>(T) + 1, 0);
        for (int v : picked) used[static_cast<std::size_t>(v)] = 1;
        for (int v = T - 1; v >= 1 && static_cast<int>(picked.size()) < S; --v) {
            if (!used[static_cast<std::size_t>(v)]) picked.push_back(v);
        }
        std::sort(picked.begin(), picked.end());
    }
    return Trajectory::from_indices(std::move(picked), T);
}

std::uint64_t schedule_hash(const NoiseSchedule& schedule) {
    // FNV-1a over the raw double bits plus T.
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto feed = [&h](std::uint64_t v) {
        for (int b = 0; b < 8; ++b) {
            h ^= (v >> (8 * b)) & 0xffULL;
            h *= 0x100000001b3ULL;
        }
    };
    feed(static_cast<std::uint64_t>(schedule.T()));
    for (double a : schedule.alphas) {
        std::uint64_t bits;
        std::memcpy(&bits, &a, sizeof bits);
        feed(bits);
    }
    return h;
}

std::string schedule_hash_hex(const NoiseSchedule& schedule) {
    std::ostringstream out;
    out << std::hex << schedule_hash(schedule);
    return out.str();
}

} // namespace diffkit
