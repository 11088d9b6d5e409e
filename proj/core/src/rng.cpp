#include "diffkit/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace diffkit {

double Rng::normal() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    // u1 in (0, 1] keeps the log finite.
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * M_PI * u2;
    spare_ = r * std::sin(angle);
    have_spare_ = true;
    return r * std::cos(angle);
}

int Rng::uniform_int(int n) {
    if (n <= 0) throw std::invalid_argument("Rng::uniform_int: n must be positive");
    // Rejection-free modulo is fine here; n is tiny relative to 2^64.
    return static_cast<int>(next_u64() % static_cast<std::uint64_t>(n));
}

void Rng::fill_normal(Eigen::Ref<Eigen::MatrixXd> out) {
    for (Eigen::Index i = 0; i < out.rows(); ++i)
        for (Eigen::Index j = 0; j < out.cols(); ++j) out(i, j) = normal();
}

Eigen::RowVectorXd NoiseStream::step_noise(std::int64_t chain, std::int64_t t, int d) const {
    Rng rng = keyed(Domain::Step, chain, t);
    Eigen::RowVectorXd row(d);
    for (int j = 0; j < d; ++j) row(j) = rng.normal();
    return row;
}

Eigen::RowVectorXd NoiseStream::init_noise(std::int64_t chain, int d) const {
    Rng rng = keyed(Domain::Init, chain);
    Eigen::RowVectorXd row(d);
    for (int j = 0; j < d; ++j) row(j) = rng.normal();
    return row;
}

} // namespace diffkit
