#include "diffkit/mlp_denoiser.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "diffkit/errors.hpp"
#include "io_util.hpp"

namespace diffkit {

namespace {

// Xavier-uniform init.
void init_matrix(Eigen::MatrixXd& w, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    for (Eigen::Index i = 0; i < w.rows(); ++i)
        for (Eigen::Index j = 0; j < w.cols(); ++j)
            w(i, j) = (2.0 * rng.uniform() - 1.0) * limit;
}

} // namespace

MlpDenoiser::MlpDenoiser(int d, int T, int hidden, std::uint64_t init_seed)
    : d_(d), T_(T), hidden_(hidden) {
    if (d < 1 || T < 1 || hidden < 1)
        throw std::invalid_argument("MlpDenoiser: d, T and hidden must be positive");
    const int n_in = d_ + kTimeFeatures;
    w1_.resize(hidden_, n_in);
    w2_.resize(hidden_, hidden_);
    w3_.resize(d_, hidden_);
    b1_ = Eigen::VectorXd::Zero(hidden_);
    b2_ = Eigen::VectorXd::Zero(hidden_);
    b3_ = Eigen::VectorXd::Zero(d_);
    Rng rng(mix64(init_seed ^ 0x6d6c705fULL));
    init_matrix(w1_, rng);
    init_matrix(w2_, rng);
    init_matrix(w3_, rng);
}

Eigen::VectorXd MlpDenoiser::features(const Eigen::RowVectorXd& x, int t) const {
    Eigen::VectorXd z(d_ + kTimeFeatures);
    z.head(d_) = x.transpose();
    const double u = static_cast<double>(t) / T_;
    for (int k = 0; k < kTimeFeatures / 2; ++k) {
        const double w = M_PI * std::ldexp(1.0, k) * u;
        z(d_ + 2 * k) = std::sin(w);
        z(d_ + 2 * k + 1) = std::cos(w);
    }
    return z;
}

Eigen::RowVectorXd MlpDenoiser::forward_row(const Eigen::RowVectorXd& x, int t) const {
    const Eigen::VectorXd z = features(x, t);
    const Eigen::VectorXd h1 = (w1_ * z + b1_).array().tanh();
    const Eigen::VectorXd h2 = (w2_ * h1 + b2_).array().tanh();
    return (w3_ * h2 + b3_).transpose();
}

Eigen::MatrixXd MlpDenoiser::eval(const StateBatch& x, int t) const {
    if (x.data.cols() != d_)
        throw std::invalid_argument("MlpDenoiser::eval: dimension mismatch");
    if (t < 1 || t > T_) throw std::invalid_argument("MlpDenoiser::eval: t out of [1, T]");
    Eigen::MatrixXd out(x.data.rows(), d_);
    // Row-at-a-time so batched and per-row evaluation agree bitwise.
    for (Eigen::Index i = 0; i < x.data.rows(); ++i)
        out.row(i) = forward_row(x.data.row(i), t);
    return out;
}

int MlpDenoiser::param_count() const {
    return static_cast<int>(w1_.size() + b1_.size() + w2_.size() + b2_.size() + w3_.size() +
                            b3_.size());
}

Eigen::VectorXd MlpDenoiser::params() const {
    Eigen::VectorXd packed(param_count());
    Eigen::Index off = 0;
    for (const auto* m : {&w1_, &w2_, &w3_}) {
        packed.segment(off, m->size()) = Eigen::Map<const Eigen::VectorXd>(m->data(), m->size());
        off += m->size();
    }
    for (const auto* v : {&b1_, &b2_, &b3_}) {
        packed.segment(off, v->size()) = *v;
        off += v->size();
    }
    return packed;
}

void MlpDenoiser::set_params(const Eigen::VectorXd& packed) {
    if (packed.size() != param_count())
        throw std::invalid_argument("MlpDenoiser::set_params: size mismatch");
    Eigen::Index off = 0;
    for (auto* m : {&w1_, &w2_, &w3_}) {
        Eigen::Map<Eigen::VectorXd>(m->data(), m->size()) = packed.segment(off, m->size());
        off += m->size();
    }
    for (auto* v : {&b1_, &b2_, &b3_}) {
        *v = packed.segment(off, v->size());
        off += v->size();
    }
}

double MlpDenoiser::loss_and_grad(const NoiseSchedule& schedule, const Eigen::MatrixXd& x0,
                                  const Eigen::VectorXi& ts, const Eigen::MatrixXd& eps,
                                  Eigen::VectorXd* grad) const {
    const Eigen::Index n = x0.rows();
    if (ts.size() != n || eps.rows() != n || eps.cols() != d_ || x0.cols() != d_)
        throw std::invalid_argument("MlpDenoiser::loss_and_grad: shape mismatch");

    Eigen::MatrixXd dw1, dw2, dw3;
    Eigen::VectorXd db1, db2, db3;
    if (grad) {
        dw1 = Eigen::MatrixXd::Zero(w1_.rows(), w1_.cols());
        dw2 = Eigen::MatrixXd::Zero(w2_.rows(), w2_.cols());
        dw3 = Eigen::MatrixXd::Zero(w3_.rows(), w3_.cols());
        db1 = Eigen::VectorXd::Zero(b1_.size());
        db2 = Eigen::VectorXd::Zero(b2_.size());
        db3 = Eigen::VectorXd::Zero(b3_.size());
    }

    double loss = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const int t = ts(i);
        const double a = schedule.alpha(t);
        const Eigen::RowVectorXd x_t =
            std::sqrt(a) * x0.row(i) + std::sqrt(1.0 - a) * eps.row(i);

        const Eigen::VectorXd z = features(x_t, t);
        const Eigen::VectorXd h1 = (w1_ * z + b1_).array().tanh();
        const Eigen::VectorXd h2 = (w2_ * h1 + b2_).array().tanh();
        const Eigen::VectorXd out = w3_ * h2 + b3_;

        const Eigen::VectorXd resid = out - eps.row(i).transpose();
        loss += resid.squaredNorm();

        if (grad) {
            const Eigen::VectorXd g3 = (2.0 / static_cast<double>(n)) * resid;
            dw3.noalias() += g3 * h2.transpose();
            db3 += g3;
            const Eigen::VectorXd g2 =
                (w3_.transpose() * g3).cwiseProduct((1.0 - h2.array().square()).matrix());
            dw2.noalias() += g2 * h1.transpose();
            db2 += g2;
            const Eigen::VectorXd g1 =
                (w2_.transpose() * g2).cwiseProduct((1.0 - h1.array().square()).matrix());
            dw1.noalias() += g1 * z.transpose();
            db1 += g1;
        }
    }
    loss /= static_cast<double>(n);

    if (grad) {
        grad->resize(param_count());
        Eigen::Index off = 0;
        for (const auto* m : {&dw1, &dw2, &dw3}) {
            grad->segment(off, m->size()) =
                Eigen::Map<const Eigen::VectorXd>(m->data(), m->size());
            off += m->size();
        }
        for (const auto* v : {&db1, &db2, &db3}) {
            grad->segment(off, v->size()) = *v;
            off += v->size();
        }
    }
    return loss;
}

MlpDenoiser train_toy_denoiser(const MixtureSpec& data, const NoiseSchedule& schedule,
                               const TrainConfig& config) {
    data.validate();
    if (config.steps < 0 || config.batch < 1 || !(config.lr > 0.0))
        throw std::invalid_argument("train_toy_denoiser: bad config");

    MlpDenoiser model(data.dim(), schedule.T(), config.hidden, config.seed);
    NoiseStream stream(config.seed);

    Eigen::VectorXd theta = model.params();
    Eigen::VectorXd m = Eigen::VectorXd::Zero(theta.size());
    Eigen::VectorXd v = Eigen::VectorXd::Zero(theta.size());
    const double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;

    Eigen::VectorXd grad;
    Eigen::MatrixXd eps(config.batch, data.dim());
    Eigen::VectorXi ts(config.batch);
    for (int step = 1; step <= config.steps; ++step) {
        Rng rng = stream.keyed(NoiseStream::Domain::Train, step);
        const Eigen::MatrixXd x0 = data.sample(config.batch, rng);
        for (int i = 0; i < config.batch; ++i) ts(i) = 1 + rng.uniform_int(schedule.T());
        rng.fill_normal(eps);

        const double loss = model.loss_and_grad(schedule, x0, ts, eps, &grad);
        if (!std::isfinite(loss)) {
            throw TrainingError("train_toy_denoiser: non-finite loss at step " +
                                std::to_string(step) + " (lr = " + std::to_string(config.lr) +
                                ")");
        }

        const double bc1 = 1.0 - std::pow(beta1, step);
        const double bc2 = 1.0 - std::pow(beta2, step);
        m = beta1 * m + (1.0 - beta1) * grad;
        v = beta2 * v + (1.0 - beta2) * grad.cwiseProduct(grad);
        theta -= (config.lr * (m / bc1).array() / ((v / bc2).array().sqrt() + adam_eps)).matrix();
        model.set_params(theta);
    }
    return model;
}

void MlpDenoiser::save(const std::filesystem::path& path, const std::string& schedule_hash,
                       std::uint64_t seed) const {
    nlohmann::json header = {
        {"kind", "mlp"},
        {"d", d_},
        {"T", T_},
        {"hidden", hidden_},
        {"time_features", kTimeFeatures},
        {"dtype", "f64le"},
        {"param_count", param_count()},
        {"schedule_hash", schedule_hash},
        {"seed", seed},
    };
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open checkpoint for writing: " + path.string());
    out << header.dump() << '\n';
    const Eigen::VectorXd packed = params();
    detail::write_f64_le(out, packed.data(), static_cast<std::size_t>(packed.size()));
    if (!out) throw IoError("checkpoint write failed: " + path.string());
}

MlpDenoiser MlpDenoiser::load(const std::filesystem::path& path,
                              const std::string& expected_schedule_hash) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint: " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw IoError("checkpoint missing header: " + path.string());

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw IoError("checkpoint header is not valid JSON: " + std::string(e.what()));
    }
    if (header.value("kind", "") != "mlp" || header.value("dtype", "") != "f64le")
        throw IoError("unsupported checkpoint format");
    if (!expected_schedule_hash.empty() &&
        header.value("schedule_hash", "") != expected_schedule_hash)
        throw IoError("checkpoint schedule hash mismatch (model was trained for a different "
                      "schedule)");

    MlpDenoiser model(header.at("d").get<int>(), header.at("T").get<int>(),
                      header.at("hidden").get<int>(), 0);
    const int count = header.at("param_count").get<int>();
    if (count != model.param_count()) throw IoError("checkpoint parameter count mismatch");

    Eigen::VectorXd packed(count);
    detail::read_f64_le(in, packed.data(), static_cast<std::size_t>(count));
    if (!in) throw IoError("checkpoint payload truncated: " + path.string());
    model.set_params(packed);
    return model;
}

} // namespace diffkit
