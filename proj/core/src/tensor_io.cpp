#include "diffkit/tensor_io.hpp"

#include <fstream>
#include <vector>

#include <json.hpp>

#include "diffkit/errors.hpp"
#include "io_util.hpp"

namespace diffkit {

void write_tensor(const std::filesystem::path& path, const Eigen::MatrixXd& data,
                  const std::string& schedule_hash, std::uint64_t seed) {
    nlohmann::json header = {
        {"dtype", "f32le"},
        {"order", "row-major"},
        {"shape", {data.rows(), data.cols()}},
        {"schedule_hash", schedule_hash},
        {"seed", seed},
    };
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open tensor file for writing: " + path.string());
    out << header.dump() << '\n';

    std::vector<float> payload(static_cast<std::size_t>(data.size()));
    std::size_t idx = 0;
    for (Eigen::Index i = 0; i < data.rows(); ++i)
        for (Eigen::Index j = 0; j < data.cols(); ++j)
            payload[idx++] = static_cast<float>(data(i, j));
    detail::write_f32_le(out, payload.data(), payload.size());
    if (!out) throw IoError("tensor write failed: " + path.string());
}

Tensor read_tensor(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open tensor file: " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw IoError("tensor file missing header: " + path.string());

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw IoError("tensor header is not valid JSON: " + std::string(e.what()));
    }

    Tensor tensor;
    tensor.header.dtype = header.value("dtype", "");
    tensor.header.order = header.value("order", "");
    tensor.header.schedule_hash = header.value("schedule_hash", "");
    tensor.header.seed = header.value("seed", 0ULL);
    if (tensor.header.dtype != "f32le")
        throw IoError("unsupported tensor dtype: " + tensor.header.dtype);
    if (tensor.header.order != "row-major")
        throw IoError("unsupported tensor order: " + tensor.header.order);

    const auto& shape = header.at("shape");
    if (!shape.is_array() || shape.size() != 2)
        throw IoError("tensor shape must be [rows, cols]");
    const Eigen::Index rows = shape[0].get<Eigen::Index>();
    const Eigen::Index cols = shape[1].get<Eigen::Index>();
    if (rows < 0 || cols < 0) throw IoError("negative tensor shape");
    tensor.header.shape = {rows, cols};

    std::vector<float> payload(static_cast<std::size_t>(rows * cols));
    detail::read_f32_le(in, payload.data(), payload.size());
    if (!in) throw IoError("tensor payload truncated: " + path.string());

    tensor.data.resize(rows, cols);
    std::size_t idx = 0;
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j)
            tensor.data(i, j) = static_cast<double>(payload[idx++]);
    return tensor;
}

} // namespace diffkit
