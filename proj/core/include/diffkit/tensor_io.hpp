#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace diffkit {

// Matrix files: one JSON header line
//   {"dtype":"f32le","order":"row-major","shape":[r,c],"schedule_hash":"..","seed":N}
// followed by the raw row-major little-endian float32 payload.
struct TensorHeader {
    std::vector<Eigen::Index> shape;
    std::string dtype = "f32le";
    std::string order = "row-major";
    std::string schedule_hash;
    std::uint64_t seed = 0;
};

struct Tensor {
    TensorHeader header;
    Eigen::MatrixXd data;
};

void write_tensor(const std::filesystem::path& path, const Eigen::MatrixXd& data,
                  const std::string& schedule_hash, std::uint64_t seed);

Tensor read_tensor(const std::filesystem::path& path);

} // namespace diffkit
