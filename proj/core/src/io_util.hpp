#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

namespace diffkit::detail {

// File payloads are little-endian; swap on big-endian hosts.
inline constexpr bool kLittleEndian = std::endian::native == std::endian::little;

inline std::uint32_t byteswap32(std::uint32_t v) {
    return ((v & 0xff000000u) >> 24) | ((v & 0x00ff0000u) >> 8) | ((v & 0x0000ff00u) << 8) |
           ((v & 0x000000ffu) << 24);
}

inline std::uint64_t byteswap64(std::uint64_t v) {
    return (static_cast<std::uint64_t>(byteswap32(static_cast<std::uint32_t>(v))) << 32) |
           byteswap32(static_cast<std::uint32_t>(v >> 32));
}

inline void write_f32_le(std::ostream& out, const float* data, std::size_t count) {
    if constexpr (kLittleEndian) {
        out.write(reinterpret_cast<const char*>(data),
                  static_cast<std::streamsize>(count * sizeof(float)));
    } else {
        for (std::size_t i = 0; i < count; ++i) {
            std::uint32_t bits;
            std::memcpy(&bits, &data[i], 4);
            bits = byteswap32(bits);
            out.write(reinterpret_cast<const char*>(&bits), 4);
        }
    }
}

inline void read_f32_le(std::istream& in, float* data, std::size_t count) {
    in.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(count * sizeof(float)));
    if constexpr (!kLittleEndian) {
        for (std::size_t i = 0; i < count; ++i) {
            std::uint32_t bits;
            std::memcpy(&bits, &data[i], 4);
            bits = byteswap32(bits);
            std::memcpy(&data[i], &bits, 4);
        }
    }
}

inline void write_f64_le(std::ostream& out, const double* data, std::size_t count) {
    if constexpr (kLittleEndian) {
        out.write(reinterpret_cast<const char*>(data),
                  static_cast<std::streamsize>(count * sizeof(double)));
    } else {
        for (std::size_t i = 0; i < count; ++i) {
            std::uint64_t bits;
            std::memcpy(&bits, &data[i], 8);
            bits = byteswap64(bits);
            out.write(reinterpret_cast<const char*>(&bits), 8);
        }
    }
}

inline void read_f64_le(std::istream& in, double* data, std::size_t count) {
    in.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(count * sizeof(double)));
    if constexpr (!kLittleEndian) {
        for (std::size_t i = 0; i < count; ++i) {
            std::uint64_t bits;
            std::memcpy(&bits, &data[i], 8);
            bits = byteswap64(bits);
            std::memcpy(&data[i], &bits, 8);
        }
    }
}

} // namespace diffkit::detail
