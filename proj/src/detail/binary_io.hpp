// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <vector>

namespace spectral_bridge::detail {

inline std::uint32_t to_little_endian(std::uint32_t v) {
    if constexpr (std::endian::native == std::endian::little) {
        return v;
    } else {
        return ((v & 0xFFu) << 24) | ((v & 0xFF00u) << 8) | ((v >> 8) & 0xFF00u) | (v >> 24);
    }
}

inline void write_f32_le(std::ostream& out, std::span<const float> values) {
    if constexpr (std::endian::native == std::endian::little) {
        out.write(reinterpret_cast<const char*>(values.data()),
                  static_cast<std::streamsize>(values.size() * sizeof(float)));
    } else {
        for (float f : values) {
            auto bits = to_little_endian(std::bit_cast<std::uint32_t>(f));
            out.write(reinterpret_cast<const char*>(&bits), sizeof bits);
        }
    }
}

/// Returns false on short read.
inline bool read_f32_le(std::istream& in, std::span<float> values) {
    in.read(reinterpret_cast<char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(float)));
    if (in.gcount() != static_cast<std::streamsize>(values.size() * sizeof(float))) return false;
    if constexpr (std::endian::native != std::endian::little) {
        for (float& f : values) {
            f = std::bit_cast<float>(to_little_endian(std::bit_cast<std::uint32_t>(f)));
        }
    }
    return true;
}

} // namespace spectral_bridge::detail
