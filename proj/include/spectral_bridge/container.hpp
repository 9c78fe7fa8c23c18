// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace spectral_bridge {

struct TensorRecord {
    std::string name;
    std::vector<std::int64_t> shape;
    std::vector<float> data;

    bool operator==(const TensorRecord&) const = default;
};

/// Versioned parameter container:
///   "SBCKPT 1\n"
///   "header <nbytes>\n" followed by nbytes of UTF-8 "key=value\n" lines
///   "tensors <count>\n" then per tensor "<name> <rank> <d0> ... <dk>\n" and raw little-endian float32.
struct Container {
    std::map<std::string, std::string> header;
    std::vector<TensorRecord> tensors;

    const TensorRecord& tensor(const std::string& name) const;
    const std::string& get(const std::string& key) const;

    bool operator==(const Container&) const = default;
};

void write_container(const Container& c, std::ostream& out);
Container read_container(std::istream& in);
void save_container(const Container& c, const std::filesystem::path& path);
Container load_container(const std::filesystem::path& path);

} // namespace spectral_bridge
