// SPDX-License-Identifier: Apache-2.0
#include "spectral_bridge/container.hpp"

#include "detail/binary_io.hpp"
#include "spectral_bridge/error.hpp"

#include <fmt/format.h>
#include <fstream>
#include <sstream>

namespace spectral_bridge {

namespace {
constexpr int kVersion = 1;
}

const TensorRecord& Container::tensor(const std::string& name) const {
    for (const auto& t : tensors) {
        if (t.name == name) return t;
    }
    throw ValidationError(fmt::format("checkpoint has no tensor '{}'", name));
}

const std::string& Container::get(const std::string& key) const {
    auto it = header.find(key);
    if (it == header.end()) throw ValidationError(fmt::format("checkpoint header lacks '{}'", key));
    return it->second;
}

void write_container(const Container& c, std::ostream& out) {
    std::string header;
    for (const auto& [k, v] : c.header) {
        if (k.find_first_of("=\n") != std::string::npos || v.find('\n') != std::string::npos) {
            throw ValidationError(fmt::format("invalid header entry '{}'", k));
        }
        header += k + "=" + v + "\n";
    }
    out << "SBCKPT " << kVersion << "\n";
    out << "header " << header.size() << "\n" << header;
    out << "tensors " << c.tensors.size() << "\n";
    for (const auto& t : c.tensors) {
        if (t.name.empty() || t.name.find_first_of(" \n") != std::string::npos) {
            throw ValidationError(fmt::format("invalid tensor name '{}'", t.name));
        }
        std::int64_t n = 1;
        for (auto d : t.shape) n *= d;
        if (n != static_cast<std::int64_t>(t.data.size())) {
            throw ValidationError(fmt::format("tensor '{}' shape does not match data length", t.name));
        }
        out << t.name << ' ' << t.shape.size();
        for (auto d : t.shape) out << ' ' << d;
        out << '\n';
        detail::write_f32_le(out, t.data);
    }
}

Container read_container(std::istream& in) {
    auto bad = [](const std::string& what) { return ValidationError("malformed checkpoint: " + what); };
    std::string line;
    if (!std::getline(in, line)) throw bad("empty file");
    {
        std::istringstream ls(line);
        std::string magic;
        int version = 0;
        if (!(ls >> magic >> version) || magic != "SBCKPT") throw bad("missing SBCKPT magic");
        if (version != kVersion) throw bad(fmt::format("unsupported version {}", version));
    }
    std::size_t header_bytes = 0;
    {
        if (!std::getline(in, line)) throw bad("missing header size");
        std::istringstream ls(line);
        std::string tag;
        if (!(ls >> tag >> header_bytes) || tag != "header") throw bad("missing header size");
    }
    std::string header(header_bytes, '\0');
    in.read(header.data(), static_cast<std::streamsize>(header_bytes));
    if (in.gcount() != static_cast<std::streamsize>(header_bytes)) throw bad("truncated header");

    Container c;
    std::istringstream hs(header);
    while (std::getline(hs, line)) {
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) throw bad(fmt::format("header line '{}'", line));
        c.header[line.substr(0, eq)] = line.substr(eq + 1);
    }

    std::size_t count = 0;
    {
        if (!std::getline(in, line)) throw bad("missing tensor count");
        std::istringstream ls(line);
        std::string tag;
        if (!(ls >> tag >> count) || tag != "tensors") throw bad("missing tensor count");
    }
    for (std::size_t i = 0; i < count; ++i) {
        if (!std::getline(in, line)) throw bad("truncated tensor list");
        std::istringstream ls(line);
        TensorRecord t;
        std::size_t rank = 0;
        if (!(ls >> t.name >> rank) || rank > 8) throw bad(fmt::format("tensor line '{}'", line));
        std::int64_t n = 1;
        for (std::size_t r = 0; r < rank; ++r) {
            std::int64_t d = 0;
            if (!(ls >> d) || d < 0) throw bad(fmt::format("tensor line '{}'", line));
            t.shape.push_back(d);
            n *= d;
        }
        t.data.resize(static_cast<std::size_t>(n));
        if (!detail::read_f32_le(in, t.data)) throw bad(fmt::format("truncated tensor '{}'", t.name));
        c.tensors.push_back(std::move(t));
    }
    return c;
}

void save_container(const Container& c, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw RuntimeFailure(fmt::format("cannot write '{}'", path.string()));
    write_container(c, out);
    out.flush();
    if (!out) throw RuntimeFailure(fmt::format("I/O error writing '{}'", path.string()));
}

Container load_container(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw RuntimeFailure(fmt::format("cannot open '{}'", path.string()));
    return read_container(in);
}

} // namespace spectral_bridge
