// SPDX-License-Identifier: Apache-2.0
#include "spectral_bridge/checkpoint.hpp"

#include "spectral_bridge/csv.hpp"
#include "spectral_bridge/error.hpp"

#include <fmt/format.h>
#include <sstream>

namespace spectral_bridge {

std::string encode_bands(const std::vector<BandSpec>& bands) {
    std::string out;
    for (std::size_t i = 0; i < bands.size(); ++i) {
        if (i) out += ';';
        out += csv::format_double(bands[i].center_nm) + ":" + csv::format_double(bands[i].fwhm_nm);
    }
    return out;
}

std::vector<BandSpec> decode_bands(const std::string& text) {
    std::vector<BandSpec> out;
    if (text.empty()) return out;
    std::istringstream in(text);
    std::string item;
    while (std::getline(in, item, ';')) {
        auto colon = item.find(':');
        auto c = colon == std::string::npos ? std::nullopt : csv::parse_double(item.substr(0, colon));
        auto f = colon == std::string::npos ? std::nullopt : csv::parse_double(item.substr(colon + 1));
        if (!c || !f) throw ValidationError(fmt::format("malformed band entry '{}'", item));
        out.push_back({*c, *f});
    }
    return out;
}

std::string encode_doubles(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += csv::format_double(v[i]);
    }
    return out;
}

std::vector<double> decode_doubles(const std::string& text) {
    std::vector<double> out;
    if (text.empty()) return out;
    for (const auto& f : csv::split_line(text)) {
        auto v = csv::parse_double(f);
        if (!v) throw ValidationError(fmt::format("malformed number '{}'", f));
        out.push_back(*v);
    }
    return out;
}

TensorRecord to_record(const std::string& name, const nn::Mat<float>& m) {
    TensorRecord t;
    t.name = name;
    t.shape = {m.rows(), m.cols()};
    t.data.assign(m.data(), m.data() + m.size());
    return t;
}

void put_stats(Container& c, const std::string& prefix, const BandStats& s) {
    c.header[prefix + ".bands"] = encode_bands(s.bands());
    c.header[prefix + ".mean"] = encode_doubles(s.raw_mean());
    c.header[prefix + ".m2"] = encode_doubles(s.raw_m2());
    c.header[prefix + ".count"] = std::to_string(s.count());
}

BandStats get_stats(const Container& c, const std::string& prefix) {
    auto count = csv::parse_int(c.get(prefix + ".count"));
    if (!count || *count <= 0) throw ValidationError("malformed checkpoint: bad stats count");
    return BandStats::from_raw(decode_bands(c.get(prefix + ".bands")), decode_doubles(c.get(prefix + ".mean")),
                               decode_doubles(c.get(prefix + ".m2")), static_cast<std::uint64_t>(*count));
}

Container to_container(const ModelCheckpoint& ckpt) {
    Container c;
    c.header["kind"] = "spectral_mae";
    c.header["stage"] = std::string(to_string(ckpt.stage));
    for (const auto& [k, v] : ckpt.config.to_map()) c.header["config." + k] = v;
    c.header["hs_bands"] = encode_bands(ckpt.hs_bands);
    c.header["ms_bands"] = encode_bands(ckpt.ms_bands);
    put_stats(c, "hs_stats", ckpt.hs_stats);
    if (ckpt.ms_stats) put_stats(c, "ms_stats", *ckpt.ms_stats);
    for (std::size_t i = 0; i < ckpt.params.size(); ++i) {
        c.tensors.push_back(to_record(ckpt.params.name(i), ckpt.params[i]));
    }
    return c;
}

ModelCheckpoint model_checkpoint_from(const Container& c) {
    if (c.get("kind") != "spectral_mae") {
        throw ValidationError(fmt::format("checkpoint kind '{}' is not a spectral MAE", c.get("kind")));
    }
    ModelCheckpoint ckpt;
    ckpt.stage = parse_stage(c.get("stage"));
    for (const auto& [k, v] : c.header) {
        if (k.rfind("config.", 0) == 0 && !ckpt.config.set(k.substr(7), v)) {
            throw ValidationError(fmt::format("unknown config key '{}' in checkpoint", k));
        }
    }
    ckpt.config.validate();
    ckpt.hs_bands = decode_bands(c.get("hs_bands"));
    ckpt.ms_bands = decode_bands(c.get("ms_bands"));
    ckpt.hs_stats = get_stats(c, "hs_stats");
    if (c.header.count("ms_stats.count")) ckpt.ms_stats = get_stats(c, "ms_stats");
    for (const auto& t : c.tensors) {
        if (t.shape.size() != 2) throw ValidationError(fmt::format("tensor '{}' is not 2-D", t.name));
        auto i = ckpt.params.add(t.name, t.shape[0], t.shape[1]);
        std::copy(t.data.begin(), t.data.end(), ckpt.params[i].data());
    }
    return ckpt;
}

void save_checkpoint(const ModelCheckpoint& ckpt, const std::filesystem::path& path) {
    save_container(to_container(ckpt), path);
}

ModelCheckpoint load_checkpoint(const std::filesystem::path& path) {
    try {
        return model_checkpoint_from(load_container(path));
    } catch (const ValidationError& e) {
        throw ValidationError(fmt::format("{}: {}", path.string(), e.what()));
    }
}

} // namespace spectral_bridge
