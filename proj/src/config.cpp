// SPDX-License-Identifier: Apache-2.0
#include "spectral_bridge/config.hpp"

#include "spectral_bridge/csv.hpp"
#include "spectral_bridge/error.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>
#include <openssl/evp.h>

#include <fstream>
#include <sstream>

namespace spectral_bridge {

namespace fs = std::filesystem;
namespace pt = boost::property_tree;

namespace {

using KeyPath = pt::ptree::path_type;
KeyPath key_path(const std::string& section, const std::string& key) {
    return KeyPath(section + '\x1f' + key, '\x1f');
}

double to_double(const std::string& where, const std::string& v) {
    auto x = csv::parse_double(v);
    if (!x) throw ValidationError(fmt::format("config {}: expected a number, got '{}'", where, v));
    return *x;
}

int to_int(const std::string& where, const std::string& v) {
    auto x = csv::parse_int(v);
    if (!x) throw ValidationError(fmt::format("config {}: expected an integer, got '{}'", where, v));
    return static_cast<int>(*x);
}

std::uint64_t to_u64(const std::string& where, const std::string& v) {
    auto x = csv::parse_int(v);
    if (!x || *x < 0) throw ValidationError(fmt::format("config {}: expected a non-negative integer, got '{}'", where, v));
    return static_cast<std::uint64_t>(*x);
}

std::vector<std::string> split_list(const std::string& v, char sep) {
    std::vector<std::string> out;
    std::istringstream in(v);
    std::string item;
    while (std::getline(in, item, sep)) {
        auto t = csv::trim(item);
        if (!t.empty()) out.emplace_back(t);
    }
    return out;
}

// "a:b[:c];..." tuples of numbers with a fixed arity.
std::vector<std::vector<double>> tuples(const std::string& where, const std::string& v, std::size_t arity) {
    std::vector<std::vector<double>> out;
    for (const auto& item : split_list(v, ';')) {
        auto parts = split_list(item, ':');
        if (parts.size() != arity) {
            throw ValidationError(fmt::format("config {}: entry '{}' needs {} ':'-separated numbers", where, item, arity));
        }
        std::vector<double> t;
        for (const auto& p : parts) t.push_back(to_double(where, p));
        out.push_back(std::move(t));
    }
    return out;
}

void set_scene(SceneConfig& s, const std::string& key, const std::string& v) {
    const std::string where = "scene." + key;
    if (key == "bands") s.bands = to_int(where, v);
    else if (key == "height") s.height = to_int(where, v);
    else if (key == "width") s.width = to_int(where, v);
    else if (key == "first_nm") s.first_nm = to_double(where, v);
    else if (key == "last_nm") s.last_nm = to_double(where, v);
    else if (key == "band_fwhm_nm") s.band_fwhm_nm = to_double(where, v);
    else if (key == "endmembers") s.endmembers = to_int(where, v);
    else if (key == "spline_knots") s.spline_knots = to_int(where, v);
    else if (key == "blobs") s.blobs = to_int(where, v);
    else if (key == "blob_scale") s.blob_scale = to_double(where, v);
    else if (key == "brightness_jitter") s.brightness_jitter = to_double(where, v);
    else if (key == "noise_std") s.noise_std = to_double(where, v);
    else if (key == "scale") s.scale = to_double(where, v);
    else if (key == "library_seed") s.library_seed = to_u64(where, v);
    else if (key == "lines") {
        s.lines.clear();
        for (const auto& t : tuples(where, v, 3)) s.lines.push_back({t[0], t[1], t[2]});
    } else {
        throw ValidationError(fmt::format("config: unknown key '{}'", where));
    }
}

void set_dataset(DatasetConfig& d, const std::string& key, const std::string& v) {
    const std::string where = "dataset." + key;
    if (key == "tiles") d.tiles = to_int(where, v);
    else if (key == "patches_per_tile") d.patches_per_tile = to_int(where, v);
    else if (key == "seed") d.seed = to_u64(where, v);
    else if (key == "label_gas") d.labels.gas = parse_gas(v);
    else if (key == "label_line") d.labels.line = to_int(where, v);
    else if (key == "label_intercept") d.labels.intercept = to_double(where, v);
    else if (key == "label_slope") d.labels.slope = to_double(where, v);
    else if (key == "label_noise") d.labels.noise_std = to_double(where, v);
    else if (key == "sensor") {
        d.sensor.clear();
        for (const auto& t : tuples(where, v, 2)) d.sensor.emplace_back(t[0], t[1]);
    } else {
        throw ValidationError(fmt::format("config: unknown key '{}'", where));
    }
}

void set_split(ExperimentConfig& c, const std::string& key, const std::string& v) {
    const std::string where = "split." + key;
    if (key == "mode") c.split_mode = parse_split_mode(v);
    else if (key == "train") c.split_ratios.train = to_double(where, v);
    else if (key == "val") c.split_ratios.val = to_double(where, v);
    else if (key == "test") c.split_ratios.test = to_double(where, v);
    else if (key == "seed") c.split_seed = to_u64(where, v);
    else throw ValidationError(fmt::format("config: unknown key '{}'", where));
}

void set_sweep(ExperimentConfig& c, const std::string& key, const std::string& v) {
    const std::string where = "sweep." + key;
    if (key == "fractions") {
        c.fractions.clear();
        for (const auto& f : split_list(v, ',')) c.fractions.push_back(to_double(where, f));
    } else if (key == "seeds") {
        c.seeds.clear();
        for (const auto& s : split_list(v, ',')) c.seeds.push_back(to_u64(where, s));
    } else {
        throw ValidationError(fmt::format("config: unknown key '{}'", where));
    }
}

void apply(ExperimentConfig& c, const std::string& section, const std::string& key, const std::string& v,
           const fs::path& base_dir) {
    if (section == "paths") {
        fs::path p(v);
        c.paths[key] = p.is_absolute() || v.empty() ? p : base_dir / p;
    } else if (section == "split") {
        set_split(c, key, v);
    } else if (section == "model") {
        if (!c.model.set(key, v)) throw ValidationError(fmt::format("config: unknown key 'model.{}'", key));
    } else if (section == "regressor") {
        if (!c.regressor.set(key, v)) throw ValidationError(fmt::format("config: unknown key 'regressor.{}'", key));
    } else if (section == "scene") {
        set_scene(c.dataset.scene, key, v);
    } else if (section == "dataset") {
        set_dataset(c.dataset, key, v);
    } else if (section == "sweep") {
        set_sweep(c, key, v);
    } else if (section == "evaluate") {
        if (key != "split") throw ValidationError(fmt::format("config: unknown key 'evaluate.{}'", key));
        c.eval_split = parse_split(v);
    } else if (section == "report") {
        const auto colon = key.find(':');
        fs::path p(v);
        c.reports.push_back({key.substr(0, colon), colon == std::string::npos ? "" : key.substr(colon + 1),
                             p.is_absolute() ? p : base_dir / p});
    } else {
        throw ValidationError(fmt::format("config: unknown section [{}]", section));
    }
}

} // namespace

const fs::path& ExperimentConfig::path(const std::string& key) const {
    auto it = paths.find(key);
    if (it == paths.end() || it->second.empty()) {
        throw ValidationError(fmt::format("config: [paths] {} is not set", key));
    }
    return it->second;
}

const fs::path& ExperimentConfig::existing_path(const std::string& key) const {
    const auto& p = path(key);
    if (!fs::exists(p)) throw RuntimeFailure(fmt::format("config: [paths] {} = '{}' does not exist", key, p.string()));
    return p;
}

void ExperimentConfig::apply_seed(std::uint64_t seed) {
    model.seed = seed;
    regressor.seed = seed;
    dataset.seed = seed;
    split_seed = seed;
}

ExperimentConfig parse_experiment_config(const std::string& text, const fs::path& base_dir,
                                         const std::vector<std::string>& overrides) {
    pt::ptree tree;
    try {
        std::istringstream in(text);
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ValidationError(fmt::format("config: {} (line {})", e.message(), e.line()));
    }
    for (const auto& o : overrides) {
        const auto eq = o.find('=');
        const auto dot = o.find('.');
        if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
            throw ValidationError(fmt::format("override '{}' is not section.key=value", o));
        }
        tree.put(key_path(o.substr(0, dot), o.substr(dot + 1, eq - dot - 1)), o.substr(eq + 1));
    }

    ExperimentConfig cfg;
    std::string canonical;
    for (const auto& [section, body] : tree) {
        if (body.empty() && !body.data().empty()) {
            throw ValidationError(fmt::format("config: key '{}' outside any section", section));
        }
        for (const auto& [key, leaf] : body) {
            const auto value = leaf.get_value<std::string>();
            apply(cfg, section, key, value, base_dir);
            canonical += section + "." + key + "=" + value + "\n";
        }
    }
    cfg.model.validate();
    cfg.regressor.validate();
    cfg.dataset.scene.validate();
    for (double f : cfg.fractions) {
        if (!(f > 0.0 && f <= 1.0)) throw ValidationError(fmt::format("config: sweep fraction {} outside (0, 1]", f));
    }
    cfg.canonical_text = std::move(canonical);
    return cfg;
}

ExperimentConfig load_experiment_config(const fs::path& path, const std::vector<std::string>& overrides) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw RuntimeFailure(fmt::format("cannot read config '{}'", path.string()));
    std::ostringstream text;
    text << in.rdbuf();
    return parse_experiment_config(text.str(), fs::absolute(path).parent_path(), overrides);
}

std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw RuntimeFailure("SHA-256 digest failed");
    }
    std::string hex;
    for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
    return hex;
}

void write_manifest(const fs::path& out_dir, const std::string& stage, const ExperimentConfig& cfg,
                    std::uint64_t seed, const std::vector<std::pair<std::string, std::string>>& extra) {
    fs::create_directories(out_dir);
    std::ofstream out(out_dir / "manifest.txt", std::ios::trunc);
    if (!out) throw RuntimeFailure(fmt::format("cannot write manifest in '{}'", out_dir.string()));
    out << "stage=" << stage << "\n";
    out << "config_sha256=" << sha256_hex(cfg.canonical_text) << "\n";
    out << "seed=" << seed << "\n";
    for (const auto& [k, v] : extra) out << k << "=" << v << "\n";
}

} // namespace spectral_bridge
