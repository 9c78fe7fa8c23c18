// SPDX-License-Identifier: Apache-2.0
#include "spectral_bridge/regressor.hpp"

#include "spectral_bridge/checkpoint.hpp"
#include "spectral_bridge/container.hpp"
#include "spectral_bridge/csv.hpp"
#include "spectral_bridge/error.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <numeric>
#include <random>
#include <set>

namespace spectral_bridge {

namespace {

using MatF = nn::Mat<float>;

struct Mlp {
    std::vector<nn::Linear<float>> layers;

    static Mlp build(nn::ParamStore<float>& ps, int in, const std::vector<int>& hidden) {
        Mlp m;
        int prev = in;
        for (std::size_t i = 0; i < hidden.size(); ++i) {
            m.layers.push_back(nn::Linear<float>::create(ps, fmt::format("fc{}", i), prev, hidden[i]));
            prev = hidden[i];
        }
        m.layers.push_back(nn::Linear<float>::create(ps, "out", prev, 1));
        return m;
    }

    /// acts[0] is the input; acts[i + 1] the (rectified, except last) output of layer i.
    void forward(const nn::ParamStore<float>& ps, const MatF& x, std::vector<MatF>& acts) const {
        acts.resize(layers.size() + 1);
        acts[0] = x;
        for (std::size_t i = 0; i < layers.size(); ++i) {
            layers[i].forward(ps, acts[i], acts[i + 1]);
            if (i + 1 < layers.size()) acts[i + 1] = acts[i + 1].cwiseMax(0.0f);
        }
    }

    void backward(const nn::ParamStore<float>& ps, const std::vector<MatF>& acts, MatF dy,
                  nn::ParamStore<float>& grads) const {
        MatF dx;
        for (std::size_t i = layers.size(); i-- > 0;) {
            layers[i].backward(ps, acts[i], dy, grads, i > 0 ? &dx : nullptr);
            if (i > 0) dy = (acts[i].array() > 0.0f).select(dx, 0.0f);
        }
    }
};

Mlp rebuild(const RegressorCheckpoint& ckpt, nn::ParamStore<float>& ps) {
    Mlp m = Mlp::build(ps, ckpt.config.input_bands, ckpt.config.hidden);
    if (ps.size() != ckpt.params.size()) throw ValidationError("regressor checkpoint: tensor count mismatch");
    for (std::size_t i = 0; i < ps.size(); ++i) {
        if (ps.name(i) != ckpt.params.name(i) || ps[i].rows() != ckpt.params[i].rows() ||
            ps[i].cols() != ckpt.params[i].cols()) {
            throw ValidationError(fmt::format("regressor checkpoint: tensor '{}' has an unexpected shape",
                                              ckpt.params.name(i)));
        }
        ps[i] = ckpt.params[i];
    }
    return m;
}

MatF normalized_inputs(const SignatureTable& t, const std::vector<std::size_t>& rows, const GlobalStats& g) {
    MatF x(static_cast<Eigen::Index>(rows.size()), t.width());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto& v = t.values[rows[r]];
        for (int b = 0; b < t.width(); ++b) x(static_cast<Eigen::Index>(r), b) = static_cast<float>((v[b] - g.mean) / g.std);
    }
    return x;
}

double label_of(const GasLabelSet& labels, const std::string& id) {
    const auto it = labels.values.find(id);
    if (it == labels.values.end()) throw ValidationError(fmt::format("label/signature mismatch: no label for '{}'", id));
    return it->second;
}

std::string join_ints(const std::vector<int>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ";" : "") + std::to_string(v[i]);
    return s;
}

} // namespace

SignatureTable SignatureTable::subset(const std::vector<std::string>& keep) const {
    const std::set<std::string> wanted(keep.begin(), keep.end());
    SignatureTable out;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (wanted.count(ids[i])) {
            out.ids.push_back(ids[i]);
            out.values.push_back(values[i]);
        }
    }
    return out;
}

SignatureTable signatures_of(const std::vector<HyperCube>& cubes) {
    SignatureTable t;
    for (const auto& c : cubes) {
        t.ids.push_back(c.patch_id());
        t.values.push_back(spatial_average(c).values);
    }
    return t;
}

void save_signatures(const SignatureTable& t, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw RuntimeFailure(fmt::format("cannot write '{}'", path.string()));
    out << "patch_id";
    for (int b = 1; b <= t.width(); ++b) out << ",v" << b;
    out << '\n';
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (static_cast<int>(t.values[i].size()) != t.width()) throw ValidationError("signatures have unequal lengths");
        out << t.ids[i];
        for (double v : t.values[i]) out << ',' << csv::format_double(v);
        out << '\n';
    }
}

SignatureTable load_signatures(const std::filesystem::path& path) {
    const auto lines = csv::read_lines(path);
    if (lines.empty()) throw ValidationError(fmt::format("{}: empty signature file", path.string()));
    const auto header = csv::split_line(lines[0].text);
    if (header.size() < 2 || csv::trim(header[0]) != "patch_id") {
        throw ValidationError(fmt::format("{}: expected header 'patch_id,v1..vB'", path.string()));
    }
    for (std::size_t b = 1; b < header.size(); ++b) {
        if (csv::trim(header[b]) != fmt::format("v{}", b)) {
            throw ValidationError(fmt::format("{}: column {} should be 'v{}'", path.string(), b + 1, b));
        }
    }
    SignatureTable t;
    std::set<std::string> seen;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto f = csv::split_line(lines[i].text);
        const auto where = fmt::format("{}:{}", path.string(), lines[i].number);
        if (f.size() != header.size()) throw ValidationError(where + ": wrong number of fields");
        std::string id(csv::trim(f[0]));
        if (!seen.insert(id).second) throw ValidationError(fmt::format("{}: duplicate patch_id '{}'", where, id));
        std::vector<double> row;
        for (std::size_t b = 1; b < f.size(); ++b) {
            const auto v = csv::parse_double(csv::trim(f[b]));
            if (!v || !std::isfinite(*v)) throw ValidationError(fmt::format("{}: bad value in column {}", where, b + 1));
            row.push_back(*v);
        }
        t.ids.push_back(std::move(id));
        t.values.push_back(std::move(row));
    }
    return t;
}

void RegressorConfig::validate() const {
    if (input_bands < 0) throw ValidationError("regressor: input_bands must be >= 1 (or 0 to infer)");
    if (hidden.empty()) throw ValidationError("regressor: at least one hidden layer is required");
    for (int h : hidden) {
        if (h < 1) throw ValidationError("regressor: hidden sizes must be >= 1");
    }
    if (learning_rate <= 0.0 || steps < 0 || batch_size < 1 || eval_interval < 1 || patience < 1) {
        throw ValidationError("regressor: learning rate, batch size, eval interval and patience must be positive");
    }
}

std::map<std::string, std::string> RegressorConfig::to_map() const {
    return {{"input_bands", std::to_string(input_bands)},
            {"hidden", join_ints(hidden)},
            {"learning_rate", csv::format_double(learning_rate)},
            {"steps", std::to_string(steps)},
            {"batch_size", std::to_string(batch_size)},
            {"eval_interval", std::to_string(eval_interval)},
            {"patience", std::to_string(patience)},
            {"seed", std::to_string(seed)},
            {"gas", std::string(to_string(gas))}};
}

bool RegressorConfig::set(const std::string& key, const std::string& value) {
    auto as_int = [&](const std::string& v) {
        const auto x = csv::parse_int(csv::trim(v));
        if (!x) throw ValidationError(fmt::format("regressor config: '{}' expects an integer, got '{}'", key, v));
        return *x;
    };
    if (key == "input_bands") input_bands = static_cast<int>(as_int(value));
    else if (key == "hidden") {
        hidden.clear();
        std::string list = value;
        std::replace(list.begin(), list.end(), ';', ',');
        for (const auto& part : csv::split_line(list)) {
            if (!csv::trim(part).empty()) hidden.push_back(static_cast<int>(as_int(part)));
        }
    } else if (key == "learning_rate") {
        const auto x = csv::parse_double(csv::trim(value));
        if (!x) throw ValidationError(fmt::format("regressor config: '{}' expects a number", key));
        learning_rate = *x;
    } else if (key == "steps") steps = static_cast<int>(as_int(value));
    else if (key == "batch_size") batch_size = static_cast<int>(as_int(value));
    else if (key == "eval_interval") eval_interval = static_cast<int>(as_int(value));
    else if (key == "patience") patience = static_cast<int>(as_int(value));
    else if (key == "seed") {
        const auto x = as_int(value);
        if (x < 0) throw ValidationError("regressor config: seed must be non-negative");
        seed = static_cast<std::uint64_t>(x);
    } else if (key == "gas") gas = parse_gas(csv::trim(value));
    else return false;
    return true;
}

RegressorResult train_regressor(const SignatureTable& signatures, const GasLabelSet& labels,
                                const RegressorConfig& cfg, const SplitAssignment& split) {
    cfg.validate();
    if (labels.gas != cfg.gas) {
        throw ValidationError(fmt::format("labels are for {}, configuration expects {}", to_string(labels.gas),
                                          to_string(cfg.gas)));
    }
    std::vector<std::size_t> train_rows, val_rows;
    for (std::size_t i = 0; i < signatures.size(); ++i) {
        const auto it = split.split_of.find(signatures.ids[i]);
        if (it == split.split_of.end()) {
            throw ValidationError(fmt::format("signature '{}' is not in the split assignment", signatures.ids[i]));
        }
        if (it->second == Split::train) train_rows.push_back(i);
        if (it->second == Split::val) val_rows.push_back(i);
    }
    if (train_rows.empty()) throw ValidationError("regressor: empty training split");

    RegressorCheckpoint ckpt;
    ckpt.config = cfg;
    ckpt.units = labels.units;
    const int width = signatures.width();
    if (ckpt.config.input_bands == 0) ckpt.config.input_bands = width;
    if (ckpt.config.input_bands != width) {
        throw ValidationError(fmt::format("regressor expects {} inputs, signatures have {}", ckpt.config.input_bands, width));
    }
    for (const auto& v : signatures.values) {
        if (static_cast<int>(v.size()) != width) throw ValidationError("signatures have unequal lengths");
    }

    std::vector<SpectralSignature> train_sigs;
    for (auto r : train_rows) train_sigs.push_back({signatures.values[r], {}});
    ckpt.global = compute_global_stats(train_sigs);
    if (!(ckpt.global.std > 0.0)) ckpt.global.std = 1.0;

    std::vector<double> y_train, y_val;
    for (auto r : train_rows) y_train.push_back(label_of(labels, signatures.ids[r]));
    for (auto r : val_rows) y_val.push_back(label_of(labels, signatures.ids[r]));
    const double n = static_cast<double>(y_train.size());
    ckpt.label_mean = std::accumulate(y_train.begin(), y_train.end(), 0.0) / n;
    double var = 0.0;
    for (double y : y_train) var += (y - ckpt.label_mean) * (y - ckpt.label_mean);
    ckpt.label_std = var > 0.0 ? std::sqrt(var / n) : 1.0;

    auto z = [&](const std::vector<double>& ys) {
        MatF m(static_cast<Eigen::Index>(ys.size()), 1);
        for (std::size_t i = 0; i < ys.size(); ++i) m(static_cast<Eigen::Index>(i), 0) = static_cast<float>((ys[i] - ckpt.label_mean) / ckpt.label_std);
        return m;
    };
    const MatF x_train = normalized_inputs(signatures, train_rows, ckpt.global);
    const MatF x_val = normalized_inputs(signatures, val_rows, ckpt.global);
    const MatF t_train = z(y_train), t_val = z(y_val);

    nn::ParamStore<float> params;
    const Mlp mlp = Mlp::build(params, width, cfg.hidden);
    {
        std::seed_seq seq{cfg.seed, std::uint64_t{0x726567}};
        std::mt19937_64 rng(seq);
        for (const auto& l : mlp.layers) l.init(params, rng);
    }
    std::seed_seq seq{cfg.seed, std::uint64_t{1}};
    std::mt19937_64 rng(seq);

    auto full_mse = [&](const MatF& x, const MatF& t) {
        std::vector<MatF> acts;
        mlp.forward(params, x, acts);
        return static_cast<double>((acts.back() - t).squaredNorm()) / static_cast<double>(t.rows());
    };

    RegressorResult result;
    nn::Adam<float> adam(params);
    auto grads = params.zeros_like();
    std::vector<std::size_t> order(train_rows.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    std::size_t cursor = 0;
    const auto batch = std::min<std::size_t>(static_cast<std::size_t>(cfg.batch_size), order.size());

    double best = std::numeric_limits<double>::infinity();
    nn::ParamStore<float> best_params = params;
    int since_best = 0;
    auto evaluate = [&](int step) {
        const double tr = full_mse(x_train, t_train);
        result.log.push_back({step, "train", tr});
        const double score = val_rows.empty() ? tr : full_mse(x_val, t_val);
        if (!val_rows.empty()) result.log.push_back({step, "val", score});
        if (!std::isfinite(score)) throw RuntimeFailure(fmt::format("regressor diverged at step {}", step));
        if (score < best) {
            best = score;
            best_params = params;
            since_best = 0;
        } else {
            ++since_best;
        }
    };
    evaluate(0);

    MatF xb(static_cast<Eigen::Index>(batch), width), tb(static_cast<Eigen::Index>(batch), 1);
    std::vector<MatF> acts;
    int step = 0;
    while (step < cfg.steps) {
        for (std::size_t k = 0; k < batch; ++k) {
            if (cursor == order.size()) {
                std::shuffle(order.begin(), order.end(), rng);
                cursor = 0;
            }
            const auto i = order[cursor++];
            xb.row(static_cast<Eigen::Index>(k)) = x_train.row(static_cast<Eigen::Index>(i));
            tb(static_cast<Eigen::Index>(k), 0) = t_train(static_cast<Eigen::Index>(i), 0);
        }
        mlp.forward(params, xb, acts);
        const MatF dy = (acts.back() - tb) * (2.0f / static_cast<float>(batch));
        grads.set_zero();
        mlp.backward(params, acts, dy, grads);
        adam.step(params, grads, cfg.learning_rate);
        ++step;
        if (step % cfg.eval_interval == 0 || step == cfg.steps) {
            evaluate(step);
            if (!val_rows.empty() && since_best >= cfg.patience) break;
        }
    }
    result.stopped_at = step;
    ckpt.params = val_rows.empty() ? params : best_params;
    result.model = std::move(ckpt);
    return result;
}

std::vector<double> predict(const RegressorCheckpoint& ckpt, const SignatureTable& signatures) {
    if (signatures.size() > 0 && signatures.width() != ckpt.config.input_bands) {
        throw ValidationError(fmt::format("regressor expects {} inputs, signatures have {}", ckpt.config.input_bands,
                                          signatures.width()));
    }
    nn::ParamStore<float> params;
    const Mlp mlp = rebuild(ckpt, params);
    std::vector<std::size_t> rows(signatures.size());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    std::vector<MatF> acts;
    mlp.forward(params, normalized_inputs(signatures, rows, ckpt.global), acts);
    std::vector<double> out;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.push_back(ckpt.label_mean + ckpt.label_std * static_cast<double>(acts.back()(static_cast<Eigen::Index>(i), 0)));
    }
    return out;
}

RegressionReport evaluate_regressor(const RegressorCheckpoint& ckpt, const SignatureTable& signatures,
                                    const GasLabelSet& labels) {
    if (signatures.size() == 0) throw ValidationError("evaluate_regressor: no signatures");
    std::vector<double> y;
    for (const auto& id : signatures.ids) y.push_back(label_of(labels, id));
    return make_regression_report(signatures.ids, std::move(y), predict(ckpt, signatures));
}

void save_regressor(const RegressorCheckpoint& ckpt, const std::filesystem::path& path) {
    Container c;
    c.header["kind"] = "regressor";
    for (const auto& [k, v] : ckpt.config.to_map()) c.header["config." + k] = v;
    c.header["units"] = ckpt.units;
    c.header["global"] = encode_doubles({ckpt.global.mean, ckpt.global.std});
    c.header["label"] = encode_doubles({ckpt.label_mean, ckpt.label_std});
    for (std::size_t i = 0; i < ckpt.params.size(); ++i) c.tensors.push_back(to_record(ckpt.params.name(i), ckpt.params[i]));
    save_container(c, path);
}

RegressorCheckpoint load_regressor(const std::filesystem::path& path) {
    const auto c = load_container(path);
    if (c.get("kind") != "regressor") {
        throw ValidationError(fmt::format("{}: checkpoint kind '{}' is not a regressor", path.string(), c.get("kind")));
    }
    RegressorCheckpoint ckpt;
    for (const auto& [k, v] : c.header) {
        if (k.rfind("config.", 0) == 0 && !ckpt.config.set(k.substr(7), v)) {
            throw ValidationError(fmt::format("{}: unknown config key '{}'", path.string(), k));
        }
    }
    ckpt.config.validate();
    ckpt.units = c.get("units");
    const auto g = decode_doubles(c.get("global"));
    const auto l = decode_doubles(c.get("label"));
    if (g.size() != 2 || l.size() != 2) throw ValidationError(fmt::format("{}: malformed scaling keys", path.string()));
    ckpt.global = {g[0], g[1]};
    ckpt.label_mean = l[0];
    ckpt.label_std = l[1];
    for (const auto& t : c.tensors) {
        if (t.shape.size() != 2) throw ValidationError(fmt::format("tensor '{}' is not 2-D", t.name));
        const auto i = ckpt.params.add(t.name, t.shape[0], t.shape[1]);
        std::copy(t.data.begin(), t.data.end(), ckpt.params[i].data());
    }
    nn::ParamStore<float> check;
    rebuild(ckpt, check);
    return ckpt;
}

} // namespace spectral_bridge
