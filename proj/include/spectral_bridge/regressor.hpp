// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "spectral_bridge/labels.hpp"
#include "spectral_bridge/metrics.hpp"
#include "spectral_bridge/nn.hpp"
#include "spectral_bridge/splits.hpp"
#include "spectral_bridge/stats.hpp"
#include "spectral_bridge/training.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace spectral_bridge {

/// Raw (un-normalized) spectral signatures keyed by patch id. CSV: "patch_id,v1..vB".
struct SignatureTable {
    std::vector<std::string> ids;
    std::vector<std::vector<double>> values;

    std::size_t size() const { return ids.size(); }
    int width() const { return values.empty() ? 0 : static_cast<int>(values.front().size()); }
    /// Rows whose id is in `keep`, in table order.
    SignatureTable subset(const std::vector<std::string>& keep) const;
};

SignatureTable signatures_of(const std::vector<HyperCube>& cubes);
void save_signatures(const SignatureTable& t, const std::filesystem::path& path);
SignatureTable load_signatures(const std::filesystem::path& path);

struct RegressorConfig {
    int input_bands = 0;              // 0: taken from the training signatures
    std::vector<int> hidden{256, 256};
    double learning_rate = 1e-3;
    int steps = 3000;
    int batch_size = 32;
    int eval_interval = 10;           // steps between validation evaluations
    int patience = 20;                // evaluations without improvement before stopping
    std::uint64_t seed = 0;
    Gas gas = Gas::CH4;

    void validate() const;
    std::map<std::string, std::string> to_map() const;
    bool set(const std::string& key, const std::string& value);

    bool operator==(const RegressorConfig&) const = default;
};

struct RegressorCheckpoint {
    RegressorConfig config;
    std::string units;
    GlobalStats global;      // input scaling, from the training signatures
    double label_mean = 0.0; // labels are learned in z-scored space
    double label_std = 1.0;
    nn::ParamStore<float> params;

    bool operator==(const RegressorCheckpoint&) const = default;
};

struct RegressorResult {
    RegressorCheckpoint model;  // parameters with the best validation MSE
    std::vector<LogEntry> log;  // full-set MSE (z-scored labels) at every evaluation
    int stopped_at = 0;         // steps actually taken
};

/// MSE training of the MLP on the signatures assigned to the train split, with early stopping
/// on the validation split when it is non-empty.
RegressorResult train_regressor(const SignatureTable& signatures, const GasLabelSet& labels,
                                const RegressorConfig& cfg, const SplitAssignment& split);

std::vector<double> predict(const RegressorCheckpoint& ckpt, const SignatureTable& signatures);

/// Metrics in native label units over every row of `signatures` (each needs a label).
RegressionReport evaluate_regressor(const RegressorCheckpoint& ckpt, const SignatureTable& signatures,
                                    const GasLabelSet& labels);

void save_regressor(const RegressorCheckpoint& ckpt, const std::filesystem::path& path);
RegressorCheckpoint load_regressor(const std::filesystem::path& path);

} // namespace spectral_bridge
