// SPDX-License-Identifier: Apache-2.0
// NumPy-facing wrappers. Cubes cross the boundary as float32 arrays shaped (bands, height, width).
#include "spectral_bridge/checkpoint.hpp"
#include "spectral_bridge/cube_io.hpp"
#include "spectral_bridge/error.hpp"
#include "spectral_bridge/metrics.hpp"
#include "spectral_bridge/splits.hpp"
#include "spectral_bridge/srf.hpp"
#include "spectral_bridge/synthgen.hpp"
#include "spectral_bridge/tokens.hpp"
#include "spectral_bridge/training.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <algorithm>
#include <optional>

namespace py = pybind11;
namespace sb = spectral_bridge;

namespace {

using CubeArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

std::vector<sb::BandSpec> band_list(int count, const std::optional<std::vector<double>>& centers,
                                    const std::optional<std::vector<double>>& fwhm) {
    if (!centers) return sb::uniform_bands(count, 450.0, 2400.0);
    if (static_cast<int>(centers->size()) != count)
        throw sb::ValidationError("centers must have one entry per band");
    if (fwhm && fwhm->size() != centers->size()) throw sb::ValidationError("fwhm must match centers in length");
    // Without explicit widths each band spans the distance to its nearest neighbour.
    std::vector<sb::BandSpec> out(count);
    for (int b = 0; b < count; ++b) {
        double width = 10.0;
        if (fwhm) width = (*fwhm)[b];
        else if (count > 1) {
            const double left = b > 0 ? (*centers)[b] - (*centers)[b - 1] : 1e300;
            const double right = b + 1 < count ? (*centers)[b + 1] - (*centers)[b] : 1e300;
            width = std::min(left, right);
        }
        out[b] = {(*centers)[b], width};
    }
    sb::validate_band_list(out);
    return out;
}

sb::HyperCube to_cube(const CubeArray& a, const std::optional<std::vector<double>>& centers = std::nullopt,
                      const std::optional<std::vector<double>>& fwhm = std::nullopt) {
    if (a.ndim() != 3) throw sb::ValidationError("cube arrays must be 3-D (bands, height, width)");
    const auto bands = static_cast<int>(a.shape(0));
    std::vector<float> data(a.data(), a.data() + a.size());
    return {band_list(bands, centers, fwhm), static_cast<int>(a.shape(1)), static_cast<int>(a.shape(2)), std::move(data)};
}

py::array_t<float> to_array(const sb::HyperCube& c) {
    py::array_t<float> out({c.num_bands(), c.height(), c.width()});
    std::copy(c.values().begin(), c.values().end(), out.mutable_data());
    return out;
}

std::vector<double> centers_of(const std::vector<sb::BandSpec>& bands) {
    std::vector<double> out;
    for (const auto& b : bands) out.push_back(b.center_nm);
    return out;
}

std::vector<double> widths_of(const std::vector<sb::BandSpec>& bands) {
    std::vector<double> out;
    for (const auto& b : bands) out.push_back(b.fwhm_nm);
    return out;
}

py::dict cube_dict(const sb::HyperCube& c) {
    py::dict d;
    d["values"] = to_array(c);
    d["centers"] = centers_of(c.bands());
    d["fwhm"] = widths_of(c.bands());
    d["patch_id"] = c.patch_id();
    d["tile_id"] = c.tile_id();
    return d;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Spectral masked-autoencoder toolkit: metrics, band resampling, synthetic scenes and inference.";

    py::register_exception<sb::ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<sb::RuntimeFailure>(m, "RuntimeFailure", PyExc_RuntimeError);

    auto image_metric = [&m](const char* name, double (*fn)(const sb::HyperCube&, const sb::HyperCube&), const char* doc) {
        m.def(name, [fn](const CubeArray& x, const CubeArray& xhat) { return fn(to_cube(x), to_cube(xhat)); },
              py::arg("x"), py::arg("xhat"), doc);
    };
    image_metric("mae", &sb::mae_metric, "Mean absolute error over all cube entries.");
    image_metric("mse", &sb::mse_metric, "Mean squared error over all cube entries.");
    image_metric("psnr", &sb::psnr_metric, "Peak signal-to-noise ratio in dB, peak taken from x.");
    image_metric("ssim", &sb::ssim_metric, "Gaussian-window SSIM per band, averaged over bands.");
    image_metric("sam", &sb::sam_metric, "Mean spectral angle in degrees; zero-norm pixels are skipped.");

    m.def(
        "regression_metrics",
        [](const std::vector<double>& y, const std::vector<double>& yhat) {
            py::dict d;
            d["mae"] = sb::mae_metric(std::span<const double>(y), std::span<const double>(yhat));
            d["mse"] = sb::mse_metric(std::span<const double>(y), std::span<const double>(yhat));
            d["rmse"] = sb::rmse_metric(y, yhat);
            d["r2"] = sb::r2_metric(y, yhat);
            return d;
        },
        py::arg("y"), py::arg("yhat"));

    m.def(
        "weight_matrix",
        [](const std::filesystem::path& srf_csv, const std::vector<double>& centers,
           const std::optional<std::vector<double>>& fwhm) {
            const auto w = sb::build_weight_matrix(sb::load_srf(srf_csv),
                                                   band_list(static_cast<int>(centers.size()), centers, fwhm));
            py::array_t<double> out({w.rows(), w.cols()});
            std::copy(w.weights.begin(), w.weights.end(), out.mutable_data());
            return py::make_tuple(out, centers_of(w.target_bands));
        },
        py::arg("srf_csv"), py::arg("centers"), py::arg("fwhm") = std::nullopt,
        "Column-stochastic (source bands x target bands) matrix and the target band centers.");

    m.def(
        "project",
        [](const CubeArray& cube, const std::vector<double>& centers, const std::filesystem::path& srf_csv,
           const std::optional<std::vector<double>>& fwhm) {
            const auto c = to_cube(cube, centers, fwhm);
            return to_array(sb::project_cube(c, sb::build_weight_matrix(sb::load_srf(srf_csv), c.bands())));
        },
        py::arg("cube"), py::arg("centers"), py::arg("srf_csv"), py::arg("fwhm") = std::nullopt,
        "Resamples a cube onto the bands of an SRF table.");

    m.def(
        "gen_scene",
        [](int bands, int height, int width, std::uint64_t seed, int endmembers, double noise_std,
           const std::vector<std::tuple<double, double, double>>& lines) {
            sb::SceneConfig cfg;
            cfg.bands = bands;
            cfg.height = height;
            cfg.width = width;
            cfg.endmembers = endmembers;
            cfg.noise_std = noise_std;
            for (const auto& [center, width_nm, depth] : lines) cfg.lines.push_back({center, width_nm, depth});
            cfg.validate();
            auto s = sb::gen_scene(cfg, seed);
            auto d = cube_dict(s.cube);
            d["line_depths"] = s.line_depths;
            return d;
        },
        py::arg("bands") = 32, py::arg("height") = 16, py::arg("width") = 16, py::arg("seed") = 0,
        py::arg("endmembers") = 4, py::arg("noise_std") = 0.0,
        py::arg("lines") = std::vector<std::tuple<double, double, double>>{},
        "Synthetic scene; lines are (center_nm, width_nm, max_depth) triples.");

    m.def("load_cube", [](const std::filesystem::path& p) { return cube_dict(sb::load_cube(p)); }, py::arg("path"));
    m.def(
        "save_cube",
        [](const std::filesystem::path& p, const CubeArray& values, const std::vector<double>& centers,
           const std::optional<std::vector<double>>& fwhm, const std::string& patch_id, const std::string& tile_id) {
            const auto c = to_cube(values, centers, fwhm);
            sb::save_cube(sb::HyperCube(c.bands(), c.height(), c.width(), {c.values().begin(), c.values().end()},
                                        patch_id, tile_id),
                          p);
        },
        py::arg("path"), py::arg("values"), py::arg("centers"), py::arg("fwhm") = std::nullopt,
        py::arg("patch_id") = "", py::arg("tile_id") = "");

    m.def(
        "reconstruct",
        [](const CubeArray& ms, const std::filesystem::path& checkpoint) {
            const auto ckpt = sb::load_checkpoint(checkpoint);
            if (ms.ndim() != 3 || static_cast<std::size_t>(ms.shape(0)) != ckpt.ms_bands.size())
                throw sb::ValidationError("input must be (bands, height, width) with the checkpoint's broad-band count");
            std::vector<float> data(ms.data(), ms.data() + ms.size());
            const sb::HyperCube cube(ckpt.ms_bands, static_cast<int>(ms.shape(1)), static_cast<int>(ms.shape(2)),
                                     std::move(data));
            const auto out = sb::reconstruct(cube, ckpt);
            return py::make_tuple(to_array(out), centers_of(out.bands()));
        },
        py::arg("ms"), py::arg("checkpoint"),
        "Reconstructs narrow bands from a broad-band cube with a fine-tuned checkpoint.");

    m.def("scale_wavelength", &sb::scale_wavelength, py::arg("lambda_nm"), py::arg("n_spatial"));
    m.def("positional_encoding", &sb::positional_encoding, py::arg("x"), py::arg("y"), py::arg("lambda_nm"),
          py::arg("dim"), py::arg("n_spatial"));
    m.def("mask_count", &sb::mask_count, py::arg("p_mask"), py::arg("groups"));

    m.def(
        "make_splits",
        [](const std::vector<std::pair<std::string, std::string>>& patches, const std::string& mode,
           std::tuple<double, double, double> ratios, std::uint64_t seed) {
            std::vector<sb::PatchRef> refs;
            for (const auto& [patch, tile] : patches) refs.push_back({patch, tile});
            const auto [tr, va, te] = ratios;
            const auto s = sb::make_splits(refs, sb::parse_split_mode(mode), {tr, va, te}, seed);
            std::map<std::string, std::string> out;
            for (const auto& [id, split] : s.split_of) out[id] = std::string(sb::to_string(split));
            return out;
        },
        py::arg("patches"), py::arg("mode") = "hard", py::arg("ratios") = std::make_tuple(0.8, 0.1, 0.1),
        py::arg("seed") = 0, "Maps patch id to 'train', 'val' or 'test'; patches are (patch_id, tile_id) pairs.");
}
