#pragma once

#include <string>
#include <vector>

#include "covct/infer.hpp"
#include "covct/raster.hpp"

namespace covct {

struct CamConfig {
    int stride = 4;
    int workers = 8;
    int target_class = 0; // 0 = covid
    std::string colormap = "heat";
    int forward_threads = 1; // threads inside each scoring forward pass
};

struct CamMap {
    Raster values;                     // Gray8 relevance at model input dims
    std::vector<double> raw;           // full-precision map, post-ReLU
    std::vector<double> weights;       // score per selected map
    std::vector<int> selected_indices;
    int width = 0;
    int height = 0;
    int masked_forward_count = 0;      // scoring forward passes performed
};

/// Indices {0, stride, 2*stride, ...} below K.
std::vector<int> select_maps(int K, int stride);

/// (A - min) / (max - min); a constant map yields all zeros.
std::vector<double> normalize_map(const std::vector<double>& map);

/// Target-class probability of the input masked by the upsampled normalized
/// activation map (elementwise product on the [0,1]-scaled input).
double masked_score(const ModelBundle& model, const Tensor& scaled_input,
                    const std::vector<double>& activation_map, int map_w, int map_h,
                    int target_class, int forward_threads = 1);

/// Contiguous balanced chunks, larger chunks first; empty chunks allowed.
std::vector<std::vector<int>> partition_work(const std::vector<int>& indices, int workers);

/// Score-weighted activation map sum, ReLU, min-max rescale to [0,255].
/// Bit-identical for any worker count.
CamMap scorecam(const ModelBundle& model, const Raster& img, const CamConfig& config);

/// Fixed 256-entry blue-cyan-yellow-red LUT.
Raster colorize(const CamMap& cam, const std::string& colormap = "heat");
const std::vector<std::array<std::uint8_t, 3>>& colormap_lut(const std::string& name);

/// Gray CT replicated to RGB, blended with the heat colors, masked to the
/// lungs unless full_image, hue-shifted last.
Raster compose_overlay(const Raster& ct, const Raster& cam_rgb, const BinaryMask& mask,
                       double blend_c, double hue_delta, bool full_image);

} // namespace covct
