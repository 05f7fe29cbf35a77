#include "covct/scorecam.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

namespace covct {

std::vector<int> select_maps(int K, int stride) {
    std::vector<int> out;
    for (int i = 0; i < K; i += stride) out.push_back(i);
    return out;
}

std::vector<double> normalize_map(const std::vector<double>& map) {
    if (map.empty()) return {};
    auto [lo, hi] = std::minmax_element(map.begin(), map.end());
    std::vector<double> out(map.size(), 0.0);
    if (*hi == *lo) return out;
    double inv = 1.0 / (*hi - *lo);
    for (std::size_t i = 0; i < map.size(); ++i) out[i] = (map[i] - *lo) * inv;
    return out;
}

double masked_score(const ModelBundle& model, const Tensor& scaled_input,
                    const std::vector<double>& activation_map, int map_w, int map_h,
                    int target_class, int forward_threads) {
    std::vector<double> up = resize_plane_bilinear(normalize_map(activation_map), map_w, map_h,
                                                   model.input_w, model.input_h);
    Tensor masked = scaled_input;
    for (std::size_t i = 0; i < masked.data.size(); ++i) masked.data[i] *= up[i];
    ActivationOutput out = forward(model, masked, ForwardOptions{forward_threads});
    return out.probs[static_cast<std::size_t>(target_class)];
}

std::vector<std::vector<int>> partition_work(const std::vector<int>& indices, int workers) {
    std::vector<std::vector<int>> chunks(static_cast<std::size_t>(std::max(1, workers)));
    const int n = static_cast<int>(indices.size());
    const int w = std::max(1, workers);
    const int base = n / w;
    const int extra = n % w;
    int pos = 0;
    for (int i = 0; i < w; ++i) {
        int len = base + (i < extra ? 1 : 0);
        chunks[static_cast<std::size_t>(i)].assign(indices.begin() + pos, indices.begin() + pos + len);
        pos += len;
    }
    return chunks;
}

CamMap scorecam(const ModelBundle& model, const Raster& img, const CamConfig& config) {
    Tensor scaled = raster_to_input(model, img);
    ActivationOutput act = forward(model, scaled, ForwardOptions{config.forward_threads});
    const Tensor& maps = act.last_conv;
    const int K = maps.shape[0];
    const int mh = maps.shape[1], mw = maps.shape[2];
    const std::size_t hw = static_cast<std::size_t>(mh) * mw;

    CamMap cam;
    cam.width = model.input_w;
    cam.height = model.input_h;
    cam.selected_indices = select_maps(K, config.stride);
    cam.weights.assign(cam.selected_indices.size(), 0.0);

    auto map_plane = [&](int k) {
        return std::vector<double>(maps.data.begin() + static_cast<std::ptrdiff_t>(k * hw),
                                   maps.data.begin() + static_cast<std::ptrdiff_t>((k + 1) * hw));
    };

    // each worker scores its own chunk into disjoint slots
    std::vector<std::vector<int>> chunks = partition_work(cam.selected_indices, config.workers);

    auto score_chunk = [&](std::size_t chunk_idx, std::size_t slot_begin) {
        for (std::size_t i = 0; i < chunks[chunk_idx].size(); ++i) {
            int k = chunks[chunk_idx][i];
            cam.weights[slot_begin + i] = masked_score(model, scaled, map_plane(k), mw, mh,
                                                       config.target_class, config.forward_threads);
        }
    };
    std::vector<std::size_t> slot_begin(chunks.size());
    std::size_t acc = 0;
    for (std::size_t c = 0; c < chunks.size(); ++c) {
        slot_begin[c] = acc;
        acc += chunks[c].size();
    }
    if (config.workers <= 1) {
        for (std::size_t c = 0; c < chunks.size(); ++c) score_chunk(c, slot_begin[c]);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t c = 0; c < chunks.size(); ++c)
            if (!chunks[c].empty()) pool.emplace_back(score_chunk, c, slot_begin[c]);
        for (auto& t : pool) t.join();
    }
    cam.masked_forward_count = static_cast<int>(cam.selected_indices.size());

    // merge in index order, full precision
    std::vector<double> accum(static_cast<std::size_t>(cam.width) * cam.height, 0.0);
    for (std::size_t s = 0; s < cam.selected_indices.size(); ++s) {
        std::vector<double> up = resize_plane_bilinear(normalize_map(map_plane(cam.selected_indices[s])),
                                                       mw, mh, cam.width, cam.height);
        for (std::size_t i = 0; i < accum.size(); ++i) accum[i] += cam.weights[s] * up[i];
    }
    for (double& v : accum) v = v > 0 ? v : 0.0; // ReLU
    cam.raw = accum;

    cam.values = Raster(cam.width, cam.height, PixelFormat::Gray8);
    auto [lo, hi] = std::minmax_element(accum.begin(), accum.end());
    if (*hi > *lo) {
        double inv = 255.0 / (*hi - *lo);
        for (std::size_t i = 0; i < accum.size(); ++i)
            cam.values.samples[i] =
                static_cast<std::uint16_t>(round_half_away((accum[i] - *lo) * inv));
    }
    return cam;
}

namespace {

std::vector<std::array<std::uint8_t, 3>> make_heat_lut() {
    // blue -> cyan -> yellow -> red, piecewise linear
    std::vector<std::array<std::uint8_t, 3>> lut(256);
    for (int i = 0; i < 256; ++i) {
        double t = i / 255.0;
        double r, g, b;
        if (t < 1.0 / 3.0) {
            double u = t * 3.0;
            r = 0; g = u; b = 1;
        } else if (t < 2.0 / 3.0) {
            double u = (t - 1.0 / 3.0) * 3.0;
            r = u; g = 1; b = 1 - u;
        } else {
            double u = (t - 2.0 / 3.0) * 3.0;
            r = 1; g = 1 - u; b = 0;
        }
        lut[static_cast<std::size_t>(i)] = {
            static_cast<std::uint8_t>(round_half_away(r * 255)),
            static_cast<std::uint8_t>(round_half_away(g * 255)),
            static_cast<std::uint8_t>(round_half_away(b * 255))};
    }
    return lut;
}

std::vector<std::array<std::uint8_t, 3>> make_gray_lut() {
    std::vector<std::array<std::uint8_t, 3>> lut(256);
    for (int i = 0; i < 256; ++i) {
        auto v = static_cast<std::uint8_t>(i);
        lut[static_cast<std::size_t>(i)] = {v, v, v};
    }
    return lut;
}

} // namespace

const std::vector<std::array<std::uint8_t, 3>>& colormap_lut(const std::string& name) {
    static const auto heat = make_heat_lut();
    static const auto gray = make_gray_lut();
    if (name == "heat") return heat;
    if (name == "gray") return gray;
    throw UnknownColormap("unknown colormap " + name);
}

Raster colorize(const CamMap& cam, const std::string& colormap) {
    const auto& lut = colormap_lut(colormap);
    Raster out(cam.width, cam.height, PixelFormat::Rgb8);
    for (std::size_t i = 0; i < cam.values.samples.size(); ++i) {
        const auto& c = lut[cam.values.samples[i]];
        out.samples[i * 3] = c[0];
        out.samples[i * 3 + 1] = c[1];
        out.samples[i * 3 + 2] = c[2];
    }
    return out;
}

Raster compose_overlay(const Raster& ct, const Raster& cam_rgb, const BinaryMask& mask,
                       double blend_c, double hue_delta, bool full_image) {
    if (ct.format != PixelFormat::Gray8 || cam_rgb.format != PixelFormat::Rgb8)
        throw ShapeMismatch("compose_overlay expects a Gray8 CT and an Rgb8 heatmap");
    if (ct.width != cam_rgb.width || ct.height != cam_rgb.height ||
        ct.width != mask.width || ct.height != mask.height)
        throw ShapeMismatch("overlay inputs must share dimensions");
    Raster ct_rgb(ct.width, ct.height, PixelFormat::Rgb8);
    for (std::size_t p = 0; p < ct.pixel_count(); ++p)
        for (int c = 0; c < 3; ++c) ct_rgb.samples[p * 3 + c] = ct.samples[p];
    Raster blended = blend(ct_rgb, cam_rgb, BlendSpec{blend_c});
    if (!full_image) blended = apply_mask(blended, mask);
    if (hue_delta != 0.0) blended = hue_shift(blended, hue_delta);
    return blended;
}

} // namespace covct
