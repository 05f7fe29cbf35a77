#pragma once

#include <cstdint>
#include <vector>

#include "covct/errors.hpp"

namespace covct {

enum class PixelFormat { Gray16, Gray8, Rgb8, Rgba8 };

int channels(PixelFormat f);

/// Row-major pixel grid. Samples are stored as uint16 regardless of format;
/// 8-bit formats keep their values in [0, 255].
struct Raster {
    int width = 0;
    int height = 0;
    PixelFormat format = PixelFormat::Gray8;
    std::vector<std::uint16_t> samples;

    Raster() = default;
    Raster(int w, int h, PixelFormat f, std::uint16_t fill = 0);

    std::uint16_t at(int x, int y, int c = 0) const {
        return samples[(static_cast<std::size_t>(y) * width + x) * channels(format) + c];
    }
    std::uint16_t& at(int x, int y, int c = 0) {
        return samples[(static_cast<std::size_t>(y) * width + x) * channels(format) + c];
    }
    std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
    bool empty() const { return samples.empty(); }

    bool operator==(const Raster&) const = default;
};

/// Foreground flags, one byte per pixel (0 background, 1 foreground).
struct BinaryMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> bits;

    BinaryMask() = default;
    BinaryMask(int w, int h, std::uint8_t fill = 0)
        : width(w), height(h), bits(static_cast<std::size_t>(w) * h, fill) {}

    std::uint8_t at(int x, int y) const { return bits[static_cast<std::size_t>(y) * width + x]; }
    std::uint8_t& at(int x, int y) { return bits[static_cast<std::size_t>(y) * width + x]; }
    std::size_t count_foreground() const;

    bool operator==(const BinaryMask&) const = default;
};

struct NormalizationParams {
    double min_f = 0;
    double max_f = 65535;
    double min_g = 0;
    double max_g = 65535;
};

struct BlendSpec {
    double c = 0.5; // blending fraction in [0,1]
};

/// Nearest integer, halves away from zero.
long long round_half_away(double v);

/// Affine rescale of tonal values from [min_f, max_f] to [min_g, max_g].
/// A flat input (max_f == min_f) maps everything to min_g.
Raster minmax_normalize(const Raster& img, const NormalizationParams& params);

/// Observed min/max of a Gray16 image as normalization source range.
NormalizationParams observed_range(const Raster& img, double min_g = 0, double max_g = 65535);

/// 16-bit to 8-bit: divide by 255, round to nearest, saturate at 255.
Raster quantize_to_8bit(const Raster& img);

/// BT.601 luma conversion; alpha is ignored.
Raster to_grayscale(const Raster& img);

/// Bilinear resampling with pixel-center alignment and edge clamping.
Raster resize_bilinear(const Raster& img, int out_w, int out_h);

/// Same convention as resize_bilinear, for a full-precision plane.
std::vector<double> resize_plane_bilinear(const std::vector<double>& src, int sw, int sh,
                                          int out_w, int out_h);

/// h = (1-c)*f + c*g per channel.
Raster blend(const Raster& f, const Raster& g, const BlendSpec& spec);

/// Scalar addition on the hue channel, modulo 360 degrees.
Raster hue_shift(const Raster& img, double delta_degrees);

/// Keep pixels under the mask foreground, zero elsewhere.
Raster apply_mask(const Raster& img, const BinaryMask& mask);

} // namespace covct
