#include "covct/raster.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace covct {

int channels(PixelFormat f) {
    switch (f) {
    case PixelFormat::Gray16:
    case PixelFormat::Gray8: return 1;
    case PixelFormat::Rgb8: return 3;
    case PixelFormat::Rgba8: return 4;
    }
    return 1;
}

Raster::Raster(int w, int h, PixelFormat f, std::uint16_t fill)
    : width(w), height(h), format(f),
      samples(static_cast<std::size_t>(w) * h * covct::channels(f), fill) {}

std::size_t BinaryMask::count_foreground() const {
    return static_cast<std::size_t>(std::count_if(bits.begin(), bits.end(),
                                                  [](std::uint8_t b) { return b != 0; }));
}

long long round_half_away(double v) {
    return static_cast<long long>(v < 0 ? std::ceil(v - 0.5) : std::floor(v + 0.5));
}

NormalizationParams observed_range(const Raster& img, double min_g, double max_g) {
    auto [lo, hi] = std::minmax_element(img.samples.begin(), img.samples.end());
    NormalizationParams p;
    p.min_f = img.samples.empty() ? 0 : *lo;
    p.max_f = img.samples.empty() ? 0 : *hi;
    p.min_g = min_g;
    p.max_g = max_g;
    return p;
}

Raster minmax_normalize(const Raster& img, const NormalizationParams& params) {
    Raster out(img.width, img.height, PixelFormat::Gray16);
    if (params.max_f == params.min_f) {
        std::fill(out.samples.begin(), out.samples.end(),
                  static_cast<std::uint16_t>(round_half_away(params.min_g)));
        return out;
    }
    const double scale = (params.max_g - params.min_g) / (params.max_f - params.min_f);
    for (std::size_t i = 0; i < img.samples.size(); ++i) {
        double v = (img.samples[i] - params.min_f) * scale + params.min_g;
        long long r = round_half_away(v);
        out.samples[i] = static_cast<std::uint16_t>(std::clamp<long long>(r, 0, 65535));
    }
    return out;
}

Raster quantize_to_8bit(const Raster& img) {
    Raster out(img.width, img.height, PixelFormat::Gray8);
    for (std::size_t i = 0; i < img.samples.size(); ++i) {
        long long r = round_half_away(img.samples[i] / 255.0);
        out.samples[i] = static_cast<std::uint16_t>(std::min<long long>(r, 255));
    }
    return out;
}

Raster to_grayscale(const Raster& img) {
    if (img.format == PixelFormat::Gray8) return img;
    if (img.format != PixelFormat::Rgb8 && img.format != PixelFormat::Rgba8)
        throw ShapeMismatch("to_grayscale expects an 8-bit RGB/RGBA or gray image");
    Raster out(img.width, img.height, PixelFormat::Gray8);
    const int ch = channels(img.format);
    for (std::size_t p = 0; p < img.pixel_count(); ++p) {
        double r = img.samples[p * ch + 0];
        double g = img.samples[p * ch + 1];
        double b = img.samples[p * ch + 2];
        out.samples[p] = static_cast<std::uint16_t>(
            std::min<long long>(round_half_away(0.299 * r + 0.587 * g + 0.114 * b), 255));
    }
    return out;
}

std::vector<double> resize_plane_bilinear(const std::vector<double>& src, int sw, int sh,
                                          int out_w, int out_h) {
    if (out_w < 1 || out_h < 1) throw EmptyTarget("resize target must be at least 1x1");
    std::vector<double> out(static_cast<std::size_t>(out_w) * out_h);
    const double sx = static_cast<double>(sw) / out_w;
    const double sy = static_cast<double>(sh) / out_h;
    for (int y = 0; y < out_h; ++y) {
        double fy = (y + 0.5) * sy - 0.5;
        fy = std::clamp(fy, 0.0, static_cast<double>(sh - 1));
        int y0 = static_cast<int>(std::floor(fy));
        int y1 = std::min(y0 + 1, sh - 1);
        double wy = fy - y0;
        for (int x = 0; x < out_w; ++x) {
            double fx = (x + 0.5) * sx - 0.5;
            fx = std::clamp(fx, 0.0, static_cast<double>(sw - 1));
            int x0 = static_cast<int>(std::floor(fx));
            int x1 = std::min(x0 + 1, sw - 1);
            double wx = fx - x0;
            double top = src[static_cast<std::size_t>(y0) * sw + x0] * (1 - wx) +
                         src[static_cast<std::size_t>(y0) * sw + x1] * wx;
            double bot = src[static_cast<std::size_t>(y1) * sw + x0] * (1 - wx) +
                         src[static_cast<std::size_t>(y1) * sw + x1] * wx;
            out[static_cast<std::size_t>(y) * out_w + x] = top * (1 - wy) + bot * wy;
        }
    }
    return out;
}

Raster resize_bilinear(const Raster& img, int out_w, int out_h) {
    if (out_w < 1 || out_h < 1) throw EmptyTarget("resize target must be at least 1x1");
    if (img.width == out_w && img.height == out_h) return img;
    const int ch = channels(img.format);
    Raster out(out_w, out_h, img.format);
    std::vector<double> plane(img.pixel_count());
    const std::uint16_t cap = img.format == PixelFormat::Gray16 ? 65535 : 255;
    for (int c = 0; c < ch; ++c) {
        for (std::size_t p = 0; p < img.pixel_count(); ++p) plane[p] = img.samples[p * ch + c];
        std::vector<double> res = resize_plane_bilinear(plane, img.width, img.height, out_w, out_h);
        for (std::size_t p = 0; p < res.size(); ++p) {
            long long r = round_half_away(res[p]);
            out.samples[p * ch + c] =
                static_cast<std::uint16_t>(std::clamp<long long>(r, 0, cap));
        }
    }
    return out;
}

Raster blend(const Raster& f, const Raster& g, const BlendSpec& spec) {
    if (f.width != g.width || f.height != g.height || f.format != g.format)
        throw ShapeMismatch("blend inputs must share dimensions and format");
    Raster out(f.width, f.height, f.format);
    for (std::size_t i = 0; i < f.samples.size(); ++i) {
        double h = (1.0 - spec.c) * f.samples[i] + spec.c * g.samples[i];
        out.samples[i] = static_cast<std::uint16_t>(round_half_away(h));
    }
    return out;
}

namespace {

struct Hsv {
    double h; // degrees in [0, 360)
    double s;
    double v;
};

Hsv rgb_to_hsv(double r, double g, double b) {
    double mx = std::max({r, g, b});
    double mn = std::min({r, g, b});
    double d = mx - mn;
    Hsv out{0, 0, mx};
    if (mx > 0) out.s = d / mx;
    if (d > 0) {
        if (mx == r) out.h = 60.0 * std::fmod((g - b) / d, 6.0);
        else if (mx == g) out.h = 60.0 * ((b - r) / d + 2.0);
        else out.h = 60.0 * ((r - g) / d + 4.0);
        if (out.h < 0) out.h += 360.0;
    }
    return out;
}

void hsv_to_rgb(const Hsv& in, double& r, double& g, double& b) {
    double c = in.v * in.s;
    double hp = in.h / 60.0;
    double x = c * (1.0 - std::fabs(std::fmod(hp, 2.0) - 1.0));
    double r1 = 0, g1 = 0, b1 = 0;
    if (hp < 1) { r1 = c; g1 = x; }
    else if (hp < 2) { r1 = x; g1 = c; }
    else if (hp < 3) { g1 = c; b1 = x; }
    else if (hp < 4) { g1 = x; b1 = c; }
    else if (hp < 5) { r1 = x; b1 = c; }
    else { r1 = c; b1 = x; }
    double m = in.v - c;
    r = r1 + m;
    g = g1 + m;
    b = b1 + m;
}

} // namespace

Raster hue_shift(const Raster& img, double delta_degrees) {
    if (img.format != PixelFormat::Rgb8)
        throw ShapeMismatch("hue_shift expects an Rgb8 image");
    delta_degrees = std::fmod(delta_degrees, 360.0);
    if (delta_degrees == 0.0) return img;
    Raster out(img.width, img.height, PixelFormat::Rgb8);
    for (std::size_t p = 0; p < img.pixel_count(); ++p) {
        Hsv hsv = rgb_to_hsv(img.samples[p * 3] / 255.0, img.samples[p * 3 + 1] / 255.0,
                             img.samples[p * 3 + 2] / 255.0);
        hsv.h = std::fmod(hsv.h + delta_degrees, 360.0);
        if (hsv.h < 0) hsv.h += 360.0;
        double r, g, b;
        hsv_to_rgb(hsv, r, g, b);
        out.samples[p * 3] = static_cast<std::uint16_t>(std::clamp<long long>(round_half_away(r * 255.0), 0, 255));
        out.samples[p * 3 + 1] = static_cast<std::uint16_t>(std::clamp<long long>(round_half_away(g * 255.0), 0, 255));
        out.samples[p * 3 + 2] = static_cast<std::uint16_t>(std::clamp<long long>(round_half_away(b * 255.0), 0, 255));
    }
    return out;
}

Raster apply_mask(const Raster& img, const BinaryMask& mask) {
    if (img.width != mask.width || img.height != mask.height)
        throw ShapeMismatch("mask dimensions must match the image");
    Raster out = img;
    const int ch = channels(img.format);
    for (std::size_t p = 0; p < img.pixel_count(); ++p) {
        if (!mask.bits[p])
            for (int c = 0; c < ch; ++c) out.samples[p * ch + c] = 0;
    }
    return out;
}

} // namespace covct
