#include "covct/image_io.hpp"

#include <png.h>

#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <vector>

namespace covct {

namespace {

std::uint16_t rd16(const std::uint8_t* p) { return static_cast<std::uint16_t>(p[0] | (p[1] << 8)); }
std::uint32_t rd32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

struct IfdEntry {
    std::uint16_t tag = 0;
    std::uint16_t type = 0;
    std::uint32_t count = 0;
    std::uint32_t value = 0; // inline value or offset
};

// Returns the entry values as integers, following the offset when the data
// does not fit in the 4 inline bytes.
std::vector<std::uint32_t> entry_values(const IfdEntry& e, const std::vector<std::uint8_t>& buf) {
    std::size_t elem = e.type == 3 ? 2 : 4; // SHORT or LONG
    if (e.type != 3 && e.type != 4)
        throw UnsupportedTiff("unsupported TIFF field type " + std::to_string(e.type));
    std::vector<std::uint32_t> out;
    std::size_t total = elem * e.count;
    const std::uint8_t* base;
    std::uint8_t inline_bytes[4];
    if (total <= 4) {
        inline_bytes[0] = static_cast<std::uint8_t>(e.value & 0xff);
        inline_bytes[1] = static_cast<std::uint8_t>((e.value >> 8) & 0xff);
        inline_bytes[2] = static_cast<std::uint8_t>((e.value >> 16) & 0xff);
        inline_bytes[3] = static_cast<std::uint8_t>((e.value >> 24) & 0xff);
        base = inline_bytes;
    } else {
        if (e.value + total > buf.size()) throw UnsupportedTiff("TIFF field offset out of range");
        base = buf.data() + e.value;
    }
    for (std::uint32_t i = 0; i < e.count; ++i)
        out.push_back(elem == 2 ? rd16(base + i * 2) : rd32(base + i * 4));
    return out;
}

void wr16(std::vector<std::uint8_t>& b, std::uint16_t v) {
    b.push_back(static_cast<std::uint8_t>(v & 0xff));
    b.push_back(static_cast<std::uint8_t>(v >> 8));
}
void wr32(std::vector<std::uint8_t>& b, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) b.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

} // namespace

Raster read_tiff16(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
    if (buf.size() < 8) throw UnsupportedTiff("file too small for a TIFF header");
    if (!(buf[0] == 'I' && buf[1] == 'I'))
        throw UnsupportedTiff("only little-endian (II) TIFF is supported");
    if (rd16(buf.data() + 2) != 42) throw UnsupportedTiff("bad TIFF magic");
    std::uint32_t ifd_off = rd32(buf.data() + 4);
    if (ifd_off + 2 > buf.size()) throw UnsupportedTiff("IFD offset out of range");
    std::uint16_t n = rd16(buf.data() + ifd_off);
    if (ifd_off + 2 + n * 12u > buf.size()) throw UnsupportedTiff("truncated IFD");

    std::uint32_t width = 0, height = 0, bits = 1, compression = 1, spp = 1;
    std::uint32_t rows_per_strip = 0xffffffff;
    std::vector<std::uint32_t> strip_offsets, strip_counts;
    for (std::uint16_t i = 0; i < n; ++i) {
        const std::uint8_t* p = buf.data() + ifd_off + 2 + i * 12;
        IfdEntry e{rd16(p), rd16(p + 2), rd32(p + 4), rd32(p + 8)};
        switch (e.tag) {
        case 256: width = entry_values(e, buf)[0]; break;
        case 257: height = entry_values(e, buf)[0]; break;
        case 258: bits = entry_values(e, buf)[0]; break;
        case 259: compression = entry_values(e, buf)[0]; break;
        case 273: strip_offsets = entry_values(e, buf); break;
        case 277: spp = entry_values(e, buf)[0]; break;
        case 278: rows_per_strip = entry_values(e, buf)[0]; break;
        case 279: strip_counts = entry_values(e, buf); break;
        case 322: case 323: throw UnsupportedTiff("tiled TIFF is not supported");
        default: break;
        }
    }
    if (compression != 1) throw UnsupportedTiff("compressed TIFF is not supported");
    if (bits != 16 || spp != 1) throw UnsupportedTiff("only 16-bit single-channel TIFF is supported");
    if (width == 0 || height == 0 || strip_offsets.empty())
        throw UnsupportedTiff("missing required TIFF fields");

    Raster out(static_cast<int>(width), static_cast<int>(height), PixelFormat::Gray16);
    std::size_t written = 0;
    for (std::size_t s = 0; s < strip_offsets.size(); ++s) {
        std::uint32_t off = strip_offsets[s];
        std::uint32_t len = s < strip_counts.size()
                                ? strip_counts[s]
                                : static_cast<std::uint32_t>(out.samples.size() * 2);
        if (off + len > buf.size()) throw UnsupportedTiff("strip data out of range");
        for (std::uint32_t b = 0; b + 1 < len && written < out.samples.size(); b += 2)
            out.samples[written++] = rd16(buf.data() + off + b);
    }
    if (written != out.samples.size()) throw UnsupportedTiff("truncated TIFF pixel data");
    (void)rows_per_strip;
    return out;
}

void write_tiff16(const std::string& path, const Raster& img) {
    if (img.format != PixelFormat::Gray16) throw IoError("write_tiff16 expects Gray16");
    std::vector<std::uint8_t> buf;
    buf.reserve(img.samples.size() * 2 + 256);
    buf.insert(buf.end(), {'I', 'I'});
    wr16(buf, 42);
    std::uint32_t data_off = 8;
    std::uint32_t data_len = static_cast<std::uint32_t>(img.samples.size() * 2);
    wr32(buf, data_off + data_len); // IFD follows the pixel data
    for (std::uint16_t v : img.samples) wr16(buf, v);

    auto entry = [&](std::uint16_t tag, std::uint16_t type, std::uint32_t count, std::uint32_t value) {
        wr16(buf, tag); wr16(buf, type); wr32(buf, count); wr32(buf, value);
    };
    wr16(buf, 8); // entry count
    entry(256, 4, 1, static_cast<std::uint32_t>(img.width));
    entry(257, 4, 1, static_cast<std::uint32_t>(img.height));
    entry(258, 3, 1, 16);
    entry(259, 3, 1, 1); // no compression
    entry(262, 3, 1, 1); // black is zero
    entry(273, 4, 1, data_off);
    entry(278, 4, 1, static_cast<std::uint32_t>(img.height));
    entry(279, 4, 1, data_len);
    wr32(buf, 0); // no next IFD

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
}

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const { if (f) std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

} // namespace

Raster read_png(const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw IoError("cannot open " + path);
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (!png || !info) throw IoError("libpng init failed");
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("failed to decode " + path);
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);

    png_uint_32 w = png_get_image_width(png, info);
    png_uint_32 h = png_get_image_height(png, info);
    int depth = png_get_bit_depth(png, info);
    int color = png_get_color_type(png, info);
    if (depth == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    png_read_update_info(png, info);
    color = png_get_color_type(png, info);
    int ch = png_get_channels(png, info);

    PixelFormat fmt;
    if (ch == 1) fmt = PixelFormat::Gray8;
    else if (ch == 3) fmt = PixelFormat::Rgb8;
    else if (ch == 4) fmt = PixelFormat::Rgba8;
    else if (ch == 2) { png_set_strip_alpha(png); ch = 1; fmt = PixelFormat::Gray8; }
    else {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("unsupported PNG channel count");
    }

    Raster out(static_cast<int>(w), static_cast<int>(h), fmt);
    std::vector<std::uint8_t> row(static_cast<std::size_t>(w) * ch);
    for (png_uint_32 y = 0; y < h; ++y) {
        png_read_row(png, row.data(), nullptr);
        for (std::size_t i = 0; i < row.size(); ++i)
            out.samples[static_cast<std::size_t>(y) * w * ch + i] = row[i];
    }
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return out;
}

void write_png(const std::string& path, const Raster& img) {
    int color;
    int ch = channels(img.format);
    if (img.format == PixelFormat::Gray8) color = PNG_COLOR_TYPE_GRAY;
    else if (img.format == PixelFormat::Rgb8) color = PNG_COLOR_TYPE_RGB;
    else if (img.format == PixelFormat::Rgba8) color = PNG_COLOR_TYPE_RGBA;
    else throw IoError("write_png expects an 8-bit raster");

    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw IoError("cannot write " + path);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (!png || !info) throw IoError("libpng init failed");
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("failed to encode " + path);
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width),
                 static_cast<png_uint_32>(img.height), 8, color, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<std::uint8_t> row(static_cast<std::size_t>(img.width) * ch);
    for (int y = 0; y < img.height; ++y) {
        for (std::size_t i = 0; i < row.size(); ++i)
            row[i] = static_cast<std::uint8_t>(
                img.samples[static_cast<std::size_t>(y) * img.width * ch + i]);
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

void write_png(const std::string& path, const BinaryMask& mask) {
    Raster img(mask.width, mask.height, PixelFormat::Gray8);
    for (std::size_t i = 0; i < mask.bits.size(); ++i) img.samples[i] = mask.bits[i] ? 255 : 0;
    write_png(path, img);
}

} // namespace covct
