#pragma once

#include <string>

#include "covct/raster.hpp"

namespace covct {

/// Reads an uncompressed little-endian 16-bit single-channel baseline TIFF.
/// Throws IoError for unreadable files and UnsupportedTiff for anything
/// outside that subset (compression, tiles, other bit depths).
Raster read_tiff16(const std::string& path);

/// Writes a Gray16 raster as a minimal single-strip uncompressed TIFF.
void write_tiff16(const std::string& path, const Raster& img);

/// Reads an 8-bit grayscale, RGB or RGBA PNG.
Raster read_png(const std::string& path);

/// Writes Gray8 or Rgb8 rasters as 8-bit PNG. BinaryMask helper writes 0/255.
void write_png(const std::string& path, const Raster& img);
void write_png(const std::string& path, const BinaryMask& mask);

} // namespace covct
