#pragma once

#include <optional>
#include <vector>

#include "covct/raster.hpp"

namespace covct {

struct Point {
    int x = 0;
    int y = 0;
    bool operator==(const Point&) const = default;
};

/// Closed polygon traced along region border pixels.
struct ContourPolygon {
    std::vector<Point> points;
    bool is_outer = true;
    std::optional<int> parent; // index into the contour list
    bool touches_border = false;
};

struct Rect {
    int x = 0;
    int y = 0;
    int w = 0;
    int h = 0;
    bool operator==(const Rect&) const = default;
};

struct SegmentationResult {
    BinaryMask mask;
    Raster segmented;
    Rect bbox;
    Raster enlarged;
    std::vector<ContourPolygon> accepted;
};

enum class Polarity { BrightFg, DarkFg };
enum class MorphOp { Erode, Dilate, HoleFillOpen };

// Area filter from the segmentation pipeline: strictly between 100*100 and 512*512.
inline constexpr double kMinLungArea = 100.0 * 100.0;
inline constexpr double kMaxLungArea = 512.0 * 512.0;

/// Threshold maximizing between-class histogram variance; ties break toward
/// the smallest value. A flat image returns its single tonal value.
int otsu_threshold(const Raster& img);

/// BrightFg: pixel > t is foreground. DarkFg: pixel <= t is foreground.
BinaryMask binarize(const Raster& img, int t, Polarity polarity);

/// 3x3 full-square structuring element. HoleFillOpen is one dilation followed
/// by one erosion per iteration. Out-of-bounds counts as background.
BinaryMask morphology(const BinaryMask& mask, MorphOp op, int iterations = 1);

/// Border following over 8-connected foreground; outer borders and hole
/// borders with parent links.
std::vector<ContourPolygon> find_contours(const BinaryMask& mask);

/// Shoelace area through pixel centers, absolute value.
double contour_area(const ContourPolygon& c);

/// Outer contours with kMinLungArea < area < kMaxLungArea, not touching the
/// image border.
std::vector<ContourPolygon> select_lung_contours(const std::vector<ContourPolygon>& contours);

/// Even-odd scanline fill of each contour, union over the list; contour
/// boundary pixels are foreground.
BinaryMask fill_contours(const std::vector<ContourPolygon>& contours, int w, int h);

Rect bounding_box(const std::vector<ContourPolygon>& contours);

/// Crop to bbox, then resize back to the original dimensions.
Raster crop_enlarge(const Raster& img, const Rect& bbox);

/// Full parenchyma pipeline: Otsu -> DarkFg binarize -> hole-fill -> two
/// dilations -> contours -> area filter -> fill -> mask the input.
SegmentationResult segment_lungs(const Raster& img);

} // namespace covct
