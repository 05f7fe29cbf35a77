#include <doctest.h>

#include <random>

#include "covct/segmentation.hpp"
#include "support/oracles.hpp"
#include "support/phantom.hpp"

using namespace covct;
using covct_test::Ellipse;

namespace {

BinaryMask random_blob_mask(std::mt19937& rng, int size) {
    // union of a few discs, kept away from the border; hole-free by construction
    BinaryMask m(size, size);
    std::uniform_int_distribution<int> cd(size / 4, 3 * size / 4);
    std::uniform_int_distribution<int> rd(2, size / 6);
    int discs = 1 + static_cast<int>(rng() % 3);
    int cx0 = cd(rng), cy0 = cd(rng);
    for (int d = 0; d < discs; ++d) {
        // keep discs overlapping so the blob stays connected
        int cx = d == 0 ? cx0 : cx0 + static_cast<int>(rng() % 7) - 3;
        int cy = d == 0 ? cy0 : cy0 + static_cast<int>(rng() % 7) - 3;
        int r = rd(rng);
        for (int y = 1; y < size - 1; ++y)
            for (int x = 1; x < size - 1; ++x)
                if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r) m.at(x, y) = 1;
    }
    return m;
}

bool subset(const BinaryMask& a, const BinaryMask& b) {
    for (std::size_t i = 0; i < a.bits.size(); ++i)
        if (a.bits[i] && !b.bits[i]) return false;
    return true;
}

} // namespace

TEST_CASE("otsu on a bimodal image picks the smallest optimal threshold") {
    Raster img(4, 4, PixelFormat::Gray8);
    for (int i = 0; i < 8; ++i) img.samples[i] = 50;
    for (int i = 8; i < 16; ++i) img.samples[i] = 200;
    CHECK(otsu_threshold(img) == 50);
}

TEST_CASE("otsu on a flat image returns the tonal value") {
    Raster img(5, 5, PixelFormat::Gray8, 7);
    CHECK(otsu_threshold(img) == 7);
    // bright-foreground binarization of a flat image is empty
    CHECK(binarize(img, 7, Polarity::BrightFg).count_foreground() == 0);
}

TEST_CASE("otsu equals the exhaustive brute force on random images") {
    std::mt19937 rng(42);
    std::uniform_int_distribution<int> dist(0, 255);
    for (int trial = 0; trial < 100; ++trial) {
        Raster img(16, 16, PixelFormat::Gray8);
        for (auto& s : img.samples) s = static_cast<std::uint16_t>(dist(rng));
        CHECK(otsu_threshold(img) == covct_test::otsu_brute_force(img));
    }
}

TEST_CASE("binarize polarity") {
    Raster img(4, 4, PixelFormat::Gray8, 120);
    CHECK(binarize(img, 100, Polarity::BrightFg).count_foreground() == 16);
    CHECK(binarize(img, 100, Polarity::DarkFg).count_foreground() == 0);

    Raster mixed(4, 4, PixelFormat::Gray8);
    for (int i = 0; i < 16; ++i) mixed.samples[i] = i % 2 ? 50 : 200;
    BinaryMask dark = binarize(mixed, 50, Polarity::DarkFg);
    for (int i = 0; i < 16; ++i) CHECK(dark.bits[i] == (i % 2 ? 1 : 0));
}

TEST_CASE("morphology basics") {
    BinaryMask empty(8, 8);
    CHECK(morphology(empty, MorphOp::Dilate) == empty);

    BinaryMask lone(8, 8);
    lone.at(4, 4) = 1;
    CHECK(morphology(lone, MorphOp::Erode).count_foreground() == 0);

    // hole-fill closes a single interior hole and keeps the outline
    BinaryMask square(14, 14);
    for (int y = 2; y < 12; ++y)
        for (int x = 2; x < 12; ++x) square.at(x, y) = 1;
    BinaryMask holed = square;
    holed.at(6, 6) = 0;
    CHECK(morphology(holed, MorphOp::HoleFillOpen) == square);
}

TEST_CASE("morphology ordering properties") {
    std::mt19937 rng(17);
    for (int trial = 0; trial < 15; ++trial) {
        BinaryMask m = random_blob_mask(rng, 24);
        BinaryMask d = morphology(m, MorphOp::Dilate);
        BinaryMask e = morphology(m, MorphOp::Erode);
        CHECK(subset(m, d));
        CHECK(subset(e, m));
        CHECK(subset(morphology(e, MorphOp::Dilate), m));
        CHECK(subset(m, morphology(d, MorphOp::Erode)));

        // duality for foreground away from the border
        BinaryMask comp(m.width, m.height);
        for (std::size_t i = 0; i < m.bits.size(); ++i) comp.bits[i] = m.bits[i] ? 0 : 1;
        BinaryMask dual = morphology(comp, MorphOp::Dilate);
        bool interior = true;
        for (int x = 0; x < m.width && interior; ++x)
            if (m.at(x, 0) || m.at(x, m.height - 1)) interior = false;
        for (int y = 0; y < m.height && interior; ++y)
            if (m.at(0, y) || m.at(m.width - 1, y)) interior = false;
        if (interior) {
            BinaryMask expect = morphology(m, MorphOp::Erode);
            for (std::size_t i = 0; i < m.bits.size(); ++i)
                CHECK(expect.bits[i] == (dual.bits[i] ? 0 : 1));
        }
    }
}

TEST_CASE("find_contours on simple shapes") {
    BinaryMask empty(10, 10);
    CHECK(find_contours(empty).empty());

    BinaryMask square(30, 30);
    for (int y = 4; y < 24; ++y)
        for (int x = 4; x < 24; ++x) square.at(x, y) = 1;
    auto cs = find_contours(square);
    REQUIRE(cs.size() == 1);
    CHECK(cs[0].is_outer);
    CHECK_FALSE(cs[0].touches_border);
    CHECK(cs[0].points.size() == 76); // 4*(20-1) perimeter pixels
    for (std::size_t i = 0; i < cs[0].points.size(); ++i) {
        const Point& a = cs[0].points[i];
        const Point& b = cs[0].points[(i + 1) % cs[0].points.size()];
        CHECK(std::max(std::abs(a.x - b.x), std::abs(a.y - b.y)) <= 1);
    }

    BinaryMask donut = square;
    for (int y = 10; y < 18; ++y)
        for (int x = 10; x < 18; ++x) donut.at(x, y) = 0;
    auto dcs = find_contours(donut);
    REQUIRE(dcs.size() == 2);
    CHECK(dcs[0].is_outer);
    CHECK_FALSE(dcs[1].is_outer);
    CHECK(dcs[1].parent == 0);
}

TEST_CASE("contour_area shoelace") {
    ContourPolygon pt;
    pt.points = {{3, 3}};
    CHECK(contour_area(pt) == 0.0);

    ContourPolygon sq;
    sq.points = {{0, 0}, {9, 0}, {9, 9}, {0, 9}};
    CHECK(contour_area(sq) == 81.0);

    ContourPolygon tri;
    tri.points = {{0, 0}, {4, 0}, {0, 4}};
    CHECK(contour_area(tri) == 8.0);
}

TEST_CASE("select_lung_contours area and border rules") {
    auto rect_contour = [](int x0, int y0, int w, int h, bool touches) {
        ContourPolygon c;
        c.points = {{x0, y0}, {x0 + w - 1, y0}, {x0 + w - 1, y0 + h - 1}, {x0, y0 + h - 1}};
        c.is_outer = true;
        c.touches_border = touches;
        return c;
    };
    // (w-1)*(h-1) shoelace areas: 4970 rejected, 50176 accepted
    std::vector<ContourPolygon> cs{rect_contour(5, 5, 71, 71, false),
                                   rect_contour(5, 5, 225, 225, false),
                                   rect_contour(0, 0, 225, 225, true)};
    auto accepted = select_lung_contours(cs);
    REQUIRE(accepted.size() == 1);
    CHECK(contour_area(accepted[0]) == doctest::Approx(50176));

    ContourPolygon hole = rect_contour(5, 5, 225, 225, false);
    hole.is_outer = false;
    CHECK(select_lung_contours({hole}).empty());
}

TEST_CASE("fill_contours basics and union") {
    CHECK(fill_contours({}, 8, 8).count_foreground() == 0);

    ContourPolygon a;
    a.points = {{1, 1}, {3, 1}, {3, 3}, {1, 3}};
    ContourPolygon b;
    b.points = {{6, 6}, {7, 6}, {7, 7}, {6, 7}};
    BinaryMask m = fill_contours({a, b}, 10, 10);
    CHECK(m.count_foreground() == 9 + 4);
    CHECK(m.at(2, 2) == 1);
    CHECK(m.at(6, 7) == 1);
    CHECK(m.at(5, 5) == 0);
}

TEST_CASE("trace then fill reproduces hole-free blobs") {
    std::mt19937 rng(23);
    for (int trial = 0; trial < 25; ++trial) {
        BinaryMask m = random_blob_mask(rng, 40);
        if (m.count_foreground() == 0) continue;
        auto cs = find_contours(m);
        BinaryMask refill = fill_contours(cs, m.width, m.height);
        CHECK(refill == m);
    }
}

TEST_CASE("segment_lungs rejects a blank image") {
    Raster blank(128, 128, PixelFormat::Gray8, 90);
    CHECK_THROWS_AS(segment_lungs(blank), NoLungFound);
}

TEST_CASE("segment_lungs on a two-ellipse phantom") {
    auto p = covct_test::make_phantom(512, 240.0,
                                      {Ellipse{150, 256, 75, 50}, Ellipse{362, 256, 75, 50}});
    SegmentationResult seg = segment_lungs(p.image);
    CHECK(seg.accepted.size() == 2);
    // the two trailing dilations grow the mask ~2 px beyond the analytic
    // ellipse, which caps the attainable IoU for lungs of this size near 0.93
    CHECK(covct_test::mask_iou(seg.mask, p.truth) >= 0.90);
    for (const auto& c : seg.accepted) {
        double a = contour_area(c);
        CHECK(a > kMinLungArea);
        CHECK(a < kMaxLungArea);
        CHECK_FALSE(c.touches_border);
    }
    CHECK(subset(seg.mask, fill_contours(seg.accepted, 512, 512)));
    CHECK(seg.enlarged.width == 512);
    CHECK(seg.enlarged.height == 512);
    // mask foreground stays inside the union bounding box
    for (int y = 0; y < 512; ++y)
        for (int x = 0; x < 512; ++x)
            if (seg.mask.at(x, y)) {
                CHECK(x >= seg.bbox.x);
                CHECK(x < seg.bbox.x + seg.bbox.w);
                CHECK(y >= seg.bbox.y);
                CHECK(y < seg.bbox.y + seg.bbox.h);
            }
}

TEST_CASE("segment_lungs drops an ellipse below the area floor") {
    auto p = covct_test::make_phantom(512, 240.0,
                                      {Ellipse{150, 256, 40, 50}, Ellipse{362, 256, 90, 120}});
    SegmentationResult seg = segment_lungs(p.image);
    REQUIRE(seg.accepted.size() == 1);
    CHECK(contour_area(seg.accepted[0]) > kMinLungArea);
    // the accepted contour sits on the right-hand ellipse
    CHECK(seg.bbox.x > 256);
}

TEST_CASE("crop_enlarge") {
    Raster img(8, 8, PixelFormat::Gray8);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) img.at(x, y) = x < 4 ? 0 : 255;
    CHECK(crop_enlarge(img, {0, 0, 8, 8}) == img);

    Raster left = crop_enlarge(img, {0, 0, 4, 8});
    for (auto s : left.samples) CHECK(s == 0);

    Raster c(6, 6, PixelFormat::Gray8, 42);
    Raster cc = crop_enlarge(c, {1, 1, 3, 3});
    for (auto s : cc.samples) CHECK(s == 42);

    CHECK_THROWS_AS(crop_enlarge(img, {4, 4, 8, 8}), InvalidBBox);
    CHECK_THROWS_AS(crop_enlarge(img, {0, 0, 0, 3}), InvalidBBox);
}
