#include "covct/segmentation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <deque>
#include <unordered_map>

namespace covct {

int otsu_threshold(const Raster& img) {
    if (img.empty()) throw EmptyInput("otsu_threshold needs a nonempty image");
    std::array<std::size_t, 256> hist{};
    for (std::uint16_t v : img.samples) hist[std::min<std::uint16_t>(v, 255)]++;

    const double total = static_cast<double>(img.samples.size());
    double sum_all = 0;
    for (int v = 0; v < 256; ++v) sum_all += static_cast<double>(v) * hist[v];

    int best_t = 0;
    double best_var = -1.0;
    double w0 = 0, sum0 = 0;
    for (int t = 0; t < 256; ++t) {
        w0 += hist[t];
        sum0 += static_cast<double>(t) * hist[t];
        double w1 = total - w0;
        if (w0 == 0 || w1 == 0) continue;
        double mu0 = sum0 / w0;
        double mu1 = (sum_all - sum0) / w1;
        double between = (w0 / total) * (w1 / total) * (mu0 - mu1) * (mu0 - mu1);
        if (between > best_var) {
            best_var = between;
            best_t = t;
        }
    }
    if (best_var < 0) {
        // flat image: single tonal value
        return std::min<int>(img.samples[0], 255);
    }
    return best_t;
}

BinaryMask binarize(const Raster& img, int t, Polarity polarity) {
    BinaryMask out(img.width, img.height);
    for (std::size_t i = 0; i < img.samples.size(); ++i) {
        bool fg = polarity == Polarity::BrightFg ? img.samples[i] > t : img.samples[i] <= t;
        out.bits[i] = fg ? 1 : 0;
    }
    return out;
}

namespace {

BinaryMask erode_once(const BinaryMask& m) {
    BinaryMask out(m.width, m.height);
    for (int y = 0; y < m.height; ++y)
        for (int x = 0; x < m.width; ++x) {
            bool keep = true;
            for (int dy = -1; dy <= 1 && keep; ++dy)
                for (int dx = -1; dx <= 1 && keep; ++dx) {
                    int nx = x + dx, ny = y + dy;
                    if (nx < 0 || ny < 0 || nx >= m.width || ny >= m.height || !m.at(nx, ny))
                        keep = false;
                }
            out.at(x, y) = keep ? 1 : 0;
        }
    return out;
}

BinaryMask dilate_once(const BinaryMask& m) {
    BinaryMask out(m.width, m.height);
    for (int y = 0; y < m.height; ++y)
        for (int x = 0; x < m.width; ++x) {
            bool hit = false;
            for (int dy = -1; dy <= 1 && !hit; ++dy)
                for (int dx = -1; dx <= 1 && !hit; ++dx) {
                    int nx = x + dx, ny = y + dy;
                    if (nx >= 0 && ny >= 0 && nx < m.width && ny < m.height && m.at(nx, ny))
                        hit = true;
                }
            out.at(x, y) = hit ? 1 : 0;
        }
    return out;
}

} // namespace

BinaryMask morphology(const BinaryMask& mask, MorphOp op, int iterations) {
    BinaryMask cur = mask;
    for (int i = 0; i < iterations; ++i) {
        switch (op) {
        case MorphOp::Erode: cur = erode_once(cur); break;
        case MorphOp::Dilate: cur = dilate_once(cur); break;
        case MorphOp::HoleFillOpen: cur = erode_once(dilate_once(cur)); break;
        }
    }
    return cur;
}

namespace {

// Clockwise neighborhood starting east.
constexpr std::array<std::array<int, 2>, 8> kDirs{{{1, 0}, {1, 1}, {0, 1}, {-1, 1},
                                                   {-1, 0}, {-1, -1}, {0, -1}, {1, -1}}};

// Moore-neighbor border trace over an arbitrary pixel membership predicate.
template <typename InSet>
std::vector<Point> trace_border(Point start, InSet in_set) {
    std::vector<Point> out{start};
    // backtrack is the west neighbor of the scan-order start pixel
    int back_dir = 4; // direction from current pixel toward the backtrack (west)
    Point cur = start;
    const Point first = start;
    const int first_back = back_dir;
    for (;;) {
        int found = -1;
        for (int i = 1; i <= 8; ++i) {
            int d = (back_dir + i) % 8;
            Point n{cur.x + kDirs[d][0], cur.y + kDirs[d][1]};
            if (in_set(n)) {
                found = d;
                break;
            }
        }
        if (found < 0) break; // isolated pixel
        Point next{cur.x + kDirs[found][0], cur.y + kDirs[found][1]};
        // backtrack for the next pixel is the neighbor checked just before the hit
        int prev_dir = (found + 7) % 8;
        Point back{cur.x + kDirs[prev_dir][0], cur.y + kDirs[prev_dir][1]};
        int nb = 0;
        for (int d = 0; d < 8; ++d)
            if (next.x + kDirs[d][0] == back.x && next.y + kDirs[d][1] == back.y) { nb = d; break; }
        cur = next;
        back_dir = nb;
        if (cur == first && back_dir == first_back) break;
        out.push_back(cur);
    }
    return out;
}

} // namespace

std::vector<ContourPolygon> find_contours(const BinaryMask& mask) {
    const int w = mask.width, h = mask.height;
    std::vector<ContourPolygon> out;
    if (w == 0 || h == 0) return out;

    auto idx = [w](int x, int y) { return static_cast<std::size_t>(y) * w + x; };
    std::vector<int> fg_label(static_cast<std::size_t>(w) * h, -1);
    std::vector<int> bg_label(static_cast<std::size_t>(w) * h, -1);

    // 8-connected foreground components in scan order
    int n_fg = 0;
    std::vector<Point> fg_start;
    std::vector<char> fg_touches;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            if (!mask.at(x, y) || fg_label[idx(x, y)] >= 0) continue;
            int id = n_fg++;
            fg_start.push_back({x, y});
            fg_touches.push_back(0);
            std::deque<Point> q{{x, y}};
            fg_label[idx(x, y)] = id;
            while (!q.empty()) {
                Point p = q.front();
                q.pop_front();
                if (p.x == 0 || p.y == 0 || p.x == w - 1 || p.y == h - 1) fg_touches[id] = 1;
                for (auto [dx, dy] : kDirs) {
                    int nx = p.x + dx, ny = p.y + dy;
                    if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                    if (mask.at(nx, ny) && fg_label[idx(nx, ny)] < 0) {
                        fg_label[idx(nx, ny)] = id;
                        q.push_back({nx, ny});
                    }
                }
            }
        }

    // 4-connected background components; those touching the border are outside
    int n_bg = 0;
    std::vector<Point> bg_start;
    std::vector<char> bg_outside;
    constexpr std::array<std::array<int, 2>, 4> k4{{{1, 0}, {-1, 0}, {0, 1}, {0, -1}}};
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            if (mask.at(x, y) || bg_label[idx(x, y)] >= 0) continue;
            int id = n_bg++;
            bg_start.push_back({x, y});
            bg_outside.push_back(0);
            std::deque<Point> q{{x, y}};
            bg_label[idx(x, y)] = id;
            while (!q.empty()) {
                Point p = q.front();
                q.pop_front();
                if (p.x == 0 || p.y == 0 || p.x == w - 1 || p.y == h - 1) bg_outside[id] = 1;
                for (auto [dx, dy] : k4) {
                    int nx = p.x + dx, ny = p.y + dy;
                    if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                    if (!mask.at(nx, ny) && bg_label[idx(nx, ny)] < 0) {
                        bg_label[idx(nx, ny)] = id;
                        q.push_back({nx, ny});
                    }
                }
            }
        }

    // outer borders
    std::unordered_map<int, int> fg_contour_index;
    for (int id = 0; id < n_fg; ++id) {
        ContourPolygon c;
        c.is_outer = true;
        c.touches_border = fg_touches[id] != 0;
        c.points = trace_border(fg_start[id], [&](Point p) {
            return p.x >= 0 && p.y >= 0 && p.x < w && p.y < h && fg_label[idx(p.x, p.y)] == id;
        });
        fg_contour_index[id] = static_cast<int>(out.size());
        out.push_back(std::move(c));
    }

    // hole borders; parent is the surrounding foreground contour
    std::unordered_map<int, int> hole_contour_index;
    for (int id = 0; id < n_bg; ++id) {
        if (bg_outside[id]) continue;
        ContourPolygon c;
        c.is_outer = false;
        c.touches_border = false;
        c.points = trace_border(bg_start[id], [&](Point p) {
            return p.x >= 0 && p.y >= 0 && p.x < w && p.y < h && bg_label[idx(p.x, p.y)] == id;
        });
        Point s = bg_start[id];
        if (s.x > 0 && fg_label[idx(s.x - 1, s.y)] >= 0)
            c.parent = fg_contour_index[fg_label[idx(s.x - 1, s.y)]];
        hole_contour_index[id] = static_cast<int>(out.size());
        out.push_back(std::move(c));
    }

    // a foreground region nested inside a hole parents to that hole border
    for (int id = 0; id < n_fg; ++id) {
        Point s = fg_start[id];
        if (s.x > 0) {
            int b = bg_label[idx(s.x - 1, s.y)];
            if (b >= 0 && !bg_outside[b]) out[fg_contour_index[id]].parent = hole_contour_index[b];
        }
    }
    return out;
}

double contour_area(const ContourPolygon& c) {
    const auto& p = c.points;
    if (p.size() < 3) return 0.0;
    long long twice = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const Point& a = p[i];
        const Point& b = p[(i + 1) % p.size()];
        twice += static_cast<long long>(a.x) * b.y - static_cast<long long>(b.x) * a.y;
    }
    return std::abs(static_cast<double>(twice)) / 2.0;
}

std::vector<ContourPolygon> select_lung_contours(const std::vector<ContourPolygon>& contours) {
    std::vector<ContourPolygon> out;
    for (const auto& c : contours) {
        if (!c.is_outer || c.touches_border) continue;
        double a = contour_area(c);
        if (a > kMinLungArea && a < kMaxLungArea) out.push_back(c);
    }
    return out;
}

BinaryMask fill_contours(const std::vector<ContourPolygon>& contours, int w, int h) {
    BinaryMask out(w, h);
    for (const auto& c : contours) {
        const auto& pts = c.points;
        if (pts.empty()) continue;
        // even-odd scanline fill through pixel centers
        for (int y = 0; y < h; ++y) {
            std::vector<double> xs;
            for (std::size_t i = 0; i < pts.size(); ++i) {
                const Point& a = pts[i];
                const Point& b = pts[(i + 1) % pts.size()];
                if (a.y == b.y) continue;
                bool crosses = (a.y <= y && b.y > y) || (b.y <= y && a.y > y);
                if (!crosses) continue;
                xs.push_back(a.x + static_cast<double>(y - a.y) * (b.x - a.x) / (b.y - a.y));
            }
            std::sort(xs.begin(), xs.end());
            for (std::size_t i = 0; i + 1 < xs.size(); i += 2) {
                int x0 = std::max(0, static_cast<int>(std::ceil(xs[i])));
                for (int x = x0; x < w && x < xs[i + 1]; ++x) out.at(x, y) = 1;
            }
        }
        // boundary pixels are foreground
        for (std::size_t i = 0; i < pts.size(); ++i) {
            Point a = pts[i];
            Point b = pts[(i + 1) % pts.size()];
            int steps = std::max(std::abs(b.x - a.x), std::abs(b.y - a.y));
            for (int s = 0; s <= steps; ++s) {
                int x = a.x + static_cast<int>(round_half_away(
                                  steps == 0 ? 0 : static_cast<double>(s) * (b.x - a.x) / steps));
                int y = a.y + static_cast<int>(round_half_away(
                                  steps == 0 ? 0 : static_cast<double>(s) * (b.y - a.y) / steps));
                if (x >= 0 && y >= 0 && x < w && y < h) out.at(x, y) = 1;
            }
        }
    }
    return out;
}

Rect bounding_box(const std::vector<ContourPolygon>& contours) {
    int min_x = 1 << 30, min_y = 1 << 30, max_x = -1, max_y = -1;
    for (const auto& c : contours)
        for (const Point& p : c.points) {
            min_x = std::min(min_x, p.x);
            min_y = std::min(min_y, p.y);
            max_x = std::max(max_x, p.x);
            max_y = std::max(max_y, p.y);
        }
    if (max_x < 0) return {};
    return {min_x, min_y, max_x - min_x + 1, max_y - min_y + 1};
}

Raster crop_enlarge(const Raster& img, const Rect& bbox) {
    if (bbox.w <= 0 || bbox.h <= 0 || bbox.x < 0 || bbox.y < 0 ||
        bbox.x + bbox.w > img.width || bbox.y + bbox.h > img.height)
        throw InvalidBBox("bbox outside image bounds or empty");
    const int ch = channels(img.format);
    Raster crop(bbox.w, bbox.h, img.format);
    for (int y = 0; y < bbox.h; ++y)
        for (int x = 0; x < bbox.w; ++x)
            for (int c = 0; c < ch; ++c)
                crop.at(x, y, c) = img.at(bbox.x + x, bbox.y + y, c);
    return resize_bilinear(crop, img.width, img.height);
}

SegmentationResult segment_lungs(const Raster& img) {
    int t = otsu_threshold(img);
    BinaryMask bin = binarize(img, t, Polarity::DarkFg);
    BinaryMask cleaned = morphology(bin, MorphOp::HoleFillOpen, 1);
    BinaryMask dilated = morphology(cleaned, MorphOp::Dilate, 2);
    std::vector<ContourPolygon> contours = find_contours(dilated);
    std::vector<ContourPolygon> accepted = select_lung_contours(contours);
    if (accepted.empty()) throw NoLungFound("no contour passed the lung area filter");

    SegmentationResult result;
    result.accepted = accepted;
    result.mask = fill_contours(accepted, img.width, img.height);
    result.segmented = apply_mask(img, result.mask);
    result.bbox = bounding_box(accepted);
    result.enlarged = crop_enlarge(result.segmented, result.bbox);
    return result;
}

} // namespace covct
