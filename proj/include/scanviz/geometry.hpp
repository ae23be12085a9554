#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace scanviz {

inline constexpr int kImageSize = 320;
inline constexpr int kGridSize = 20;
inline constexpr int kCellPx = kImageSize / kGridSize;  // 16
inline constexpr int kNumCells = kGridSize * kGridSize; // 400

// Pixel rectangle, inclusive-exclusive: [x0,x1) x [y0,y1).
struct Rect {
    int x0 = 0, y0 = 0, x1 = 0, y1 = 0;

    int width() const { return x1 - x0; }
    int height() const { return y1 - y0; }
    long area() const { return static_cast<long>(width()) * height(); }
    bool empty() const { return x1 <= x0 || y1 <= y0; }

    bool contains(int x, int y) const { return x >= x0 && x < x1 && y >= y0 && y < y1; }

    bool intersects(const Rect& o) const {
        return x0 < o.x1 && o.x0 < x1 && y0 < o.y1 && o.y0 < y1;
    }

    Rect clipped(int w, int h) const {
        return {std::max(x0, 0), std::max(y0, 0), std::min(x1, w), std::min(y1, h)};
    }

    bool operator==(const Rect&) const = default;
};

struct PixelCoord {
    int x = 0, y = 0;
    bool operator==(const PixelCoord&) const = default;
};

// Cell on the 20x20 fixation grid; cell (c,r) covers pixels
// [16c, 16c+16) x [16r, 16r+16).
struct GridCoord {
    int col = 0, row = 0;
    bool operator==(const GridCoord&) const = default;

    int index() const { return row * kGridSize + col; }
    static GridCoord from_index(int i) { return {i % kGridSize, i / kGridSize}; }
    bool valid() const { return col >= 0 && col < kGridSize && row >= 0 && row < kGridSize; }

    Rect pixel_rect() const {
        return {col * kCellPx, row * kCellPx, (col + 1) * kCellPx, (row + 1) * kCellPx};
    }
};

inline double cell_distance(GridCoord a, GridCoord b) {
    double dc = a.col - b.col;
    double dr = a.row - b.row;
    return std::sqrt(dc * dc + dr * dr);
}

inline GridCoord rect_center_cell(const Rect& r) {
    int cx = std::clamp((r.x0 + r.x1) / 2, 0, kImageSize - 1);
    int cy = std::clamp((r.y0 + r.y1) / 2, 0, kImageSize - 1);
    return {cx / kCellPx, cy / kCellPx};
}

}  // namespace scanviz
