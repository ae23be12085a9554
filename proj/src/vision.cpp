#include "scanviz/vision.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "scanviz/error.hpp"

namespace scanviz {

void ObservationStack::flatten(double* out) const {
    std::memcpy(out, peripheral.data(), sizeof(double) * kNumCells);
    std::memcpy(out + kNumCells, foveal.data(), sizeof(double) * kNumCells);
    std::memcpy(out + 2 * kNumCells, saliency.data(), sizeof(double) * kNumCells);
    std::memcpy(out + 3 * kNumCells, visit.data(), sizeof(double) * kNumCells);
    std::memcpy(out + 4 * kNumCells, reference.data(), sizeof(double) * kNumCells);
}

GridCoord to_cell(PixelCoord pixel) {
    if (pixel.x < 0 || pixel.x >= kImageSize || pixel.y < 0 || pixel.y >= kImageSize)
        throw BoundsError("to_cell: pixel out of image bounds");
    return {pixel.x / kCellPx, pixel.y / kCellPx};
}

PixelCoord sample_pixel(GridCoord cell, Rng& rng) {
    if (!cell.valid()) throw BoundsError("sample_pixel: invalid cell");
    return {cell.col * kCellPx + rng.uniform_int(0, kCellPx - 1),
            cell.row * kCellPx + rng.uniform_int(0, kCellPx - 1)};
}

Rect fovea_pixel_rect(GridCoord fixation, int r_f) {
    if (!fixation.valid()) throw BoundsError("fovea_pixel_rect: invalid cell");
    int c0 = std::max(0, fixation.col - r_f);
    int c1 = std::min(kGridSize - 1, fixation.col + r_f);
    int r0 = std::max(0, fixation.row - r_f);
    int r1 = std::min(kGridSize - 1, fixation.row + r_f);
    return {c0 * kCellPx, r0 * kCellPx, (c1 + 1) * kCellPx, (r1 + 1) * kCellPx};
}

namespace {

double cell_mean_luminance(const RenderedChart& chart, int col, int row) {
    long sum = 0;
    for (int y = row * kCellPx; y < (row + 1) * kCellPx; ++y)
        for (int x = col * kCellPx; x < (col + 1) * kCellPx; ++x) sum += chart.at(x, y);
    return static_cast<double>(sum) / (kCellPx * kCellPx * 255.0);
}

}  // namespace

Grid compute_peripheral(const RenderedChart& chart) {
    Grid g{};
    for (int r = 0; r < kGridSize; ++r)
        for (int c = 0; c < kGridSize; ++c)
            g[r * kGridSize + c] = cell_mean_luminance(chart, c, r);
    return g;
}

Grid compute_saliency(const RenderedChart& chart, const SaliencyWeights& w) {
    const int bg = chart.spec.style.background_intensity;

    // Per-pixel classification: "ink" deviates from the background; text ink
    // lies in a text-bearing AOI, mark ink in a Mark AOI.
    std::vector<Rect> text_boxes, mark_boxes;
    for (const auto& a : chart.aois) {
        if (a.text) text_boxes.push_back(a.bbox);
        if (a.kind == AoiKind::Mark) mark_boxes.push_back(a.bbox);
    }

    Grid g{};
    double max_score = 0.0;
    for (int r = 0; r < kGridSize; ++r) {
        for (int c = 0; c < kGridSize; ++c) {
            int text_px = 0, mark_px = 0, lo = 255, hi = 0;
            for (int y = r * kCellPx; y < (r + 1) * kCellPx; ++y) {
                for (int x = c * kCellPx; x < (c + 1) * kCellPx; ++x) {
                    int v = chart.at(x, y);
                    lo = std::min(lo, v);
                    hi = std::max(hi, v);
                    if (std::abs(v - bg) <= 24) continue;
                    bool in_text = false;
                    for (const auto& b : text_boxes)
                        if (b.contains(x, y)) { in_text = true; break; }
                    if (in_text) {
                        ++text_px;
                        continue;
                    }
                    for (const auto& b : mark_boxes)
                        if (b.contains(x, y)) { ++mark_px; break; }
                }
            }
            double area = kCellPx * kCellPx;
            double score = w.text * (text_px / area) + w.mark * (mark_px / area) +
                           w.contrast * ((hi - lo) / 255.0);
            g[r * kGridSize + c] = score;
            max_score = std::max(max_score, score);
        }
    }
    if (max_score > 0.0)
        for (auto& v : g) v /= max_score;
    return g;
}

ObservationStack observe(const RenderedChart& chart, GridCoord fixation,
                         const VisitHistory& history, const Grid& saliency,
                         std::optional<GridCoord> reference, int r_f) {
    return observe(compute_peripheral(chart), chart, fixation, history, saliency, reference, r_f);
}

ObservationStack observe(const Grid& peripheral, const RenderedChart& chart, GridCoord fixation,
                         const VisitHistory& history, const Grid& saliency,
                         std::optional<GridCoord> reference, int r_f) {
    if (!fixation.valid()) throw BoundsError("observe: invalid fixation cell");
    ObservationStack obs;
    obs.peripheral = peripheral;
    obs.saliency = saliency;

    for (int r = std::max(0, fixation.row - r_f); r <= std::min(kGridSize - 1, fixation.row + r_f);
         ++r)
        for (int c = std::max(0, fixation.col - r_f);
             c <= std::min(kGridSize - 1, fixation.col + r_f); ++c)
            obs.foveal[r * kGridSize + c] = cell_mean_luminance(chart, c, r);

    for (int i = 0; i < kNumCells; ++i) obs.visit[i] = history.counts[i] > 0 ? 1.0 : 0.0;

    if (reference) {
        if (!reference->valid()) throw BoundsError("observe: invalid reference cell");
        obs.reference[reference->index()] = 1.0;
    } else {
        obs.reference.fill(1.0 / kNumCells);
    }
    return obs;
}

std::vector<TextHit> read_text(const RenderedChart& chart, GridCoord fixation, int r_f) {
    Rect fovea = fovea_pixel_rect(fixation, r_f);
    std::vector<TextHit> hits;
    for (const auto& a : chart.aois) {
        if (!a.text) continue;
        if (!a.bbox.intersects(fovea)) continue;
        hits.push_back({*a.text, rect_center_cell(a.bbox), a.aoi_id});
    }
    return hits;
}

void write_grid_pgm(const std::string& path, const Grid& grid) {
    std::vector<std::uint8_t> px(kNumCells);
    for (int i = 0; i < kNumCells; ++i)
        px[i] = static_cast<std::uint8_t>(std::clamp(grid[i], 0.0, 1.0) * 255.0);
    write_pgm(path, px, kGridSize, kGridSize);
}

}  // namespace scanviz
