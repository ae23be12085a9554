#pragma once

#include <array>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "scanviz/chart.hpp"
#include "scanviz/geometry.hpp"
#include "scanviz/rng.hpp"

namespace scanviz {

// One 20x20 channel, row-major.
using Grid = std::array<double, kNumCells>;

inline constexpr int kNumChannels = 5;
inline constexpr int kObservationSize = kNumChannels * kNumCells;

struct ObservationStack {
    Grid peripheral{};  // 16x mean-pooled luminance, 0-1
    Grid foveal{};      // luminance inside the fovea, 0 elsewhere
    Grid saliency{};    // normalized 0-1
    Grid visit{};       // visit counts clipped to 1
    Grid reference{};   // one-hot (uniform 1/400 when no reference)

    void flatten(double* out) const;  // kObservationSize values
};

struct VisitHistory {
    std::array<int, kNumCells> counts{};

    void record(GridCoord cell) { ++counts[cell.index()]; }
    int at(GridCoord cell) const { return counts[cell.index()]; }
    void reset() { counts.fill(0); }
};

// Pixel -> grid cell (floor division by the 16px cell size).
GridCoord to_cell(PixelCoord pixel);

// Uniform pixel within the cell's 16x16 patch.
PixelCoord sample_pixel(GridCoord cell, Rng& rng);

// Chebyshev foveal window of radius r_f cells around the fixation, clipped to
// the grid, as a pixel rectangle.
Rect fovea_pixel_rect(GridCoord fixation, int r_f);

struct SaliencyWeights {
    double text = 0.5;
    double mark = 0.3;
    double contrast = 0.2;
};

// Ink/contrast heuristic standing in for a learned task-driven saliency
// model; deterministic, normalized to max 1.
Grid compute_saliency(const RenderedChart& chart, const SaliencyWeights& w = {});

Grid compute_peripheral(const RenderedChart& chart);

ObservationStack observe(const RenderedChart& chart, GridCoord fixation,
                         const VisitHistory& history, const Grid& saliency,
                         std::optional<GridCoord> reference, int r_f = 1);

// Faster variant with the chart's peripheral channel precomputed.
ObservationStack observe(const Grid& peripheral, const RenderedChart& chart, GridCoord fixation,
                         const VisitHistory& history, const Grid& saliency,
                         std::optional<GridCoord> reference, int r_f = 1);

struct TextHit {
    std::string text;
    GridCoord position;  // cell of the AOI bbox center
    std::string aoi_id;
};

// Ground-truth text extraction: every text-bearing AOI whose bbox intersects
// the foveal pixel region.
std::vector<TextHit> read_text(const RenderedChart& chart, GridCoord fixation, int r_f = 1);

void write_grid_pgm(const std::string& path, const Grid& grid);

}  // namespace scanviz
