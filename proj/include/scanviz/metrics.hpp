#pragma once

#include <functional>
#include <string>
#include <vector>

#include "scanviz/chart.hpp"
#include "scanviz/simulator.hpp"
#include "scanviz/task.hpp"

namespace scanviz {

// --- similarity metrics (pure; safe to call concurrently) ---

// Dynamic time warping over pixel coordinates: DP with Euclidean local cost
// and steps {down, right, diagonal}, endpoints aligned. Throws
// EmptyInputError on an empty path.
double dtw(const std::vector<PixelCoord>& a, const std::vector<PixelCoord>& b);

// Edit distance between the fixation sequences after mapping each fixation to
// its grid cell. cell_px parameterizes the partition for non-320 coordinate
// spaces; the default matches the 20x20 action grid.
int levenshtein(const std::vector<PixelCoord>& a, const std::vector<PixelCoord>& b,
                int cell_px = kCellPx);

// Fixation -> AOI symbol. Symbols index into chart.aois; kBackgroundSymbol
// marks off-AOI fixations. Throws BoundsError on out-of-frame fixations.
inline constexpr int kBackgroundSymbol = -1;
std::vector<int> to_aoi_sequence(const std::vector<PixelCoord>& fixations,
                                 const RenderedChart& chart);

// Collapse consecutive duplicates, then global alignment with match +1 /
// mismatch 0 / gap 0; score = matches / max(collapsed lengths). In [0,1].
double sequence_score(const std::vector<int>& a, const std::vector<int>& b);
double sequence_score(const Scanpath& a, const Scanpath& b, const RenderedChart& chart);

// --- per-scanpath statistics ---

struct SummaryStats {
    int num_fixations = 0;
    double task_aoi_ratio = 0.0;  // percent
    double title_ratio = 0.0;     // percent
    double mark_ratio = 0.0;      // percent
    double axis_ratio = 0.0;      // percent
    int transitions = 0;          // region changes, background included
    int revisit_title = 0;        // re-entries after the first visit
    int revisit_mark = 0;
    int revisit_axis = 0;
};

SummaryStats summary_stats(const Scanpath& s, const RenderedChart& chart, const Task& task);

// --- set pairing ---

using PairMetric = std::function<double(const Scanpath&, const Scanpath&)>;

struct MeanBest {
    double mean = 0.0;
    double best = 0.0;
};

// mean = average over all cross pairs; best = per-prediction optimum
// (max when maximize, else min), averaged over predictions.
MeanBest mean_best(const std::vector<Scanpath>& predicted, const std::vector<Scanpath>& reference,
                   const PairMetric& metric, bool maximize);

// Human self-consistency: each scanpath scored against the full set for the
// mean (self-pairs included) and against the others only for the best.
// Throws EmptyInputError when |humans| < 2.
MeanBest leave_one_out(const std::vector<Scanpath>& humans, const PairMetric& metric,
                       bool maximize);

// --- reporting ---

struct MetricReportRow {
    std::string task_id;
    std::string method;
    double sequence_score_mean = 0.0, sequence_score_best = 0.0;
    double lev_mean = 0.0, lev_best = 0.0;
    double dtw_mean = 0.0, dtw_best = 0.0;
    double num_fixations_mean = 0.0, num_fixations_sd = 0.0;
    double task_aoi_ratio = 0.0;
    double title_ratio = 0.0, mark_ratio = 0.0, axis_ratio = 0.0;
    double fixation_transitions = 0.0;
    double revisit_title = 0.0, revisit_mark = 0.0, revisit_axis = 0.0;
};

void write_report_csv(const std::string& path, const std::vector<MetricReportRow>& rows);
void write_report_json(const std::string& path, const std::vector<MetricReportRow>& rows);
std::vector<MetricReportRow> read_report_csv(const std::string& path);
std::vector<MetricReportRow> read_report_json(const std::string& path);

// --- human-data ingestion ---

// JSONL (simulator schema) or CSV with header chart_id,task_id,fix_index,x,y
// (detected by content). Fixations outside [0,image_w) x [0,image_h) are
// rejected with a ParseError naming the line.
std::vector<Scanpath> ingest_scanpaths(const std::string& path, int image_w = kImageSize,
                                       int image_h = kImageSize);

void write_scanpaths_csv(const std::string& path, const std::vector<Scanpath>& paths);

}  // namespace scanviz
