#include "scanviz/subtask.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include "scanviz/error.hpp"

namespace scanviz {

namespace {

// Nearest datum by CategoryLabel center cell.
int nearest_datum_by_label(const RenderedChart& chart, GridCoord ref) {
    int best = -1;
    double best_d = std::numeric_limits<double>::max();
    for (const auto& a : chart.aois) {
        if (a.kind != AoiKind::CategoryLabel || !a.datum_index) continue;
        double d = cell_distance(rect_center_cell(a.bbox), ref);
        if (d < best_d) {
            best_d = d;
            best = *a.datum_index;
        }
    }
    return best;
}

int nearest_datum_by_mark(const RenderedChart& chart, GridCoord ref) {
    int best = -1;
    double best_d = std::numeric_limits<double>::max();
    for (const auto& a : chart.aois) {
        if (a.kind != AoiKind::Mark || !a.datum_index) continue;
        double d = cell_distance(rect_center_cell(a.bbox), ref);
        if (d < best_d) {
            best_d = d;
            best = *a.datum_index;
        }
    }
    return best;
}

double mark_extent_cells(const RenderedChart& chart, const Aoi& mark) {
    // Extent along the value axis, in cell units.
    if (chart.spec.orientation == Orientation::Vertical)
        return mark.bbox.height() / static_cast<double>(kCellPx);
    return mark.bbox.width() / static_cast<double>(kCellPx);
}

std::string cell_str(GridCoord c) {
    return "(" + std::to_string(c.col) + "," + std::to_string(c.row) + ")";
}

}  // namespace

SubtaskResult run_subtask(const SubtaskOp& op, const SubtaskContext& ctx, Memory& memory,
                          GridCoord start, int& fixation_index, int remaining_cap, Rng& rng) {
    if (is_answer(op)) throw ParamError("run_subtask cannot execute an Answer op");
    const RenderedChart& chart = *ctx.view->chart;

    SubtaskResult result;
    GazeEpisode episode;
    episode.view = ctx.view;
    episode.start = start;
    episode.step_cap = std::min(ctx.step_cap, std::max(0, remaining_cap));
    episode.fovea_radius = ctx.fovea_radius;
    episode.hit_mode = ctx.hit_mode;
    episode.reward = ctx.reward;

    const PolicyNet* policy = nullptr;
    int datum = -1;
    std::string query;

    if (const auto* s = std::get_if<SearchTextLabel>(&op)) {
        query = s->query;
        for (const auto& a : chart.aois)
            if (a.text && iequals(*a.text, query)) episode.target_boxes.push_back(a.bbox);
        policy = ctx.search_policy;
    } else if (const auto* fm = std::get_if<FindAssociatedMark>(&op)) {
        episode.reference = fm->reference;
        datum = nearest_datum_by_label(chart, fm->reference);
        if (datum >= 0) {
            const Aoi* mark = chart.find_aoi("mark-" + std::to_string(datum));
            if (mark) episode.target_boxes.push_back(mark->bbox);
            result.category = chart.spec.data[datum].category_label;
        }
        policy = ctx.find_policy;
    } else {
        const auto& rv = std::get<ReadAssociatedValue>(op);
        episode.reference = rv.reference;
        datum = nearest_datum_by_mark(chart, rv.reference);
        if (datum >= 0) {
            const Aoi* vlabel = chart.find_aoi("vlabel-" + std::to_string(datum));
            if (vlabel) episode.target_boxes.push_back(vlabel->bbox);
            result.category = chart.spec.data[datum].category_label;
        }
        policy = ctx.read_policy;
    }

    if (episode.step_cap <= 0) {
        result.outcome = "not found (no fixations left)";
        return result;
    }

    std::vector<TextHit> last_hits;
    while (!episode.done()) {
        GridCoord action;
        if (policy) {
            action = act(*policy, episode.observe_current(), rng, ActMode::Sample);
        } else {
            action = GridCoord::from_index(rng.uniform_int(0, kNumCells - 1));
        }
        auto step = env_step(episode, action, rng);
        ++fixation_index;
        auto hits = read_text(chart, action, ctx.fovea_radius);
        for (const auto& h : hits) memory.insert({h.text, h.position, fixation_index, 1}, fixation_index, rng);
        if (step.done) last_hits = std::move(hits);
    }
    result.cells = episode.trace;
    result.hit = episode.hit;

    if (std::holds_alternative<SearchTextLabel>(op)) {
        if (episode.hit) {
            // Report the matched AOI itself, not the fixation cell.
            GridCoord where = episode.trace.back();
            for (const auto& h : last_hits) {
                if (iequals(h.text, query)) {
                    where = h.position;
                    break;
                }
            }
            result.found_cell = where;
            result.outcome = "found " + query + " at " + cell_str(where);
        } else {
            result.outcome = "not found: " + query;
        }
    } else if (std::holds_alternative<FindAssociatedMark>(op)) {
        if (episode.hit && datum >= 0) {
            const Aoi* mark = chart.find_aoi("mark-" + std::to_string(datum));
            GridCoord center = rect_center_cell(mark->bbox);
            double extent = mark_extent_cells(chart, *mark);
            result.found_cell = center;
            result.mark_extent_cells = extent;
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%.2f", extent);
            result.outcome = "mark of " + *result.category + " at " + cell_str(center) +
                             ", extent " + buf + " cells";
        } else {
            result.outcome = "mark not found";
        }
    } else {
        if (episode.hit && datum >= 0) {
            const Aoi* vlabel = chart.find_aoi("vlabel-" + std::to_string(datum));
            result.found_cell = rect_center_cell(vlabel->bbox);
            result.value_text = vlabel->text;
            try {
                result.value_read = std::stod(*vlabel->text);
            } catch (const std::exception&) {
                result.value_read.reset();
            }
            result.outcome = "read value " + *vlabel->text + " for " + *result.category + " at " +
                             cell_str(*result.found_cell);
        } else {
            result.outcome = "value not found";
        }
    }
    return result;
}

std::vector<PixelCoord> rescale_scanpath(const std::vector<GridCoord>& cells, Rng& rng,
                                         int original_w, int original_h) {
    if (original_w <= 0 || original_h <= 0)
        throw ParamError("rescale_scanpath: original size must be positive");
    double sx = static_cast<double>(original_w) / kImageSize;
    double sy = static_cast<double>(original_h) / kImageSize;
    std::vector<PixelCoord> out;
    out.reserve(cells.size());
    for (GridCoord c : cells) {
        PixelCoord p = sample_pixel(c, rng);
        out.push_back({static_cast<int>(std::floor(p.x * sx + 0.5)),
                       static_cast<int>(std::floor(p.y * sy + 0.5))});
    }
    return out;
}

}  // namespace scanviz
