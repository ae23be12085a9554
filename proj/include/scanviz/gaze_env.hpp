#pragma once

#include <optional>
#include <vector>

#include "scanviz/chart.hpp"
#include "scanviz/geometry.hpp"
#include "scanviz/rng.hpp"
#include "scanviz/vision.hpp"

namespace scanviz {

struct RewardConfig {
    double hit_reward = 10.0;      // R_hit
    double distance_weight = 0.1;  // lambda, per unit cell distance
    double step_penalty = 0.05;    // c, per fixation
};

// Whether a fixation "hits" the target when the foveal window intersects it,
// or only when the sampled fixation pixel lands inside it.
enum class HitMode { FovealIntersect, PixelInside };

// Per-chart observation channels that do not depend on the fixation.
struct ChartView {
    const RenderedChart* chart = nullptr;
    Grid peripheral{};
    Grid saliency{};
};

ChartView make_view(const RenderedChart& chart);

// One oculomotor POMDP episode for a single subtask target.
struct GazeEpisode {
    const ChartView* view = nullptr;
    std::vector<Rect> target_boxes;
    std::optional<GridCoord> reference;
    GridCoord start{kGridSize / 2, kGridSize / 2};
    int step_cap = 20;
    int fovea_radius = 1;
    HitMode hit_mode = HitMode::FovealIntersect;
    RewardConfig reward;

    VisitHistory history;
    std::vector<GridCoord> trace;
    bool hit = false;
    bool finished = false;

    GridCoord current() const { return trace.empty() ? start : trace.back(); }
    bool done() const { return finished; }

    ObservationStack observe_current() const;
};

struct StepResult {
    ObservationStack obs;
    double reward = 0.0;
    bool done = false;
    bool hit = false;
};

// Appends the action to the trace and scores it. Throws StateError when the
// episode is already done.
StepResult env_step(GazeEpisode& episode, GridCoord action, Rng& rng);

}  // namespace scanviz
