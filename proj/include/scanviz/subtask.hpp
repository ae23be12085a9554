#pragma once

#include <optional>
#include <vector>

#include "scanviz/cognitive.hpp"
#include "scanviz/gaze_env.hpp"
#include "scanviz/memory.hpp"
#include "scanviz/policy_net.hpp"

namespace scanviz {

struct SubtaskContext {
    const ChartView* view = nullptr;
    const PolicyNet* search_policy = nullptr;  // null = uniform random actions
    const PolicyNet* find_policy = nullptr;
    const PolicyNet* read_policy = nullptr;
    int step_cap = 20;
    int fovea_radius = 1;
    // An op completes only when the fixated pixel lands inside the target
    // glyph/mark, so policies linger on what they "read" instead of skimming
    // past within foveal range. This is what stretches scanpaths to realistic
    // lengths.
    HitMode hit_mode = HitMode::PixelInside;
    RewardConfig reward;
};

// Rolls the matching oculomotor policy on the subtask's target AOI set,
// reading text into memory at every fixation. `fixation_index` is the global
// fixation counter (memory timestamps); `remaining_cap` bounds this subtask
// below the episode's global fixation budget.
SubtaskResult run_subtask(const SubtaskOp& op, const SubtaskContext& ctx, Memory& memory,
                          GridCoord start, int& fixation_index, int remaining_cap, Rng& rng);

// Cell trace -> pixel coordinates in the chart's original size: uniform
// sample within each 16x16 patch, scaled by (w/320, h/320), rounded half-up.
std::vector<PixelCoord> rescale_scanpath(const std::vector<GridCoord>& cells, Rng& rng,
                                         int original_w, int original_h);

}  // namespace scanviz
