#pragma once

#include <optional>
#include <string>
#include <vector>

#include "scanviz/cognitive.hpp"
#include "scanviz/gaze_env.hpp"
#include "scanviz/policy_net.hpp"
#include "scanviz/subtask.hpp"
#include "scanviz/task.hpp"

namespace scanviz {

struct OpSpan {
    std::string op;  // format_action form
    int begin = 0;   // [begin, end) into the fixation trace
    int end = 0;
};

struct Scanpath {
    std::string chart_id;
    std::string task_id;
    std::string method;  // "model", "random", "center", "saliency", "human", ...
    std::vector<PixelCoord> fixations;  // original-size pixel coordinates
    std::vector<GridCoord> cell_trace;
    std::optional<GroundTruth> answer;
    std::vector<OpSpan> op_trace;
};

struct SimCaps {
    int step_cap = 20;    // per subtask
    int global_cap = 120; // per episode
};

struct Policies {
    PolicyNet search;
    PolicyNet find;
    PolicyNet read;
};

enum class CognitiveMode { RuleBased, External };

// Hierarchical loop: cognitive decide -> oculomotor run_subtask -> memory
// update, until Answer or the global fixation cap. Deterministic per seed in
// rule-based mode. `memory_trace` (optional) receives one JSON line per
// memory insertion for trace replay.
Scanpath predict(const ChartView& view, const Task& task, const Policies& policies,
                 CognitiveMode mode, const ExternalEndpoint* endpoint, std::uint64_t seed,
                 const SimCaps& caps = {}, int original_w = kImageSize,
                 int original_h = kImageSize, int fovea_radius = 1,
                 const RewardConfig& reward = {});

Scanpath baseline_random(const ChartView& view, int n_fixations, std::uint64_t seed);
// i.i.d. saliency-proportional draws with inhibition of return (visited cell
// weight halved).
Scanpath baseline_saliency(const ChartView& view, int n_fixations, std::uint64_t seed);
// i.i.d. discretized Gaussian centered at (9.5, 9.5), scale 4 cells.
Scanpath baseline_center(const ChartView& view, int n_fixations, std::uint64_t seed);

// --- JSON Lines serialization (one object per scanpath) ---

std::string scanpath_to_json(const Scanpath& s);
Scanpath scanpath_from_json(const std::string& line, std::size_t line_number = 0);

void write_scanpaths_jsonl(const std::string& path, const std::vector<Scanpath>& paths);
std::vector<Scanpath> read_scanpaths_jsonl(const std::string& path);

}  // namespace scanviz
