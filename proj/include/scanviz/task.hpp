#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "scanviz/chart.hpp"

namespace scanviz {

enum class TaskKind { RetrieveValue, FilterValue, FindExtremeMax, FindExtremeMin };

std::string to_string(TaskKind kind);
TaskKind task_kind_from_string(const std::string& s);

struct GroundTruth {
    std::optional<double> value_answer;
    std::optional<std::string> category_answer;
};

struct Task {
    std::string task_id;
    TaskKind kind = TaskKind::RetrieveValue;
    std::string prompt;
    std::string chart_id;
    std::optional<std::string> target_category;  // RetrieveValue
    std::optional<double> target_value;          // FilterValue
    std::vector<std::string> task_aoi_ids;
    GroundTruth answer;
};

// Prompt templates, one line per task kind ("rv:", "f:", "femax:", "femin:"),
// with {category}/{value} placeholders. Used by generate_task; replaceable
// from a resource file for customization.
struct PromptTemplates {
    std::string retrieve_value = "WHAT IS THE VALUE OF {category}?";
    std::string filter = "WHICH CATEGORY HAS THE VALUE {value}?";
    std::string find_max = "WHICH CATEGORY HAS THE LARGEST VALUE?";
    std::string find_min = "WHICH CATEGORY HAS THE SMALLEST VALUE?";

    static PromptTemplates load(const std::string& path);  // key: template lines
    static PromptTemplates defaults() { return {}; }
};

// Deterministic per seed. Throws ParamError("degenerate chart ...") for
// find-extreme tasks when the extreme is tied.
Task generate_task(const RenderedChart& chart, TaskKind kind, std::uint64_t seed,
                   const PromptTemplates& templates = PromptTemplates::defaults());

// Value answers are graded within value_tolerance * value_axis_max; category
// answers case-insensitively. Throws ParamError on a wrong answer shape.
bool check_answer(const Task& task, const GroundTruth& proposed, double value_tolerance,
                  double value_axis_max);

std::string task_to_json(const Task& task);
Task task_from_json(const std::string& json_text);

bool iequals(const std::string& a, const std::string& b);

}  // namespace scanviz
