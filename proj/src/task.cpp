#include "scanviz/task.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "scanviz/error.hpp"
#include "scanviz/rng.hpp"

namespace scanviz {

namespace {

std::string format_number(double v) {
    double r = std::round(v);
    char buf[32];
    if (std::abs(v - r) < 1e-9)
        std::snprintf(buf, sizeof(buf), "%ld", static_cast<long>(r));
    else
        std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

std::string substitute(std::string templ, const std::string& key, const std::string& value) {
    std::string marker = "{" + key + "}";
    auto pos = templ.find(marker);
    while (pos != std::string::npos) {
        templ.replace(pos, marker.size(), value);
        pos = templ.find(marker, pos + value.size());
    }
    return templ;
}

}  // namespace

std::string to_string(TaskKind kind) {
    switch (kind) {
        case TaskKind::RetrieveValue: return "rv";
        case TaskKind::FilterValue: return "f";
        case TaskKind::FindExtremeMax: return "femax";
        case TaskKind::FindExtremeMin: return "femin";
    }
    return "?";
}

TaskKind task_kind_from_string(const std::string& s) {
    if (s == "rv") return TaskKind::RetrieveValue;
    if (s == "f") return TaskKind::FilterValue;
    if (s == "femax") return TaskKind::FindExtremeMax;
    if (s == "femin") return TaskKind::FindExtremeMin;
    throw ParamError("unknown task kind: " + s);
}

bool iequals(const std::string& a, const std::string& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (std::tolower(static_cast<unsigned char>(a[i])) !=
            std::tolower(static_cast<unsigned char>(b[i])))
            return false;
    return true;
}

PromptTemplates PromptTemplates::load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open prompt templates: " + path);
    PromptTemplates t;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty() || line[0] == '#') continue;
        auto colon = line.find(':');
        if (colon == std::string::npos) throw ParseError("prompt template line missing ':'", 0);
        std::string key = line.substr(0, colon);
        std::string value = line.substr(colon + 1);
        while (!value.empty() && value.front() == ' ') value.erase(value.begin());
        if (key == "rv")
            t.retrieve_value = value;
        else if (key == "f")
            t.filter = value;
        else if (key == "femax")
            t.find_max = value;
        else if (key == "femin")
            t.find_min = value;
        else
            throw ParseError("unknown prompt template key: " + key, 0);
    }
    return t;
}

Task generate_task(const RenderedChart& chart, TaskKind kind, std::uint64_t seed,
                   const PromptTemplates& templates) {
    const auto& data = chart.spec.data;
    Rng rng(seed);

    Task task;
    task.kind = kind;
    task.chart_id = chart.spec.chart_id;
    char idbuf[40];
    std::snprintf(idbuf, sizeof(idbuf), "%s-%s-%04x", chart.spec.chart_id.c_str(),
                  to_string(kind).c_str(), static_cast<unsigned>(seed & 0xffff));
    task.task_id = idbuf;

    int target = -1;
    switch (kind) {
        case TaskKind::RetrieveValue: {
            target = rng.uniform_int(0, static_cast<int>(data.size()) - 1);
            task.target_category = data[target].category_label;
            task.prompt = substitute(templates.retrieve_value, "category", *task.target_category);
            task.answer.value_answer = data[target].value;
            break;
        }
        case TaskKind::FilterValue: {
            target = rng.uniform_int(0, static_cast<int>(data.size()) - 1);
            task.target_value = data[target].value;
            // Answer is the first datum carrying the value, in axis order.
            for (std::size_t i = 0; i < data.size(); ++i) {
                if (data[i].value == *task.target_value) {
                    target = static_cast<int>(i);
                    break;
                }
            }
            task.prompt = substitute(templates.filter, "value", format_number(*task.target_value));
            task.answer.category_answer = data[target].category_label;
            break;
        }
        case TaskKind::FindExtremeMax:
        case TaskKind::FindExtremeMin: {
            bool want_max = kind == TaskKind::FindExtremeMax;
            target = 0;
            int ties = 1;
            for (std::size_t i = 1; i < data.size(); ++i) {
                if (data[i].value == data[target].value) {
                    ++ties;
                } else if (want_max ? data[i].value > data[target].value
                                    : data[i].value < data[target].value) {
                    target = static_cast<int>(i);
                    ties = 1;
                }
            }
            if (ties > 1)
                throw ParamError("degenerate chart: tied extreme in " + chart.spec.chart_id);
            task.prompt = want_max ? templates.find_max : templates.find_min;
            task.answer.category_answer = data[target].category_label;
            break;
        }
    }

    task.task_aoi_ids = {"clabel-" + std::to_string(target), "mark-" + std::to_string(target),
                         "vlabel-" + std::to_string(target)};
    // Nearby value ticks: within one tick step of the target value.
    double v = data[target].value;
    int num_ticks = static_cast<int>(std::lround(chart.spec.value_axis_max / chart.spec.tick_step));
    for (int j = 0; j <= num_ticks; ++j) {
        if (std::abs(j * chart.spec.tick_step - v) <= chart.spec.tick_step)
            task.task_aoi_ids.push_back("tick-" + std::to_string(j));
    }
    for (const auto& id : task.task_aoi_ids)
        if (!chart.find_aoi(id)) throw ParamError("task AOI missing from chart: " + id);
    return task;
}

bool check_answer(const Task& task, const GroundTruth& proposed, double value_tolerance,
                  double value_axis_max) {
    if (task.kind == TaskKind::RetrieveValue) {
        if (!proposed.value_answer)
            throw ParamError("retrieve-value answer must carry a value");
        return std::abs(*proposed.value_answer - *task.answer.value_answer) <=
               value_tolerance * value_axis_max;
    }
    if (!proposed.category_answer)
        throw ParamError("filter/extreme answer must carry a category");
    return iequals(*proposed.category_answer, *task.answer.category_answer);
}

namespace {
using nlohmann::json;

json ground_truth_to_json(const GroundTruth& gt) {
    json j;
    j["value_answer"] = gt.value_answer ? json(*gt.value_answer) : json(nullptr);
    j["category_answer"] = gt.category_answer ? json(*gt.category_answer) : json(nullptr);
    return j;
}

GroundTruth ground_truth_from_json(const json& j) {
    GroundTruth gt;
    if (!j.at("value_answer").is_null()) gt.value_answer = j.at("value_answer").get<double>();
    if (!j.at("category_answer").is_null())
        gt.category_answer = j.at("category_answer").get<std::string>();
    return gt;
}
}  // namespace

std::string task_to_json(const Task& task) {
    json j;
    j["task_id"] = task.task_id;
    j["kind"] = to_string(task.kind);
    j["prompt"] = task.prompt;
    j["chart_id"] = task.chart_id;
    j["target_category"] = task.target_category ? json(*task.target_category) : json(nullptr);
    j["target_value"] = task.target_value ? json(*task.target_value) : json(nullptr);
    j["task_aoi_ids"] = task.task_aoi_ids;
    j["answer"] = ground_truth_to_json(task.answer);
    return j.dump(2);
}

Task task_from_json(const std::string& json_text) {
    try {
        json j = json::parse(json_text);
        Task t;
        t.task_id = j.at("task_id").get<std::string>();
        t.kind = task_kind_from_string(j.at("kind").get<std::string>());
        t.prompt = j.at("prompt").get<std::string>();
        t.chart_id = j.at("chart_id").get<std::string>();
        if (!j.at("target_category").is_null())
            t.target_category = j.at("target_category").get<std::string>();
        if (!j.at("target_value").is_null()) t.target_value = j.at("target_value").get<double>();
        t.task_aoi_ids = j.at("task_aoi_ids").get<std::vector<std::string>>();
        t.answer = ground_truth_from_json(j.at("answer"));
        return t;
    } catch (const json::exception& e) {
        throw ParseError(std::string("task JSON: ") + e.what(), 0);
    }
}

}  // namespace scanviz
