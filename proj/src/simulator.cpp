#include "scanviz/simulator.hpp"

#include <cmath>
#include <fstream>
#include <functional>

#include <json.hpp>

#include "scanviz/error.hpp"

namespace scanviz {

Scanpath predict(const ChartView& view, const Task& task, const Policies& policies,
                 CognitiveMode mode, const ExternalEndpoint* endpoint, std::uint64_t seed,
                 const SimCaps& caps, int original_w, int original_h, int fovea_radius,
                 const RewardConfig& reward) {
    if (mode == CognitiveMode::External && !endpoint)
        throw ConfigError("external cognitive mode requires an endpoint");

    Rng rng(seed);
    Memory memory;
    CognitiveState state = init_state(task, *view.chart);

    SubtaskContext ctx;
    ctx.view = &view;
    ctx.search_policy = &policies.search;
    ctx.find_policy = &policies.find;
    ctx.read_policy = &policies.read;
    ctx.step_cap = caps.step_cap;
    ctx.fovea_radius = fovea_radius;
    ctx.reward = reward;

    Scanpath path;
    path.chart_id = task.chart_id;
    path.task_id = task.task_id;
    path.method = "model";

    GridCoord current{kGridSize / 2, kGridSize / 2};  // episodes start at chart center
    int fixation_index = 0;

    while (static_cast<int>(path.cell_trace.size()) < caps.global_cap) {
        SubtaskOp op;
        if (mode == CognitiveMode::External) {
            auto [o, st] = decide_external(*endpoint, std::move(state), memory, task);
            op = o;
            state = std::move(st);
        } else {
            auto [o, st] = decide_rule_based(std::move(state), memory, task);
            op = o;
            state = std::move(st);
        }

        if (is_answer(op)) {
            path.answer = std::get<AnswerOp>(op).proposed;
            int at = static_cast<int>(path.cell_trace.size());
            path.op_trace.push_back({format_action(op), at, at});
            break;
        }

        int remaining = caps.global_cap - static_cast<int>(path.cell_trace.size());
        SubtaskResult result =
            run_subtask(op, ctx, memory, current, fixation_index, remaining, rng);

        int begin = static_cast<int>(path.cell_trace.size());
        for (GridCoord c : result.cells) path.cell_trace.push_back(c);
        path.op_trace.push_back({format_action(op), begin, static_cast<int>(path.cell_trace.size())});
        if (!result.cells.empty()) current = result.cells.back();
        absorb(state, op, result);
    }

    path.fixations = rescale_scanpath(path.cell_trace, rng, original_w, original_h);
    return path;
}

namespace {

Scanpath make_baseline(const ChartView& view, const std::string& method, int n_fixations,
                       std::uint64_t seed, const std::function<GridCoord(Rng&)>& draw) {
    if (n_fixations < 1) throw ParamError("baseline requires n_fixations >= 1");
    Rng rng(seed);
    Scanpath s;
    s.chart_id = view.chart->spec.chart_id;
    s.method = method;
    for (int i = 0; i < n_fixations; ++i) s.cell_trace.push_back(draw(rng));
    s.fixations = rescale_scanpath(s.cell_trace, rng, view.chart->original_width,
                                   view.chart->original_height);
    return s;
}

}  // namespace

Scanpath baseline_random(const ChartView& view, int n_fixations, std::uint64_t seed) {
    return make_baseline(view, "random", n_fixations, seed, [](Rng& rng) {
        return GridCoord::from_index(rng.uniform_int(0, kNumCells - 1));
    });
}

Scanpath baseline_saliency(const ChartView& view, int n_fixations, std::uint64_t seed) {
    std::vector<double> weights(view.saliency.begin(), view.saliency.end());
    bool all_zero = true;
    for (double w : weights)
        if (w > 0.0) all_zero = false;
    if (all_zero) weights.assign(kNumCells, 1.0);

    return make_baseline(view, "saliency", n_fixations, seed, [weights](Rng& rng) mutable {
        double total = 0.0;
        for (double w : weights) total += w;
        double u = rng.uniform01() * total;
        double acc = 0.0;
        int pick = kNumCells - 1;
        for (int i = 0; i < kNumCells; ++i) {
            acc += weights[i];
            if (u < acc) {
                pick = i;
                break;
            }
        }
        weights[pick] *= 0.5;  // inhibition of return
        return GridCoord::from_index(pick);
    });
}

Scanpath baseline_center(const ChartView& view, int n_fixations, std::uint64_t seed) {
    return make_baseline(view, "center", n_fixations, seed, [](Rng& rng) {
        // Rejection-sampled discretized Gaussian keeps the mean at the true
        // center despite the grid bounds.
        while (true) {
            int c = static_cast<int>(std::lround(rng.normal(9.5, 4.0)));
            int r = static_cast<int>(std::lround(rng.normal(9.5, 4.0)));
            GridCoord g{c, r};
            if (g.valid()) return g;
        }
    });
}

namespace {
using nlohmann::json;
}

std::string scanpath_to_json(const Scanpath& s) {
    json j;
    j["chart_id"] = s.chart_id;
    j["task_id"] = s.task_id;
    j["method"] = s.method;
    j["fixations"] = json::array();
    for (const auto& p : s.fixations) j["fixations"].push_back({p.x, p.y});
    j["cell_trace"] = json::array();
    for (const auto& c : s.cell_trace) j["cell_trace"].push_back({c.col, c.row});
    if (s.answer) {
        json a;
        a["value_answer"] = s.answer->value_answer ? json(*s.answer->value_answer) : json(nullptr);
        a["category_answer"] =
            s.answer->category_answer ? json(*s.answer->category_answer) : json(nullptr);
        j["answer"] = a;
    } else {
        j["answer"] = nullptr;
    }
    j["op_trace"] = json::array();
    for (const auto& o : s.op_trace)
        j["op_trace"].push_back({{"op", o.op}, {"begin", o.begin}, {"end", o.end}});
    return j.dump();
}

Scanpath scanpath_from_json(const std::string& line, std::size_t line_number) {
    try {
        json j = json::parse(line);
        Scanpath s;
        s.chart_id = j.at("chart_id").get<std::string>();
        s.task_id = j.value("task_id", std::string{});
        s.method = j.value("method", std::string{"unknown"});
        for (const auto& p : j.at("fixations"))
            s.fixations.push_back({p.at(0).get<int>(), p.at(1).get<int>()});
        if (j.contains("cell_trace"))
            for (const auto& c : j["cell_trace"])
                s.cell_trace.push_back({c.at(0).get<int>(), c.at(1).get<int>()});
        if (j.contains("answer") && !j["answer"].is_null()) {
            GroundTruth gt;
            if (!j["answer"].at("value_answer").is_null())
                gt.value_answer = j["answer"]["value_answer"].get<double>();
            if (!j["answer"].at("category_answer").is_null())
                gt.category_answer = j["answer"]["category_answer"].get<std::string>();
            s.answer = gt;
        }
        if (j.contains("op_trace"))
            for (const auto& o : j["op_trace"])
                s.op_trace.push_back({o.at("op").get<std::string>(), o.at("begin").get<int>(),
                                      o.at("end").get<int>()});
        return s;
    } catch (const json::exception& e) {
        throw ParseError("scanpath JSONL line " + std::to_string(line_number) + ": " + e.what(),
                         line_number);
    }
}

void write_scanpaths_jsonl(const std::string& path, const std::vector<Scanpath>& paths) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot write scanpaths: " + path);
    for (const auto& s : paths) f << scanpath_to_json(s) << "\n";
    if (!f) throw IoError("scanpath write failed: " + path);
}

std::vector<Scanpath> read_scanpaths_jsonl(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot read scanpaths: " + path);
    std::vector<Scanpath> out;
    std::string line;
    std::size_t ln = 0;
    while (std::getline(f, line)) {
        ++ln;
        if (line.empty()) continue;
        out.push_back(scanpath_from_json(line, ln));
    }
    return out;
}

}  // namespace scanviz
