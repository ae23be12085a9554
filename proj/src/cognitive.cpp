#include "scanviz/cognitive.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <regex>

#include <httplib.h>
#include <json.hpp>

#include "scanviz/error.hpp"

namespace scanviz {

namespace {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

constexpr int kMaxAttemptsPerCategory = 6;

}  // namespace

std::string format_action(const SubtaskOp& op) {
    if (const auto* s = std::get_if<SearchTextLabel>(&op))
        return "ACTION: search label=\"" + s->query + "\"";
    if (const auto* f = std::get_if<FindAssociatedMark>(&op))
        return "ACTION: find_mark ref=(" + std::to_string(f->reference.col) + "," +
               std::to_string(f->reference.row) + ")";
    if (const auto* r = std::get_if<ReadAssociatedValue>(&op))
        return "ACTION: read_value ref=(" + std::to_string(r->reference.col) + "," +
               std::to_string(r->reference.row) + ")";
    const auto& a = std::get<AnswerOp>(op);
    if (a.proposed.value_answer)
        return "ACTION: answer value=" + format_double(*a.proposed.value_answer);
    return "ACTION: answer category=\"" + a.proposed.category_answer.value_or("") + "\"";
}

SubtaskOp parse_action(const std::string& text) {
    static const std::regex re_search(R"rx(^\s*ACTION:\s*search\s+label="([^"]*)"\s*$)rx");
    static const std::regex re_find(R"(^\s*ACTION:\s*find_mark\s+ref=\((-?\d+)\s*,\s*(-?\d+)\)\s*$)");
    static const std::regex re_read(R"(^\s*ACTION:\s*read_value\s+ref=\((-?\d+)\s*,\s*(-?\d+)\)\s*$)");
    static const std::regex re_value(R"(^\s*ACTION:\s*answer\s+value=(-?[0-9]*\.?[0-9]+([eE][-+]?\d+)?)\s*$)");
    static const std::regex re_cat(R"rx(^\s*ACTION:\s*answer\s+category="([^"]*)"\s*$)rx");

    std::size_t pos = 0;
    std::size_t bad_offset = 0;
    bool saw_action_line = false;
    while (pos <= text.size()) {
        std::size_t end = text.find('\n', pos);
        std::string line = text.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
        std::smatch m;
        if (std::regex_match(line, m, re_search)) return SearchTextLabel{m[1].str()};
        if (std::regex_match(line, m, re_find) || std::regex_match(line, m, re_read)) {
            GridCoord ref{std::stoi(m[1].str()), std::stoi(m[2].str())};
            if (!ref.valid()) throw ParseError("reference cell out of grid range", pos);
            if (line.find("find_mark") != std::string::npos) return FindAssociatedMark{ref};
            return ReadAssociatedValue{ref};
        }
        if (std::regex_match(line, m, re_value)) {
            GroundTruth gt;
            gt.value_answer = std::stod(m[1].str());
            return AnswerOp{gt};
        }
        if (std::regex_match(line, m, re_cat)) {
            GroundTruth gt;
            gt.category_answer = m[1].str();
            return AnswerOp{gt};
        }
        if (!saw_action_line && line.find("ACTION:") != std::string::npos) {
            saw_action_line = true;
            bad_offset = pos;
        }
        if (end == std::string::npos) break;
        pos = end + 1;
    }
    throw ParseError(saw_action_line ? "malformed ACTION line" : "no ACTION line found",
                     bad_offset);
}

CognitiveState init_state(const Task& task, const RenderedChart& chart) {
    CognitiveState st;
    st.kind = task.kind;
    for (const auto& d : chart.spec.data) st.categories.push_back(d.category_label);
    st.value_axis_max = chart.spec.value_axis_max;
    st.op_budget = 4 * static_cast<int>(st.categories.size()) + 4;
    return st;
}

void absorb(CognitiveState& state, const SubtaskOp& op, const SubtaskResult& result) {
    state.last_result = result.outcome;
    if (std::holds_alternative<SearchTextLabel>(op)) {
        if (result.hit && result.found_cell && state.kind == TaskKind::RetrieveValue)
            state.label_cell = result.found_cell;
        return;
    }
    if (std::holds_alternative<FindAssociatedMark>(op)) {
        if (!result.hit || !result.found_cell) return;
        if (state.kind == TaskKind::RetrieveValue) {
            state.mark_cell = result.found_cell;
        }
        if (result.category) {
            state.mark_cells[*result.category] = *result.found_cell;
            if (result.mark_extent_cells)
                state.extents[*result.category] = *result.mark_extent_cells;
        }
        return;
    }
    if (std::holds_alternative<ReadAssociatedValue>(op)) {
        if (!result.value_read) return;
        state.value_readings.push_back(*result.value_read);
        state.value_texts.push_back(result.value_text.value_or(format_double(*result.value_read)));
        if (result.category) state.readings[*result.category] = *result.value_read;
        return;
    }
}

namespace {

SubtaskOp issue(CognitiveState& st, SubtaskOp op) {
    ++st.ops_issued;
    return op;
}

AnswerOp best_guess(const CognitiveState& st, const Task& task) {
    GroundTruth gt;
    switch (st.kind) {
        case TaskKind::RetrieveValue:
            gt.value_answer = st.value_readings.empty() ? 0.0 : st.value_readings.back();
            break;
        case TaskKind::FilterValue: {
            std::string best = st.categories.front();
            double best_err = 1e300;
            for (const auto& [cat, v] : st.readings) {
                double err = std::abs(v - task.target_value.value_or(0.0));
                if (err < best_err) {
                    best_err = err;
                    best = cat;
                }
            }
            gt.category_answer = best;
            break;
        }
        case TaskKind::FindExtremeMax:
        case TaskKind::FindExtremeMin: {
            std::string best = st.categories.front();
            bool want_max = st.kind == TaskKind::FindExtremeMax;
            double best_e = want_max ? -1e300 : 1e300;
            for (const auto& [cat, e] : st.extents) {
                if (want_max ? e > best_e : e < best_e) {
                    best_e = e;
                    best = cat;
                }
            }
            gt.category_answer = best;
            break;
        }
    }
    return AnswerOp{gt};
}

}  // namespace

std::pair<SubtaskOp, CognitiveState> decide_rule_based(CognitiveState st, const Memory& memory,
                                                       const Task& task) {
    // Budget exhausted: answer with the best available guess rather than loop.
    if (st.ops_issued >= st.op_budget - 1) {
        auto op = issue(st, best_guess(st, task));
        return {op, st};
    }

    switch (st.kind) {
        case TaskKind::RetrieveValue: {
            const std::string& target = task.target_category.value();
            if (!st.label_cell) {
                if (const auto* item = memory.find_text(target)) {
                    st.label_cell = item->position;
                } else {
                    return {issue(st, SearchTextLabel{target}), st};
                }
            }
            if (!st.mark_cell) return {issue(st, FindAssociatedMark{*st.label_cell}), st};
            if (st.value_texts.empty())
                return {issue(st, ReadAssociatedValue{*st.mark_cell}), st};
            std::size_t n = st.value_readings.size();
            if (n >= 2 && st.value_readings[n - 1] != st.value_readings[n - 2] &&
                !st.reread_done) {
                st.reread_done = true;
                return {issue(st, ReadAssociatedValue{*st.mark_cell}), st};
            }
            // Confirmation revisit: the reading must still be in memory when
            // answering; a forgotten reading is re-read once more.
            if (!memory.find_text(st.value_texts.back()) && !st.confidence) {
                st.confidence = true;
                return {issue(st, ReadAssociatedValue{*st.mark_cell}), st};
            }
            GroundTruth gt;
            gt.value_answer = st.value_readings.back();
            return {issue(st, AnswerOp{gt}), st};
        }

        case TaskKind::FilterValue: {
            // An exact reading settles it; near-misses only win after every
            // category has been read (best_guess picks the closest then).
            for (const auto& cat : st.categories) {
                auto it = st.readings.find(cat);
                if (it != st.readings.end() &&
                    std::abs(it->second - task.target_value.value()) <= 1e-9) {
                    // Confirm the match with one more read before answering.
                    if (!st.confidence && st.mark_cells.count(cat)) {
                        st.confidence = true;
                        return {issue(st, ReadAssociatedValue{st.mark_cells[cat]}), st};
                    }
                    GroundTruth gt;
                    gt.category_answer = cat;
                    return {issue(st, AnswerOp{gt}), st};
                }
            }
            while (st.current_index < st.categories.size()) {
                const std::string& cat = st.categories[st.current_index];
                if (st.attempts[cat] >= kMaxAttemptsPerCategory) {
                    ++st.current_index;
                    continue;
                }
                ++st.attempts[cat];
                auto mc = st.mark_cells.find(cat);
                if (mc == st.mark_cells.end()) {
                    if (const auto* item = memory.find_text(cat))
                        return {issue(st, FindAssociatedMark{item->position}), st};
                    return {issue(st, SearchTextLabel{cat}), st};
                }
                if (!st.readings.count(cat))
                    return {issue(st, ReadAssociatedValue{mc->second}), st};
                ++st.current_index;
            }
            return {issue(st, best_guess(st, task)), st};
        }

        case TaskKind::FindExtremeMax:
        case TaskKind::FindExtremeMin: {
            while (st.current_index < st.categories.size()) {
                const std::string& cat = st.categories[st.current_index];
                if (st.extents.count(cat) || st.attempts[cat] >= kMaxAttemptsPerCategory) {
                    ++st.current_index;
                    continue;
                }
                ++st.attempts[cat];
                if (const auto* item = memory.find_text(cat))
                    return {issue(st, FindAssociatedMark{item->position}), st};
                return {issue(st, SearchTextLabel{cat}), st};
            }
            auto answer = best_guess(st, task);
            const std::string& best = answer.proposed.category_answer.value();
            if (!st.confirm_done && st.mark_cells.count(best)) {
                st.confirm_done = true;
                return {issue(st, ReadAssociatedValue{st.mark_cells[best]}), st};
            }
            return {issue(st, answer), st};
        }
    }
    throw StateError("unreachable cognitive state");
}

ExternalEndpoint ExternalEndpoint::from_url(const std::string& url) {
    static const std::regex re(R"(^http://([^:/]+)(?::(\d+))?(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(url, m, re)) throw ConfigError("unsupported endpoint URL: " + url);
    ExternalEndpoint ep;
    ep.host = m[1].str();
    ep.port = m[2].matched ? std::stoi(m[2].str()) : 80;
    ep.path = m[3].matched ? m[3].str() : "/";
    return ep;
}

std::pair<SubtaskOp, CognitiveState> decide_external(const ExternalEndpoint& endpoint,
                                                     CognitiveState state, const Memory& memory,
                                                     const Task& task) {
    const std::string instruction =
        "Reply with exactly one action line:\n"
        "ACTION: search label=\"...\" | find_mark ref=(c,r) | read_value ref=(c,r) | "
        "answer value=... | answer category=\"...\"\n";
    std::string prompt = memory.summarize(task, state.last_result) + instruction;

    httplib::Client client(endpoint.host, endpoint.port);
    client.set_connection_timeout(0, endpoint.timeout_ms * 1000);
    client.set_read_timeout(0, endpoint.timeout_ms * 1000);
    httplib::Headers headers;
    if (!endpoint.token.empty()) headers.emplace("Authorization", "Bearer " + endpoint.token);

    nlohmann::json body{{"prompt", prompt}, {"max_tokens", endpoint.max_tokens}};
    for (int attempt = 0; attempt < 2; ++attempt) {
        auto res = client.Post(endpoint.path, headers, body.dump(), "application/json");
        if (!res || res->status != 200) {
            if (endpoint.fallback_on_error) {
                std::cerr << "warning: external policy transport failure, using rule-based op\n";
                return decide_rule_based(std::move(state), memory, task);
            }
            throw ServiceError("text-completion endpoint failed: " +
                               (res ? "HTTP " + std::to_string(res->status) : "no response"));
        }
        try {
            auto j = nlohmann::json::parse(res->body);
            SubtaskOp op = parse_action(j.at("text").get<std::string>());
            ++state.ops_issued;
            return {op, state};
        } catch (const std::exception&) {
            // malformed completion; retry once, then fall back
        }
    }
    std::cerr << "warning: external policy returned unparseable actions, using rule-based op\n";
    return decide_rule_based(std::move(state), memory, task);
}

}  // namespace scanviz
