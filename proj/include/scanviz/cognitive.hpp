#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "scanviz/chart.hpp"
#include "scanviz/memory.hpp"
#include "scanviz/task.hpp"

namespace scanviz {

struct SearchTextLabel {
    std::string query;
};
struct FindAssociatedMark {
    GridCoord reference;
};
struct ReadAssociatedValue {
    GridCoord reference;
};
struct AnswerOp {
    GroundTruth proposed;
};

using SubtaskOp = std::variant<SearchTextLabel, FindAssociatedMark, ReadAssociatedValue, AnswerOp>;

inline bool is_answer(const SubtaskOp& op) { return std::holds_alternative<AnswerOp>(op); }

// Canonical single-line form, the same grammar parse_action accepts.
std::string format_action(const SubtaskOp& op);

// Line grammar:
//   ACTION: search label="..."
//   ACTION: find_mark ref=(c,r)
//   ACTION: read_value ref=(c,r)
//   ACTION: answer value=NUM | answer category="..."
// First matching line wins; throws ParseError (with byte offset) otherwise.
SubtaskOp parse_action(const std::string& text);

// What the oculomotor controller reports back after running one subtask.
struct SubtaskResult {
    std::string outcome;  // textual report, fed into Memory::summarize
    bool hit = false;
    std::optional<GridCoord> found_cell;      // located label/mark cell
    std::optional<double> mark_extent_cells;  // bar extent along the value axis
    std::optional<double> value_read;
    std::optional<std::string> value_text;
    std::optional<std::string> category;  // datum the subtask resolved to
    std::vector<GridCoord> cells;         // fixations spent
};

struct CognitiveState {
    TaskKind kind = TaskKind::RetrieveValue;
    std::vector<std::string> categories;  // axis order
    double value_axis_max = 0.0;
    double value_tolerance = 0.05;

    int ops_issued = 0;
    int op_budget = 0;  // 4*|categories| + 4; Answer is forced at the limit

    // Retrieve-value progress.
    std::optional<GridCoord> label_cell;
    std::optional<GridCoord> mark_cell;
    std::vector<double> value_readings;
    std::vector<std::string> value_texts;
    bool reread_done = false;

    // Filter / find-extreme progress.
    std::size_t current_index = 0;
    std::map<std::string, double> readings;      // category -> value read
    std::map<std::string, double> extents;       // category -> mark extent
    std::map<std::string, GridCoord> mark_cells; // category -> mark cell
    std::map<std::string, int> attempts;         // ops spent per category
    bool confirm_done = false;

    std::string last_result = "none";
    bool confidence = false;
};

CognitiveState init_state(const Task& task, const RenderedChart& chart);

// Folds a completed subtask's findings into the state.
void absorb(CognitiveState& state, const SubtaskOp& op, const SubtaskResult& result);

// Deterministic finite-state policy over {search, find mark, read value,
// answer}. Always terminates via AnswerOp within the op budget.
std::pair<SubtaskOp, CognitiveState> decide_rule_based(CognitiveState state, const Memory& memory,
                                                       const Task& task);

struct ExternalEndpoint {
    std::string host;  // e.g. "127.0.0.1"
    int port = 80;
    std::string path = "/complete";
    std::string token;  // sent as Authorization: Bearer when non-empty
    int timeout_ms = 5000;
    int max_tokens = 64;
    bool fallback_on_error = true;

    // "http://host:port/path"
    static ExternalEndpoint from_url(const std::string& url);
};

// Sends the memory summary plus the action-schema instruction to an HTTP
// text-completion service (POST {prompt, max_tokens} -> {text}); parses the
// completion, retrying once, then falls back to the rule-based policy.
// Transport failures throw ServiceError unless fallback_on_error is set.
std::pair<SubtaskOp, CognitiveState> decide_external(const ExternalEndpoint& endpoint,
                                                     CognitiveState state, const Memory& memory,
                                                     const Task& task);

}  // namespace scanviz
