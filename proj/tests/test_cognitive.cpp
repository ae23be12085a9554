#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "scanviz/cognitive.hpp"
#include "scanviz/error.hpp"
#include "scanviz/task.hpp"

using namespace scanviz;

namespace {

RenderedChart small_chart() {
    ChartSpec spec;
    spec.chart_id = "ccog";
    spec.orientation = Orientation::Vertical;
    spec.title = "COUNT BY TYPE";
    spec.category_axis_label = "TYPE";
    spec.value_axis_label = "COUNT";
    spec.data = {{"ANT", 10.0}, {"BEE", 20.0}, {"CAT", 15.0}};
    spec.value_axis_max = 25.0;
    spec.tick_step = 5.0;
    return render(spec);
}

// Perfect oculomotor stand-in: resolves each op against chart ground truth,
// always hitting, and feeds the findings into memory the way a gaze run would.
SubtaskResult perfect_execute(const SubtaskOp& op, const RenderedChart& chart, Memory& memory,
                              int& t, Rng& rng) {
    SubtaskResult r;
    r.hit = true;
    ++t;
    if (const auto* s = std::get_if<SearchTextLabel>(&op)) {
        for (const auto& a : chart.aois) {
            if (a.text && iequals(*a.text, s->query)) {
                GridCoord cell = rect_center_cell(a.bbox);
                r.found_cell = cell;
                r.outcome = "found " + s->query;
                memory.insert({*a.text, cell, t, 1}, t, rng);
                return r;
            }
        }
        r.hit = false;
        r.outcome = "not found";
        return r;
    }
    if (const auto* f = std::get_if<FindAssociatedMark>(&op)) {
        int best = 0;
        double bd = std::numeric_limits<double>::max();
        for (const auto& a : chart.aois) {
            if (a.kind != AoiKind::CategoryLabel) continue;
            double d = cell_distance(rect_center_cell(a.bbox), f->reference);
            if (d < bd) {
                bd = d;
                best = *a.datum_index;
            }
        }
        const Aoi* mark = chart.find_aoi("mark-" + std::to_string(best));
        r.found_cell = rect_center_cell(mark->bbox);
        int extent = chart.spec.orientation == Orientation::Vertical ? mark->bbox.height()
                                                                     : mark->bbox.width();
        r.mark_extent_cells = extent / 16.0;
        r.category = chart.spec.data[best].category_label;
        r.outcome = "mark found";
        return r;
    }
    const auto& rd = std::get<ReadAssociatedValue>(op);
    int best = 0;
    double bd = std::numeric_limits<double>::max();
    for (const auto& a : chart.aois) {
        if (a.kind != AoiKind::Mark) continue;
        double d = cell_distance(rect_center_cell(a.bbox), rd.reference);
        if (d < bd) {
            bd = d;
            best = *a.datum_index;
        }
    }
    const Aoi* vlabel = chart.find_aoi("vlabel-" + std::to_string(best));
    r.found_cell = rect_center_cell(vlabel->bbox);
    r.value_text = vlabel->text;
    r.value_read = std::stod(*vlabel->text);
    r.category = chart.spec.data[best].category_label;
    r.outcome = "value read";
    memory.insert({*vlabel->text, *r.found_cell, t, 1}, t, rng);
    return r;
}

// Runs the FSM against the perfect executor; returns (ops used, answer).
std::pair<int, GroundTruth> run_fsm(const RenderedChart& chart, const Task& task,
                                    std::uint64_t seed) {
    CognitiveState st = init_state(task, chart);
    Memory memory;
    Rng rng(seed);
    int t = 0;
    int ops = 0;
    const int hard_stop = 4 * static_cast<int>(chart.spec.data.size()) + 4;
    while (true) {
        auto [op, next] = decide_rule_based(std::move(st), memory, task);
        st = std::move(next);
        ++ops;
        REQUIRE(ops <= hard_stop);
        if (is_answer(op)) return {ops, std::get<AnswerOp>(op).proposed};
        SubtaskResult r = perfect_execute(op, chart, memory, t, rng);
        absorb(st, op, r);
    }
}

}  // namespace

TEST_CASE("parse_action grammar") {
    SubtaskOp op = parse_action("ACTION: find_mark ref=(3,14)");
    CHECK(std::get<FindAssociatedMark>(op).reference == GridCoord{3, 14});

    op = parse_action("ACTION: read_value ref=(0,19)");
    CHECK(std::get<ReadAssociatedValue>(op).reference == GridCoord{0, 19});

    op = parse_action("ACTION: answer value=12.5");
    CHECK(*std::get<AnswerOp>(op).proposed.value_answer == doctest::Approx(12.5));

    op = parse_action("ACTION: search label=\"Universal Studios Hollywood\"");
    CHECK(std::get<SearchTextLabel>(op).query == "Universal Studios Hollywood");

    op = parse_action("ACTION: answer category=\"BEE\"");
    CHECK(*std::get<AnswerOp>(op).proposed.category_answer == "BEE");

    // first matching line wins
    op = parse_action("noise\nACTION: answer value=3\nACTION: answer value=4\n");
    CHECK(*std::get<AnswerOp>(op).proposed.value_answer == 3.0);

    CHECK_THROWS_AS(parse_action("hello"), ParseError);
    CHECK_THROWS_AS(parse_action("ACTION: fly away"), ParseError);
    CHECK_THROWS_AS(parse_action("ACTION: find_mark ref=(25,0)"), ParseError);
}

TEST_CASE("format_action round-trips through parse_action") {
    std::vector<SubtaskOp> ops;
    ops.push_back(SearchTextLabel{"FOO BAR"});
    ops.push_back(FindAssociatedMark{{7, 2}});
    ops.push_back(ReadAssociatedValue{{0, 0}});
    GroundTruth v;
    v.value_answer = 42.5;
    ops.push_back(AnswerOp{v});
    GroundTruth c;
    c.category_answer = "OWL";
    ops.push_back(AnswerOp{c});
    for (const auto& op : ops) {
        SubtaskOp back = parse_action(format_action(op));
        CHECK(format_action(back) == format_action(op));
    }
}

TEST_CASE("retrieve-value FSM starts with a search") {
    RenderedChart chart = small_chart();
    Task task = generate_task(chart, TaskKind::RetrieveValue, 1);
    CognitiveState st = init_state(task, chart);
    Memory memory;
    auto [op, st2] = decide_rule_based(std::move(st), memory, task);
    REQUIRE(std::holds_alternative<SearchTextLabel>(op));
    CHECK(std::get<SearchTextLabel>(op).query == *task.target_category);
    CHECK(st2.ops_issued == 1);
}

TEST_CASE("retrieve-value with full memory answers immediately-ish") {
    RenderedChart chart = small_chart();
    Task task = generate_task(chart, TaskKind::RetrieveValue, 1);
    CognitiveState st = init_state(task, chart);
    st.label_cell = GridCoord{5, 17};
    st.mark_cell = GridCoord{5, 12};
    st.value_readings = {20.0};
    st.value_texts = {"20"};
    Memory memory;
    Rng rng(1);
    memory.insert({"20", {5, 10}, 3, 1}, 3, rng);
    auto [op, st2] = decide_rule_based(std::move(st), memory, task);
    REQUIRE(is_answer(op));
    CHECK(*std::get<AnswerOp>(op).proposed.value_answer == 20.0);
}

TEST_CASE("filter FSM moves to the next category after a miss") {
    RenderedChart chart = small_chart();
    Task task;
    task.kind = TaskKind::FilterValue;
    task.chart_id = chart.spec.chart_id;
    task.target_value = 20.0;
    task.answer.category_answer = "BEE";
    CognitiveState st = init_state(task, chart);
    st.mark_cells["ANT"] = GridCoord{4, 14};
    st.readings["ANT"] = 10.0;  // read, does not match 20
    Memory memory;
    auto [op, st2] = decide_rule_based(std::move(st), memory, task);
    // ANT resolved and mismatched -> the FSM works on BEE next (search or find)
    if (const auto* s = std::get_if<SearchTextLabel>(&op)) {
        CHECK(s->query == "BEE");
    } else {
        REQUIRE(std::holds_alternative<FindAssociatedMark>(op));
    }
}

TEST_CASE("FSM terminates within budget and answers correctly with perfect gaze") {
    GenParams p = GenParams::defaults();
    int charts_checked = 0;
    for (std::uint64_t seed = 0; charts_checked < 200 && seed < 2000; ++seed) {
        RenderedChart chart;
        try {
            chart = render(generate_spec(seed, p));
        } catch (const LayoutError&) {
            continue;
        }
        for (TaskKind kind : {TaskKind::RetrieveValue, TaskKind::FilterValue,
                              TaskKind::FindExtremeMax, TaskKind::FindExtremeMin}) {
            Task task;
            try {
                task = generate_task(chart, kind, seed + 11);
            } catch (const ParamError&) {
                continue;
            }
            auto [ops, answer] = run_fsm(chart, task, seed);
            CHECK(check_answer(task, answer, 0.05, chart.spec.value_axis_max));
        }
        ++charts_checked;
    }
    CHECK(charts_checked == 200);
}

TEST_CASE("budget exhaustion forces an answer") {
    RenderedChart chart = small_chart();
    Task task = generate_task(chart, TaskKind::RetrieveValue, 1);
    CognitiveState st = init_state(task, chart);
    Memory memory;
    int n = static_cast<int>(chart.spec.data.size());
    SubtaskResult nothing;
    nothing.outcome = "not found";
    int ops = 0;
    while (true) {
        auto [op, next] = decide_rule_based(std::move(st), memory, task);
        st = std::move(next);
        ++ops;
        if (is_answer(op)) break;
        absorb(st, op, nothing);  // the world never cooperates
        REQUIRE(ops <= 4 * n + 4);
    }
    CHECK(ops <= 4 * n + 4);
}

TEST_CASE("endpoint URL parsing") {
    ExternalEndpoint ep = ExternalEndpoint::from_url("http://127.0.0.1:8080/complete");
    CHECK(ep.host == "127.0.0.1");
    CHECK(ep.port == 8080);
    CHECK(ep.path == "/complete");
    ExternalEndpoint bare = ExternalEndpoint::from_url("http://svc.local");
    CHECK(bare.port == 80);
    CHECK(bare.path == "/");
    CHECK_THROWS_AS(ExternalEndpoint::from_url("ftp://nope"), ConfigError);
}

TEST_CASE("external backend parses completions and falls back") {
    httplib::Server server;
    std::atomic<int> mode{0};  // 0: valid, 1: malformed, 2: check auth
    std::atomic<int> calls{0};
    server.Post("/complete", [&](const httplib::Request& req, httplib::Response& res) {
        ++calls;
        nlohmann::json out;
        if (mode == 2 && req.get_header_value("Authorization") != "Bearer sekrit") {
            res.status = 403;
            return;
        }
        out["text"] = mode == 1 ? "gibberish" : "ACTION: answer value=20";
        res.set_content(out.dump(), "application/json");
    });
    int port = server.bind_to_any_port("127.0.0.1");
    std::thread th([&]() { server.listen_after_bind(); });
    server.wait_until_ready();

    RenderedChart chart = small_chart();
    Task task = generate_task(chart, TaskKind::RetrieveValue, 1);
    Memory memory;

    ExternalEndpoint ep;
    ep.host = "127.0.0.1";
    ep.port = port;
    ep.path = "/complete";

    {
        auto [op, st] = decide_external(ep, init_state(task, chart), memory, task);
        REQUIRE(is_answer(op));
        CHECK(*std::get<AnswerOp>(op).proposed.value_answer == 20.0);
    }
    {
        mode = 1;
        calls = 0;
        auto [op, st] = decide_external(ep, init_state(task, chart), memory, task);
        CHECK(calls == 2);  // retried once, then rule-based fallback
        CHECK(std::holds_alternative<SearchTextLabel>(op));
    }
    {
        mode = 2;
        ep.token = "sekrit";
        auto [op, st] = decide_external(ep, init_state(task, chart), memory, task);
        REQUIRE(is_answer(op));
    }
    {
        mode = 2;
        ep.token = "";
        ep.fallback_on_error = false;
        CHECK_THROWS_AS(decide_external(ep, init_state(task, chart), memory, task), ServiceError);
    }
    {
        ExternalEndpoint dead;
        dead.host = "127.0.0.1";
        dead.port = 1;  // nothing listens here
        dead.fallback_on_error = false;
        dead.timeout_ms = 200;
        CHECK_THROWS_AS(decide_external(dead, init_state(task, chart), memory, task),
                        ServiceError);
    }

    server.stop();
    th.join();
}
