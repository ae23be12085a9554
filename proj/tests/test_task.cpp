#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "scanviz/error.hpp"
#include "scanviz/task.hpp"

using namespace scanviz;

namespace {

RenderedChart two_bar_chart(double a = 10.0, double b = 20.0) {
    ChartSpec spec;
    spec.chart_id = "ctask";
    spec.orientation = Orientation::Vertical;
    spec.title = "SALES BY CITY";
    spec.category_axis_label = "CITY";
    spec.value_axis_label = "SALES";
    spec.data = {{"ANT", a}, {"BEE", b}};
    spec.value_axis_max = 25.0;
    spec.tick_step = 5.0;
    return render(spec);
}

bool has_id(const Task& t, const std::string& id) {
    return std::find(t.task_aoi_ids.begin(), t.task_aoi_ids.end(), id) != t.task_aoi_ids.end();
}

}  // namespace

TEST_CASE("retrieve-value task targets one category") {
    RenderedChart chart = two_bar_chart();
    // Sweep seeds to hit the A target at least once.
    bool saw_a = false;
    for (std::uint64_t s = 0; s < 16; ++s) {
        Task t = generate_task(chart, TaskKind::RetrieveValue, s);
        REQUIRE(t.target_category);
        if (*t.target_category == "ANT") {
            saw_a = true;
            CHECK(*t.answer.value_answer == 10.0);
            CHECK(has_id(t, "clabel-0"));
            CHECK(has_id(t, "mark-0"));
        }
        CHECK(t.prompt == "WHAT IS THE VALUE OF " + *t.target_category + "?");
    }
    CHECK(saw_a);
}

TEST_CASE("find-extreme answers") {
    RenderedChart chart = two_bar_chart();
    Task mx = generate_task(chart, TaskKind::FindExtremeMax, 1);
    CHECK(*mx.answer.category_answer == "BEE");
    Task mn = generate_task(chart, TaskKind::FindExtremeMin, 1);
    CHECK(*mn.answer.category_answer == "ANT");
}

TEST_CASE("filter answers by value") {
    RenderedChart chart = two_bar_chart();
    for (std::uint64_t s = 0; s < 16; ++s) {
        Task f = generate_task(chart, TaskKind::FilterValue, s);
        REQUIRE(f.target_value);
        if (*f.target_value == 10.0) CHECK(*f.answer.category_answer == "ANT");
        if (*f.target_value == 20.0) CHECK(*f.answer.category_answer == "BEE");
    }
}

TEST_CASE("tied extreme is a degenerate chart") {
    RenderedChart chart = two_bar_chart(15.0, 15.0);
    CHECK_THROWS_AS(generate_task(chart, TaskKind::FindExtremeMax, 1), ParamError);
    CHECK_THROWS_AS(generate_task(chart, TaskKind::FindExtremeMin, 1), ParamError);
    // Filter still fine: first matching category wins.
    Task f = generate_task(chart, TaskKind::FilterValue, 1);
    CHECK(*f.answer.category_answer == "ANT");
}

TEST_CASE("check_answer tolerance and case rules") {
    RenderedChart chart = two_bar_chart();
    Task rv;
    rv.kind = TaskKind::RetrieveValue;
    rv.answer.value_answer = 10.0;
    GroundTruth close;
    close.value_answer = 10.4;
    CHECK(check_answer(rv, close, 0.05, 100.0));
    GroundTruth far;
    far.value_answer = 20.0;
    CHECK(!check_answer(rv, far, 0.05, 100.0));

    Task fe;
    fe.kind = TaskKind::FindExtremeMax;
    fe.answer.category_answer = "BEE";
    GroundTruth lower;
    lower.category_answer = "bee";
    CHECK(check_answer(fe, lower, 0.05, 100.0));
    GroundTruth wrong;
    wrong.category_answer = "ANT";
    CHECK(!check_answer(fe, wrong, 0.05, 100.0));

    GroundTruth shapeless;
    CHECK_THROWS_AS(check_answer(rv, shapeless, 0.05, 100.0), ParamError);
    CHECK_THROWS_AS(check_answer(fe, shapeless, 0.05, 100.0), ParamError);
}

TEST_CASE("ground truth always grades correct") {
    GenParams p = GenParams::defaults();
    int checked = 0;
    for (std::uint64_t seed = 0; checked < 200 && seed < 1000; ++seed) {
        RenderedChart chart;
        try {
            chart = render(generate_spec(seed, p));
        } catch (const LayoutError&) {
            continue;
        }
        for (TaskKind kind : {TaskKind::RetrieveValue, TaskKind::FilterValue,
                              TaskKind::FindExtremeMax, TaskKind::FindExtremeMin}) {
            Task t;
            try {
                t = generate_task(chart, kind, seed);
            } catch (const ParamError&) {
                continue;  // tied extreme
            }
            CHECK(check_answer(t, t.answer, 0.0, chart.spec.value_axis_max));
            CHECK(!t.task_aoi_ids.empty());
            for (const auto& id : t.task_aoi_ids) CHECK(chart.find_aoi(id) != nullptr);
        }
        ++checked;
    }
    CHECK(checked == 200);
}

TEST_CASE("task generation is deterministic per seed") {
    RenderedChart chart = two_bar_chart();
    CHECK(task_to_json(generate_task(chart, TaskKind::RetrieveValue, 9)) ==
          task_to_json(generate_task(chart, TaskKind::RetrieveValue, 9)));
}

TEST_CASE("task JSON round-trip") {
    RenderedChart chart = two_bar_chart();
    Task t = generate_task(chart, TaskKind::FilterValue, 3);
    Task back = task_from_json(task_to_json(t));
    CHECK(task_to_json(back) == task_to_json(t));
    CHECK_THROWS_AS(task_from_json("{"), ParseError);
}

TEST_CASE("prompt templates load from file") {
    std::string path = "test_task_templates.txt";
    {
        std::ofstream f(path);
        f << "# comment\nrv: VALUE OF {category}\nfemax: BIGGEST?\n";
    }
    PromptTemplates t = PromptTemplates::load(path);
    CHECK(t.retrieve_value == "VALUE OF {category}");
    CHECK(t.find_max == "BIGGEST?");
    CHECK(t.filter == PromptTemplates::defaults().filter);

    RenderedChart chart = two_bar_chart();
    Task task = generate_task(chart, TaskKind::RetrieveValue, 0, t);
    CHECK(task.prompt.rfind("VALUE OF ", 0) == 0);
    std::remove(path.c_str());
}

TEST_CASE("kind string round-trip") {
    for (TaskKind k : {TaskKind::RetrieveValue, TaskKind::FilterValue, TaskKind::FindExtremeMax,
                       TaskKind::FindExtremeMin})
        CHECK(task_kind_from_string(to_string(k)) == k);
    CHECK_THROWS_AS(task_kind_from_string("nope"), ParamError);
}
