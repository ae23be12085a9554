#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "scanviz/commands.hpp"
#include "scanviz/error.hpp"

using namespace scanviz;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    REQUIRE(f.good());
    return std::string(std::istreambuf_iterator<char>(f), {});
}

RunConfig small_cfg(const std::string& out_dir) {
    RunConfig cfg;
    cfg.seed = 5;
    cfg.charts = 3;
    cfg.tasks_per_kind = 1;
    cfg.out_dir = out_dir;
    cfg.ppo.rollout_length = 512;
    cfg.ppo.minibatch_size = 128;
    cfg.ppo.epochs = 2;
    cfg.ppo.total_env_steps = 1024;
    return cfg;
}

// one shared corpus/model/prediction pipeline for the command tests
struct Pipeline {
    fs::path root = "test_cli_work";
    RunConfig cfg = small_cfg((root / "corpus").string());

    Pipeline() {
        fs::remove_all(root);
        REQUIRE(cmd_gen(cfg) == 0);
        RunConfig tr = cfg;
        tr.out_dir = (root / "run").string();
        REQUIRE(cmd_train(tr, corpus()) == 0);
        REQUIRE(cmd_predict(tr, corpus(), models(), predictions()) == 0);
    }
    ~Pipeline() { fs::remove_all(root); }

    std::string corpus() const { return (root / "corpus").string(); }
    std::string models() const { return (root / "run" / "models").string(); }
    std::string predictions() const { return (root / "run" / "pred.jsonl").string(); }
};

struct Ppm {
    int w = 0, h = 0;
    std::vector<std::uint8_t> rgb;
    std::array<int, 3> at(int x, int y) const {
        std::size_t off = (static_cast<std::size_t>(y) * w + x) * 3;
        return {rgb[off], rgb[off + 1], rgb[off + 2]};
    }
};

Ppm read_ppm(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    REQUIRE(f.good());
    std::string magic;
    int maxv = 0;
    Ppm img;
    f >> magic >> img.w >> img.h >> maxv;
    REQUIRE(magic == "P6");
    REQUIRE(maxv == 255);
    f.get();
    img.rgb.resize(static_cast<std::size_t>(img.w) * img.h * 3);
    f.read(reinterpret_cast<char*>(img.rgb.data()), static_cast<long>(img.rgb.size()));
    REQUIRE(f.gcount() == static_cast<long>(img.rgb.size()));
    return img;
}

}  // namespace

TEST_CASE("config file load, comments, and errors") {
    fs::path p = "test_cli_cfg.txt";
    {
        std::ofstream f(p);
        f << "# run configuration\n"
          << "schema_version=1\n"
          << "seed = 42\n"
          << "charts=7\n"
          << "orientation=horizontal\n"
          << "\n"
          << "total_env_steps=5000\n";
    }
    RunConfig cfg = load_config(p.string());
    CHECK(cfg.seed == 42);
    CHECK(cfg.charts == 7);
    CHECK(cfg.orientation == "horizontal");
    CHECK(cfg.ppo.total_env_steps == 5000);

    {
        std::ofstream f(p);
        f << "schema_version=1\ncharrts=7\n";  // typo must fail loudly
    }
    CHECK_THROWS_AS(load_config(p.string()), ConfigError);
    {
        std::ofstream f(p);
        f << "seed=42\n";  // no schema_version
    }
    CHECK_THROWS_AS(load_config(p.string()), ConfigError);
    {
        std::ofstream f(p);
        f << "schema_version=2\nseed=42\n";  // wrong version
    }
    CHECK_THROWS_AS(load_config(p.string()), ConfigError);
    fs::remove(p);
    CHECK_THROWS_AS(load_config("no_such_config.txt"), IoError);
}

TEST_CASE("config write/load round-trip") {
    RunConfig cfg = small_cfg("somewhere");
    cfg.orientation = "vertical";
    cfg.reward.hit_reward = 12.5;
    fs::path p = "test_cli_cfg_rt.txt";
    write_config(p.string(), cfg);
    RunConfig back = load_config(p.string());
    CHECK(back.seed == cfg.seed);
    CHECK(back.charts == cfg.charts);
    CHECK(back.orientation == cfg.orientation);
    CHECK(back.reward.hit_reward == cfg.reward.hit_reward);
    CHECK(back.ppo.total_env_steps == cfg.ppo.total_env_steps);
    CHECK(back.out_dir == cfg.out_dir);
    fs::remove(p);
}

TEST_CASE("config validation") {
    RunConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.charts = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.orientation = "diagonal";
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.mode = "external";  // no endpoint_url
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.min_categories = 9;
    cfg.max_categories = 4;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.ppo.learning_rate = -1.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("full pipeline: gen, train, predict, eval, overlay") {
    Pipeline pipe;
    Manifest m = read_manifest(pipe.corpus());

    SUBCASE("gen writes a complete, self-consistent corpus") {
        CHECK(m.chart_ids.size() == 3);
        CHECK(m.task_ids.size() == 9);  // 3 kinds per chart
        std::set<std::string> kinds;
        for (const auto& cid : m.chart_ids) {
            RenderedChart chart = load_chart(pipe.corpus(), cid);
            CHECK(chart.spec.chart_id == cid);
            CHECK(fs::exists(fs::path(pipe.corpus()) / "charts" / (cid + ".pgm")));
        }
        for (const auto& tid : m.task_ids) {
            Task t = load_task(pipe.corpus(), tid);
            CHECK(t.task_id == tid);
            kinds.insert(to_string(t.kind));
            // referential integrity against the chart
            RenderedChart chart = load_chart(pipe.corpus(), t.chart_id);
            for (const auto& id : t.task_aoi_ids) CHECK(chart.find_aoi(id) != nullptr);
        }
        CHECK(kinds.count("rv") == 1);
        CHECK(kinds.count("f") == 1);
        CHECK(kinds.count("femax") + kinds.count("femin") >= 1);
        CHECK_THROWS_AS(load_chart(pipe.corpus(), "missing"), IoError);
        CHECK_THROWS_AS(read_manifest("no_such_dir"), IoError);
    }

    SUBCASE("gen is byte-identical across reruns") {
        RunConfig again = pipe.cfg;
        again.out_dir = (pipe.root / "corpus2").string();
        REQUIRE(cmd_gen(again) == 0);
        for (const auto& entry : fs::recursive_directory_iterator(pipe.corpus())) {
            if (!entry.is_regular_file()) continue;
            fs::path rel = fs::relative(entry.path(), pipe.corpus());
            CHECK(slurp(entry.path()) == slurp(fs::path(again.out_dir) / rel));
        }
    }

    SUBCASE("train leaves three loadable checkpoints with logs") {
        for (const char* name : {"search", "find", "read"}) {
            fs::path ckpt = fs::path(pipe.models()) / (std::string(name) + ".bin");
            REQUIRE(fs::exists(ckpt));
            PolicyNet net = PolicyNet::load(ckpt.string());
            CHECK(net.num_params() > 0);
            fs::path log = fs::path(pipe.models()) / (std::string(name) + "_log.csv");
            std::ifstream f(log);
            REQUIRE(f.good());
            std::string line;
            int rows = -1;  // header
            while (std::getline(f, line))
                if (!line.empty()) ++rows;
            CHECK(rows == 2);  // 1024 steps / 512 rollout
        }
    }

    SUBCASE("predict emits one line per task and method, reproducibly") {
        auto paths = read_scanpaths_jsonl(pipe.predictions());
        CHECK(paths.size() == m.task_ids.size() * 4);
        std::map<std::string, int> per_method;
        std::map<std::string, std::size_t> model_len;
        for (const auto& s : paths)
            if (s.method == "model") model_len[s.task_id] = s.fixations.size();
        for (const auto& s : paths) {
            per_method[s.method]++;
            CHECK(!s.fixations.empty());
            CHECK(s.fixations.size() <= 120);
            CHECK(std::find(m.task_ids.begin(), m.task_ids.end(), s.task_id) != m.task_ids.end());
            if (s.method == "model") {
                CHECK(!s.op_trace.empty());
            } else {
                // baselines are length-matched to the model prediction
                CHECK(s.fixations.size() == model_len[s.task_id]);
            }
        }
        for (const char* method : {"model", "random", "saliency", "center"})
            CHECK(per_method[method] == static_cast<int>(m.task_ids.size()));

        RunConfig again = pipe.cfg;
        again.out_dir = (pipe.root / "run").string();
        std::string second = (pipe.root / "pred2.jsonl").string();
        REQUIRE(cmd_predict(again, pipe.corpus(), pipe.models(), second) == 0);
        CHECK(slurp(pipe.predictions()) == slurp(second));
    }

    SUBCASE("self-eval scores identical scanpaths perfectly") {
        std::string prefix = (pipe.root / "report").string();
        REQUIRE(cmd_eval(pipe.cfg, pipe.predictions(), pipe.predictions(), pipe.corpus(),
                         prefix) == 0);
        auto rows = read_report_csv(prefix + ".csv");
        CHECK(rows.size() == m.task_ids.size() * 4);
        for (const auto& r : rows) {
            // the identical scanpath is among the references
            CHECK(r.sequence_score_best == doctest::Approx(1.0));
            CHECK(r.dtw_best == doctest::Approx(0.0));
            CHECK(r.lev_best == doctest::Approx(0.0));
            CHECK(r.num_fixations_mean > 0.0);
        }
        auto jrows = read_report_json(prefix + ".json");
        REQUIRE(jrows.size() == rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            CHECK(jrows[i].task_id == rows[i].task_id);
            CHECK(jrows[i].dtw_mean == rows[i].dtw_mean);
        }
        CHECK_THROWS_AS(
            cmd_eval(pipe.cfg, pipe.predictions(), "no_refs.jsonl", pipe.corpus(), prefix),
            IoError);
    }

    SUBCASE("overlay draws a marker exactly on each fixation") {
        std::string out = (pipe.root / "overlays").string();
        REQUIRE(cmd_overlay(pipe.cfg, pipe.predictions(), pipe.corpus(), out) == 0);
        auto paths = read_scanpaths_jsonl(pipe.predictions());
        std::size_t images = 0;
        for (const auto& e : fs::directory_iterator(out))
            if (e.path().extension() == ".ppm") ++images;
        CHECK(images == paths.size());

        const Scanpath& s = paths.front();
        char name[64];
        std::snprintf(name, sizeof(name), "overlay-%04d", 0);
        fs::path img_path =
            fs::path(out) / (std::string(name) + "-" + s.chart_id + "-" + s.method + ".ppm");
        REQUIRE(fs::exists(img_path));
        Ppm img = read_ppm(img_path);
        CHECK(img.w == kImageSize);
        CHECK(img.h == kImageSize);
        // last-drawn marker center survives any overdraw
        PixelCoord last = s.fixations.back();
        auto px = img.at(last.x, last.y);
        if (s.fixations.size() == 1) {
            CHECK(px == std::array<int, 3>{0, 160, 0});
        } else {
            CHECK(px == std::array<int, 3>{200, 0, 0});
        }
    }

    SUBCASE("overlay on an empty file succeeds with no images") {
        std::string empty = (pipe.root / "empty.jsonl").string();
        std::ofstream(empty).close();
        std::string out = (pipe.root / "overlays_empty").string();
        CHECK(cmd_overlay(pipe.cfg, empty, pipe.corpus(), out) == 0);
        CHECK(!fs::exists(out));  // nothing written
    }
}
