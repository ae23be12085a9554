#include "scanviz/commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "scanviz/error.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace scanviz {

void atomic_write_text(const std::string& path, const std::string& content) {
    std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary);
        if (!f) throw IoError("cannot write: " + tmp);
        f << content;
        if (!f) throw IoError("write failed: " + tmp);
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw IoError("rename failed: " + path + " (" + ec.message() + ")");
}

Manifest read_manifest(const std::string& corpus_dir) {
    std::ifstream f(corpus_dir + "/manifest.json");
    if (!f) throw IoError("cannot read manifest: " + corpus_dir + "/manifest.json");
    json j;
    try {
        f >> j;
    } catch (const json::exception& e) {
        throw ParseError(std::string("manifest: ") + e.what(), 0);
    }
    Manifest m;
    for (const auto& c : j.at("charts")) m.chart_ids.push_back(c.get<std::string>());
    for (const auto& t : j.at("tasks")) m.task_ids.push_back(t.get<std::string>());
    return m;
}

namespace {

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot read: " + path);
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

}  // namespace

RenderedChart load_chart(const std::string& corpus_dir, const std::string& chart_id) {
    ChartSpec spec = spec_from_json(slurp(corpus_dir + "/charts/" + chart_id + ".spec.json"));
    // Rendering is pure and deterministic, so the spec alone reconstructs the
    // raster and AOIs; the PGM on disk is for external consumers.
    return render(spec);
}

Task load_task(const std::string& corpus_dir, const std::string& task_id) {
    return task_from_json(slurp(corpus_dir + "/tasks/" + task_id + ".json"));
}

// --- training episode samplers ---

GazeEpisode make_search_episode(const std::vector<ChartView>& pool, Rng& rng, int step_cap,
                                const RewardConfig& reward, HitMode hit_mode) {
    if (pool.empty()) throw EmptyInputError("empty chart pool");
    const ChartView& view = pool[rng.uniform_int(0, static_cast<int>(pool.size()) - 1)];
    const RenderedChart& chart = *view.chart;
    // Queries at inference are overwhelmingly category labels, so weight the
    // training targets the same way.
    const Aoi* pick = nullptr;
    if (rng.uniform01() < 0.7) {
        int datum = rng.uniform_int(0, static_cast<int>(chart.spec.data.size()) - 1);
        pick = chart.find_aoi("clabel-" + std::to_string(datum));
    }
    if (!pick) {
        std::vector<const Aoi*> text_aois;
        for (const auto& a : chart.aois)
            if (a.text) text_aois.push_back(&a);
        pick = text_aois[rng.uniform_int(0, static_cast<int>(text_aois.size()) - 1)];
    }

    GazeEpisode ep;
    ep.view = &view;
    for (const auto& a : chart.aois)
        if (a.text && iequals(*a.text, *pick->text)) ep.target_boxes.push_back(a.bbox);
    ep.start = GridCoord::from_index(rng.uniform_int(0, kNumCells - 1));
    ep.step_cap = step_cap;
    ep.hit_mode = hit_mode;
    ep.reward = reward;
    return ep;
}

GazeEpisode make_find_episode(const std::vector<ChartView>& pool, Rng& rng, int step_cap,
                              const RewardConfig& reward) {
    if (pool.empty()) throw EmptyInputError("empty chart pool");
    const ChartView& view = pool[rng.uniform_int(0, static_cast<int>(pool.size()) - 1)];
    const RenderedChart& chart = *view.chart;
    int datum = rng.uniform_int(0, static_cast<int>(chart.spec.data.size()) - 1);
    const Aoi* clabel = chart.find_aoi("clabel-" + std::to_string(datum));
    const Aoi* mark = chart.find_aoi("mark-" + std::to_string(datum));
    if (!clabel || !mark) throw StateError("chart missing datum AOIs");

    GazeEpisode ep;
    ep.view = &view;
    ep.target_boxes.push_back(mark->bbox);
    ep.reference = rect_center_cell(clabel->bbox);
    ep.start = *ep.reference;
    ep.step_cap = step_cap;
    ep.hit_mode = HitMode::PixelInside;
    ep.reward = reward;
    return ep;
}

GazeEpisode make_read_episode(const std::vector<ChartView>& pool, Rng& rng, int step_cap,
                              const RewardConfig& reward) {
    if (pool.empty()) throw EmptyInputError("empty chart pool");
    const ChartView& view = pool[rng.uniform_int(0, static_cast<int>(pool.size()) - 1)];
    const RenderedChart& chart = *view.chart;
    int datum = rng.uniform_int(0, static_cast<int>(chart.spec.data.size()) - 1);
    const Aoi* mark = chart.find_aoi("mark-" + std::to_string(datum));
    const Aoi* vlabel = chart.find_aoi("vlabel-" + std::to_string(datum));
    if (!mark || !vlabel) throw StateError("chart missing datum AOIs");

    GazeEpisode ep;
    ep.view = &view;
    ep.target_boxes.push_back(vlabel->bbox);
    ep.reference = rect_center_cell(mark->bbox);
    ep.start = *ep.reference;
    ep.step_cap = step_cap;
    ep.hit_mode = HitMode::PixelInside;
    ep.reward = reward;
    return ep;
}

// --- gen ---

int cmd_gen(const RunConfig& cfg) {
    GenParams gp = cfg.gen_params();
    fs::create_directories(cfg.out_dir + "/charts");
    fs::create_directories(cfg.out_dir + "/tasks");

    Rng seeder(cfg.seed);
    std::vector<std::string> chart_ids, task_ids;

    for (int i = 0; i < cfg.charts; ++i) {
        RenderedChart chart;
        std::uint64_t chart_seed = 0;
        // Retry seeds until the chart renders and has unique extremes, so
        // find-extreme tasks always exist.
        for (int attempt = 0;; ++attempt) {
            if (attempt >= 1000) throw StateError("could not generate a usable chart");
            chart_seed = seeder.fork_seed(static_cast<std::uint64_t>(i) * 1000 + attempt);
            try {
                ChartSpec spec = generate_spec(chart_seed, gp);
                chart = render(spec);
                generate_task(chart, TaskKind::FindExtremeMax, chart_seed);
                generate_task(chart, TaskKind::FindExtremeMin, chart_seed);
                break;
            } catch (const ParamError&) {
                continue;
            } catch (const LayoutError&) {
                continue;
            }
        }
        const std::string& cid = chart.spec.chart_id;
        chart_ids.push_back(cid);
        atomic_write_text(cfg.out_dir + "/charts/" + cid + ".spec.json",
                          spec_to_json(chart.spec));
        atomic_write_text(cfg.out_dir + "/charts/" + cid + ".aois.json", aois_to_json(chart));
        write_pgm(cfg.out_dir + "/charts/" + cid + ".pgm", chart.pixels, kImageSize, kImageSize);

        for (int k = 0; k < cfg.tasks_per_kind; ++k) {
            TaskKind fe = (i % 2 == 0) ? TaskKind::FindExtremeMax : TaskKind::FindExtremeMin;
            for (TaskKind kind : {TaskKind::RetrieveValue, TaskKind::FilterValue, fe}) {
                Task task = generate_task(chart, kind, splitmix64(chart_seed + 17 * k + 1));
                task_ids.push_back(task.task_id);
                atomic_write_text(cfg.out_dir + "/tasks/" + task.task_id + ".json",
                                  task_to_json(task));
            }
        }
    }

    json manifest;
    manifest["schema_version"] = 1;
    manifest["charts"] = chart_ids;
    manifest["tasks"] = task_ids;
    atomic_write_text(cfg.out_dir + "/manifest.json", manifest.dump(2) + "\n");
    return 0;
}

// --- train ---

TrainedGazePolicies train_gaze_policies(const std::vector<ChartView>& pool,
                                        const PolicyTrainPlan& plan) {
    if (pool.empty()) throw EmptyInputError("empty chart pool");
    TrainedGazePolicies out;
    Rng seeder(splitmix64(plan.seed) ^ 0x7261696eull);
    std::uint64_t search_seed = seeder.fork_seed(1);
    std::uint64_t find_seed = seeder.fork_seed(2);
    std::uint64_t read_seed = seeder.fork_seed(3);

    auto train_search = [&]() {
        PpoConfig cfg = plan.ppo;
        cfg.total_env_steps = plan.search_steps;
        EpisodeFactory foveal = [&](Rng& rng) {
            return make_search_episode(pool, rng, plan.step_cap, plan.reward,
                                       HitMode::FovealIntersect);
        };
        out.search = ppo_train(foveal, NetConfig{}, cfg, search_seed);
        if (plan.search_tune_steps > 0) {
            cfg.total_env_steps = plan.search_tune_steps;
            EpisodeFactory pixel = [&](Rng& rng) {
                return make_search_episode(pool, rng, plan.step_cap, plan.reward,
                                           HitMode::PixelInside);
            };
            TrainResult tune = ppo_train_from(pixel, std::move(out.search.net), cfg,
                                              splitmix64(search_seed));
            for (auto& row : tune.log)
                row.batch += static_cast<int>(out.search.log.size());
            out.search.net = std::move(tune.net);
            out.search.log.insert(out.search.log.end(), tune.log.begin(), tune.log.end());
        }
    };
    auto train_one = [&](long steps, std::uint64_t seed,
                         GazeEpisode (*make)(const std::vector<ChartView>&, Rng&, int,
                                             const RewardConfig&),
                         TrainResult& dst) {
        PpoConfig cfg = plan.ppo;
        cfg.total_env_steps = steps;
        EpisodeFactory factory = [&pool, make, &plan](Rng& rng) {
            return make(pool, rng, plan.step_cap, plan.reward);
        };
        dst = ppo_train(factory, NetConfig{}, cfg, seed);
    };

    if (plan.parallel) {
        std::thread ts(train_search);
        std::thread tf([&]() { train_one(plan.find_steps, find_seed, make_find_episode, out.find); });
        train_one(plan.read_steps, read_seed, make_read_episode, out.read);
        ts.join();
        tf.join();
    } else {
        train_search();
        train_one(plan.find_steps, find_seed, make_find_episode, out.find);
        train_one(plan.read_steps, read_seed, make_read_episode, out.read);
    }
    return out;
}

int cmd_train(const RunConfig& cfg, const std::string& corpus_dir) {
    Manifest m = read_manifest(corpus_dir);
    if (m.chart_ids.empty()) throw EmptyInputError("corpus has no charts");
    std::vector<RenderedChart> charts;
    charts.reserve(m.chart_ids.size());
    for (const auto& id : m.chart_ids) charts.push_back(load_chart(corpus_dir, id));
    std::vector<ChartView> pool;
    pool.reserve(charts.size());
    for (const auto& c : charts) pool.push_back(make_view(c));

    fs::create_directories(cfg.out_dir + "/models");
    PolicyTrainPlan plan;
    plan.seed = cfg.seed;
    plan.step_cap = cfg.caps.step_cap;
    plan.reward = cfg.reward;
    plan.ppo = cfg.ppo;
    // The configured step budget scales every stage proportionally.
    double scale = static_cast<double>(cfg.ppo.total_env_steps) / 100000.0;
    plan.search_steps = std::max<long>(1, std::lround(plan.search_steps * scale));
    plan.search_tune_steps = std::lround(plan.search_tune_steps * scale);
    plan.find_steps = std::max<long>(1, std::lround(plan.find_steps * scale));
    plan.read_steps = std::max<long>(1, std::lround(plan.read_steps * scale));

    TrainedGazePolicies trained = train_gaze_policies(pool, plan);
    struct Out {
        const char* name;
        TrainResult* r;
    } outs[] = {{"search", &trained.search}, {"find", &trained.find}, {"read", &trained.read}};
    for (const auto& o : outs) {
        o.r->net.save(cfg.out_dir + "/models/" + std::string(o.name) + ".bin");
        write_train_log_csv(cfg.out_dir + "/models/" + std::string(o.name) + "_log.csv", o.r->log);
    }
    return 0;
}

// --- predict ---

int cmd_predict(const RunConfig& cfg, const std::string& corpus_dir,
                const std::string& models_dir, const std::string& out_jsonl) {
    Manifest m = read_manifest(corpus_dir);
    Policies policies{PolicyNet::load(models_dir + "/search.bin"),
                      PolicyNet::load(models_dir + "/find.bin"),
                      PolicyNet::load(models_dir + "/read.bin")};

    CognitiveMode mode =
        cfg.mode == "external" ? CognitiveMode::External : CognitiveMode::RuleBased;
    std::optional<ExternalEndpoint> endpoint;
    if (mode == CognitiveMode::External) {
        endpoint = ExternalEndpoint::from_url(cfg.endpoint_url);
        endpoint->token = cfg.endpoint_token;
    }

    std::vector<Task> tasks;
    tasks.reserve(m.task_ids.size());
    for (const auto& id : m.task_ids) tasks.push_back(load_task(corpus_dir, id));

    // chart cache shared across tasks (many tasks per chart)
    std::vector<RenderedChart> charts;
    std::vector<ChartView> views;
    charts.reserve(m.chart_ids.size());
    for (const auto& id : m.chart_ids) charts.push_back(load_chart(corpus_dir, id));
    views.reserve(charts.size());
    for (const auto& c : charts) views.push_back(make_view(c));
    auto view_of = [&](const std::string& chart_id) -> const ChartView& {
        for (std::size_t i = 0; i < charts.size(); ++i)
            if (charts[i].spec.chart_id == chart_id) return views[i];
        throw ParamError("task references unknown chart: " + chart_id);
    };

    std::vector<std::vector<Scanpath>> results(tasks.size());
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::string fail_msg;
    std::mutex fail_mu;

    auto worker = [&]() {
        while (true) {
            std::size_t i = next.fetch_add(1);
            if (i >= tasks.size() || failed.load()) break;
            try {
                const Task& task = tasks[i];
                const ChartView& view = view_of(task.chart_id);
                std::uint64_t s = splitmix64(cfg.seed ^ splitmix64(i + 1));
                Scanpath model = predict(view, task, policies, mode,
                                         endpoint ? &*endpoint : nullptr, s, cfg.caps, kImageSize,
                                         kImageSize, cfg.fovea_radius, cfg.reward);
                int n = model.fixations.empty() ? cfg.baseline_fixations
                                                : static_cast<int>(model.fixations.size());
                Scanpath rnd = baseline_random(view, n, splitmix64(s + 1));
                Scanpath sal = baseline_saliency(view, n, splitmix64(s + 2));
                Scanpath ctr = baseline_center(view, n, splitmix64(s + 3));
                rnd.task_id = sal.task_id = ctr.task_id = task.task_id;
                results[i] = {std::move(model), std::move(rnd), std::move(sal), std::move(ctr)};
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lk(fail_mu);
                failed = true;
                fail_msg = e.what();
            }
        }
    };

    int n_threads = std::min(cfg.jobs, static_cast<int>(std::max<std::size_t>(tasks.size(), 1)));
    std::vector<std::thread> threads;
    for (int t = 0; t < n_threads; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    if (failed) throw StateError("predict failed: " + fail_msg);

    std::ostringstream os;
    for (const auto& group : results)
        for (const auto& s : group) os << scanpath_to_json(s) << "\n";
    atomic_write_text(out_jsonl, os.str());
    return 0;
}

// --- eval ---

namespace {

struct GroupKey {
    std::string chart_id, task_id, method;
    bool operator<(const GroupKey& o) const {
        if (chart_id != o.chart_id) return chart_id < o.chart_id;
        if (task_id != o.task_id) return task_id < o.task_id;
        return method < o.method;
    }
};

}  // namespace

int cmd_eval(const RunConfig& cfg, const std::string& predicted_jsonl,
             const std::string& reference_jsonl, const std::string& corpus_dir,
             const std::string& out_prefix) {
    std::vector<Scanpath> predicted = ingest_scanpaths(predicted_jsonl);
    std::vector<Scanpath> reference = ingest_scanpaths(reference_jsonl);
    if (predicted.empty()) throw EmptyInputError("no predicted scanpaths");
    if (reference.empty()) throw EmptyInputError("no reference scanpaths");

    std::map<GroupKey, std::vector<const Scanpath*>> pred_groups;
    for (const auto& s : predicted)
        pred_groups[{s.chart_id, s.task_id, s.method}].push_back(&s);
    std::map<std::pair<std::string, std::string>, std::vector<const Scanpath*>> ref_groups;
    for (const auto& s : reference) ref_groups[{s.chart_id, s.task_id}].push_back(&s);

    // chart/task caches
    std::map<std::string, RenderedChart> charts;
    std::map<std::string, Task> tasks;
    auto chart_of = [&](const std::string& id) -> const RenderedChart& {
        auto it = charts.find(id);
        if (it == charts.end()) it = charts.emplace(id, load_chart(corpus_dir, id)).first;
        return it->second;
    };
    auto task_of = [&](const std::string& id) -> const Task& {
        auto it = tasks.find(id);
        if (it == tasks.end()) it = tasks.emplace(id, load_task(corpus_dir, id)).first;
        return it->second;
    };

    struct RowJob {
        GroupKey key;
        const std::vector<const Scanpath*>* pred;
        const std::vector<const Scanpath*>* ref;
    };
    std::vector<RowJob> jobs;
    for (const auto& [key, group] : pred_groups) {
        auto rit = ref_groups.find({key.chart_id, key.task_id});
        if (rit == ref_groups.end())
            throw ParamError("no reference scanpaths for task " + key.task_id);
        // touch the caches single-threaded before the parallel section
        chart_of(key.chart_id);
        task_of(key.task_id);
        jobs.push_back({key, &group, &rit->second});
    }

    std::vector<MetricReportRow> rows(jobs.size());
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::string fail_msg;
    std::mutex fail_mu;

    auto worker = [&]() {
        while (true) {
            std::size_t i = next.fetch_add(1);
            if (i >= jobs.size() || failed.load()) break;
            try {
                const RowJob& job = jobs[i];
                const RenderedChart& chart = chart_of(job.key.chart_id);
                const Task& task = task_of(job.key.task_id);
                std::vector<Scanpath> pv, rv;
                for (const auto* p : *job.pred) pv.push_back(*p);
                for (const auto* r : *job.ref) rv.push_back(*r);

                MetricReportRow row;
                row.task_id = job.key.task_id;
                row.method = job.key.method;
                auto mb_dtw = mean_best(
                    pv, rv, [](const Scanpath& a, const Scanpath& b) { return dtw(a.fixations, b.fixations); },
                    false);
                auto mb_lev = mean_best(
                    pv, rv,
                    [](const Scanpath& a, const Scanpath& b) {
                        return static_cast<double>(levenshtein(a.fixations, b.fixations));
                    },
                    false);
                auto mb_ss = mean_best(
                    pv, rv,
                    [&chart](const Scanpath& a, const Scanpath& b) {
                        return sequence_score(a, b, chart);
                    },
                    true);
                row.dtw_mean = mb_dtw.mean;
                row.dtw_best = mb_dtw.best;
                row.lev_mean = mb_lev.mean;
                row.lev_best = mb_lev.best;
                row.sequence_score_mean = mb_ss.mean;
                row.sequence_score_best = mb_ss.best;

                double sum_n = 0.0, sum_n2 = 0.0;
                SummaryStats acc;
                for (const auto& p : pv) {
                    SummaryStats st = summary_stats(p, chart, task);
                    sum_n += st.num_fixations;
                    sum_n2 += static_cast<double>(st.num_fixations) * st.num_fixations;
                    acc.task_aoi_ratio += st.task_aoi_ratio;
                    acc.title_ratio += st.title_ratio;
                    acc.mark_ratio += st.mark_ratio;
                    acc.axis_ratio += st.axis_ratio;
                    acc.transitions += st.transitions;
                    acc.revisit_title += st.revisit_title;
                    acc.revisit_mark += st.revisit_mark;
                    acc.revisit_axis += st.revisit_axis;
                }
                double n = static_cast<double>(pv.size());
                row.num_fixations_mean = sum_n / n;
                double var = sum_n2 / n - row.num_fixations_mean * row.num_fixations_mean;
                row.num_fixations_sd = var > 0.0 ? std::sqrt(var) : 0.0;
                row.task_aoi_ratio = acc.task_aoi_ratio / n;
                row.title_ratio = acc.title_ratio / n;
                row.mark_ratio = acc.mark_ratio / n;
                row.axis_ratio = acc.axis_ratio / n;
                row.fixation_transitions = acc.transitions / n;
                row.revisit_title = acc.revisit_title / n;
                row.revisit_mark = acc.revisit_mark / n;
                row.revisit_axis = acc.revisit_axis / n;
                rows[i] = row;
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lk(fail_mu);
                failed = true;
                fail_msg = e.what();
            }
        }
    };

    int n_threads = std::min(cfg.jobs, static_cast<int>(std::max<std::size_t>(jobs.size(), 1)));
    std::vector<std::thread> threads;
    for (int t = 0; t < n_threads; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    if (failed) throw StateError("eval failed: " + fail_msg);

    write_report_csv(out_prefix + ".csv", rows);
    write_report_json(out_prefix + ".json", rows);
    return 0;
}

// --- overlay ---

namespace {

void set_rgb(std::vector<std::uint8_t>& rgb, int x, int y, std::uint8_t r, std::uint8_t g,
             std::uint8_t b) {
    if (x < 0 || x >= kImageSize || y < 0 || y >= kImageSize) return;
    std::size_t off = (static_cast<std::size_t>(y) * kImageSize + x) * 3;
    rgb[off] = r;
    rgb[off + 1] = g;
    rgb[off + 2] = b;
}

void draw_marker(std::vector<std::uint8_t>& rgb, int x, int y, bool first) {
    std::uint8_t r = first ? 0 : 200, g = first ? 160 : 0, b = 0;
    set_rgb(rgb, x, y, r, g, b);  // center lands exactly on the fixation
    for (int d = 1; d <= 3; ++d) {
        set_rgb(rgb, x + d, y, r, g, b);
        set_rgb(rgb, x - d, y, r, g, b);
        set_rgb(rgb, x, y + d, r, g, b);
        set_rgb(rgb, x, y - d, r, g, b);
    }
}

}  // namespace

int cmd_overlay(const RunConfig& cfg, const std::string& scanpaths_jsonl,
                const std::string& corpus_dir, const std::string& out_dir) {
    std::vector<Scanpath> paths = ingest_scanpaths(scanpaths_jsonl);
    if (paths.empty()) {
        std::cerr << "warning: no scanpaths in " << scanpaths_jsonl << ", nothing to overlay\n";
        return 0;
    }
    (void)cfg;
    fs::create_directories(out_dir);

    std::map<std::string, RenderedChart> charts;
    int idx = 0;
    for (const auto& s : paths) {
        auto it = charts.find(s.chart_id);
        if (it == charts.end())
            it = charts.emplace(s.chart_id, load_chart(corpus_dir, s.chart_id)).first;
        const RenderedChart& chart = it->second;

        std::vector<std::uint8_t> rgb(static_cast<std::size_t>(kImageSize) * kImageSize * 3);
        for (std::size_t p = 0; p < chart.pixels.size(); ++p) {
            rgb[p * 3] = rgb[p * 3 + 1] = rgb[p * 3 + 2] = chart.pixels[p];
        }
        bool first = true;
        for (const auto& p : s.fixations) {
            draw_marker(rgb, p.x, p.y, first);
            first = false;
        }

        char name[64];
        std::snprintf(name, sizeof(name), "overlay-%04d", idx++);
        std::string path = out_dir + "/" + name + "-" + s.chart_id + "-" +
                           (s.method.empty() ? "unknown" : s.method) + ".ppm";
        std::ostringstream os;
        os << "P6\n" << kImageSize << " " << kImageSize << "\n255\n";
        os.write(reinterpret_cast<const char*>(rgb.data()), static_cast<long>(rgb.size()));
        atomic_write_text(path, os.str());
    }
    return 0;
}

}  // namespace scanviz
