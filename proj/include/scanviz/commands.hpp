#pragma once

#include <string>
#include <vector>

#include "scanviz/config.hpp"
#include "scanviz/metrics.hpp"
#include "scanviz/ppo.hpp"

namespace scanviz {

// Corpus layout under a directory:
//   manifest.json                      chart/task id lists
//   charts/<chart_id>.spec.json        ChartSpec
//   charts/<chart_id>.pgm              320x320 raster
//   charts/<chart_id>.aois.json        AOI boxes
//   tasks/<task_id>.json               Task
struct Manifest {
    std::vector<std::string> chart_ids;
    std::vector<std::string> task_ids;
};

Manifest read_manifest(const std::string& corpus_dir);
RenderedChart load_chart(const std::string& corpus_dir, const std::string& chart_id);
Task load_task(const std::string& corpus_dir, const std::string& task_id);

// Training episode samplers over a chart pool (shared by cmd_train and the
// test suites). Find-mark scores hits by the fixation pixel landing inside
// the bar so a random policy stays near chance. Search takes its hit mode as
// a parameter: pixel-inside hits are too sparse to learn from scratch, so
// search trains foveal first and then fine-tunes pixel-inside (see
// train_gaze_policies).
GazeEpisode make_search_episode(const std::vector<ChartView>& pool, Rng& rng, int step_cap,
                                const RewardConfig& reward,
                                HitMode hit_mode = HitMode::FovealIntersect);
GazeEpisode make_find_episode(const std::vector<ChartView>& pool, Rng& rng, int step_cap,
                              const RewardConfig& reward);
GazeEpisode make_read_episode(const std::vector<ChartView>& pool, Rng& rng, int step_cap,
                              const RewardConfig& reward);

// Trains the three gaze policies over a chart pool. Search runs a two-stage
// curriculum: foveal-intersect hits first (dense enough to learn scanning
// from scratch), then a pixel-inside fine-tune so the policy centers on and
// lingers over glyphs — the behavior the simulator's pixel-inside inference
// relies on. Find and read learn pixel-inside directly (their reference cue
// makes hits common enough from the start).
struct PolicyTrainPlan {
    long search_steps = 100000;       // foveal stage
    long search_tune_steps = 60000;   // pixel-inside fine-tune stage
    long find_steps = 100000;
    long read_steps = 120000;
    int step_cap = 20;
    std::uint64_t seed = 7;
    bool parallel = true;  // one thread per policy
    RewardConfig reward;
    PpoConfig ppo;  // total_env_steps is overridden per job
};
struct TrainedGazePolicies {
    TrainResult search, find, read;  // search log concatenates both stages
};
TrainedGazePolicies train_gaze_policies(const std::vector<ChartView>& pool,
                                        const PolicyTrainPlan& plan);

int cmd_gen(const RunConfig& cfg);
int cmd_train(const RunConfig& cfg, const std::string& corpus_dir);
int cmd_predict(const RunConfig& cfg, const std::string& corpus_dir,
                const std::string& models_dir, const std::string& out_jsonl);
int cmd_eval(const RunConfig& cfg, const std::string& predicted_jsonl,
             const std::string& reference_jsonl, const std::string& corpus_dir,
             const std::string& out_prefix);
int cmd_overlay(const RunConfig& cfg, const std::string& scanpaths_jsonl,
                const std::string& corpus_dir, const std::string& out_dir);

// temp-file + rename so readers never observe partial output
void atomic_write_text(const std::string& path, const std::string& content);

}  // namespace scanviz
