#pragma once

#include <cstdint>
#include <string>

#include "scanviz/chart.hpp"
#include "scanviz/gaze_env.hpp"
#include "scanviz/ppo.hpp"
#include "scanviz/simulator.hpp"

namespace scanviz {

// Flat key=value run configuration ('#' comments, blank lines allowed).
// schema_version must match kConfigSchemaVersion; unknown keys are errors so
// typos fail loudly.
inline constexpr int kConfigSchemaVersion = 1;

struct RunConfig {
    std::uint64_t seed = 1;
    int charts = 10;
    int tasks_per_kind = 1;  // rv/f/femax each

    int min_categories = 6;
    int max_categories = 10;
    int min_value = 8;
    int max_value = 96;
    std::string orientation = "random";  // vertical | horizontal | random

    RewardConfig reward;
    PpoConfig ppo;
    SimCaps caps;
    int fovea_radius = 1;
    int baseline_fixations = 40;

    std::string mode = "rule";  // rule | external
    std::string endpoint_url;
    std::string endpoint_token;

    std::string out_dir = "out";
    int jobs = 1;

    GenParams gen_params() const;
    void validate() const;  // throws ConfigError
};

RunConfig load_config(const std::string& path);
void apply_config_line(RunConfig& cfg, const std::string& key, const std::string& value);
void write_config(const std::string& path, const RunConfig& cfg);

}  // namespace scanviz
