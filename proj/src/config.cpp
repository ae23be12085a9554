#include "scanviz/config.hpp"

#include <fstream>
#include <sstream>

#include "scanviz/error.hpp"

namespace scanviz {

GenParams RunConfig::gen_params() const {
    GenParams p = GenParams::defaults();
    p.min_categories = min_categories;
    p.max_categories = max_categories;
    p.min_value = min_value;
    p.max_value = max_value;
    if (orientation == "vertical")
        p.orientation = Orientation::Vertical;
    else if (orientation == "horizontal")
        p.orientation = Orientation::Horizontal;
    else
        p.orientation.reset();
    return p;
}

void RunConfig::validate() const {
    if (charts < 1) throw ConfigError("charts must be >= 1");
    if (tasks_per_kind < 0) throw ConfigError("tasks_per_kind must be >= 0");
    if (min_categories < 2 || max_categories > 12 || min_categories > max_categories)
        throw ConfigError("category range must satisfy 2 <= min <= max <= 12");
    if (min_value < 0 || min_value > max_value) throw ConfigError("bad value range");
    if (orientation != "vertical" && orientation != "horizontal" && orientation != "random")
        throw ConfigError("orientation must be vertical|horizontal|random");
    if (caps.step_cap < 1 || caps.global_cap < 1) throw ConfigError("caps must be >= 1");
    if (fovea_radius < 0) throw ConfigError("fovea_radius must be >= 0");
    if (baseline_fixations < 1) throw ConfigError("baseline_fixations must be >= 1");
    if (mode != "rule" && mode != "external") throw ConfigError("mode must be rule|external");
    if (mode == "external" && endpoint_url.empty())
        throw ConfigError("external mode requires endpoint_url");
    if (jobs < 1) throw ConfigError("jobs must be >= 1");
    try {
        ppo.validate();
    } catch (const ParamError& e) {
        throw ConfigError(std::string("ppo: ") + e.what());
    }
}

namespace {

long long to_int(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        long long r = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return r;
    } catch (const std::exception&) {
        throw ConfigError("config key " + key + ": expected integer, got '" + v + "'");
    }
}

double to_real(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        double r = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return r;
    } catch (const std::exception&) {
        throw ConfigError("config key " + key + ": expected number, got '" + v + "'");
    }
}

}  // namespace

void apply_config_line(RunConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "schema_version") {
        if (to_int(key, value) != kConfigSchemaVersion)
            throw ConfigError("unsupported schema_version " + value);
    } else if (key == "seed") {
        cfg.seed = static_cast<std::uint64_t>(to_int(key, value));
    } else if (key == "charts") {
        cfg.charts = static_cast<int>(to_int(key, value));
    } else if (key == "tasks_per_kind") {
        cfg.tasks_per_kind = static_cast<int>(to_int(key, value));
    } else if (key == "min_categories") {
        cfg.min_categories = static_cast<int>(to_int(key, value));
    } else if (key == "max_categories") {
        cfg.max_categories = static_cast<int>(to_int(key, value));
    } else if (key == "min_value") {
        cfg.min_value = static_cast<int>(to_int(key, value));
    } else if (key == "max_value") {
        cfg.max_value = static_cast<int>(to_int(key, value));
    } else if (key == "orientation") {
        cfg.orientation = value;
    } else if (key == "hit_reward") {
        cfg.reward.hit_reward = to_real(key, value);
    } else if (key == "distance_weight") {
        cfg.reward.distance_weight = to_real(key, value);
    } else if (key == "step_penalty") {
        cfg.reward.step_penalty = to_real(key, value);
    } else if (key == "clip_ratio") {
        cfg.ppo.clip_ratio = to_real(key, value);
    } else if (key == "discount") {
        cfg.ppo.discount = to_real(key, value);
    } else if (key == "gae_lambda") {
        cfg.ppo.gae_lambda = to_real(key, value);
    } else if (key == "epochs") {
        cfg.ppo.epochs = static_cast<int>(to_int(key, value));
    } else if (key == "minibatch_size") {
        cfg.ppo.minibatch_size = static_cast<int>(to_int(key, value));
    } else if (key == "rollout_length") {
        cfg.ppo.rollout_length = static_cast<int>(to_int(key, value));
    } else if (key == "learning_rate") {
        cfg.ppo.learning_rate = to_real(key, value);
    } else if (key == "entropy_coef") {
        cfg.ppo.entropy_coef = to_real(key, value);
    } else if (key == "value_coef") {
        cfg.ppo.value_coef = to_real(key, value);
    } else if (key == "max_grad_norm") {
        cfg.ppo.max_grad_norm = to_real(key, value);
    } else if (key == "total_env_steps") {
        cfg.ppo.total_env_steps = to_int(key, value);
    } else if (key == "step_cap") {
        cfg.caps.step_cap = static_cast<int>(to_int(key, value));
    } else if (key == "global_cap") {
        cfg.caps.global_cap = static_cast<int>(to_int(key, value));
    } else if (key == "fovea_radius") {
        cfg.fovea_radius = static_cast<int>(to_int(key, value));
    } else if (key == "baseline_fixations") {
        cfg.baseline_fixations = static_cast<int>(to_int(key, value));
    } else if (key == "mode") {
        cfg.mode = value;
    } else if (key == "endpoint_url") {
        cfg.endpoint_url = value;
    } else if (key == "endpoint_token") {
        cfg.endpoint_token = value;
    } else if (key == "out_dir") {
        cfg.out_dir = value;
    } else if (key == "jobs") {
        cfg.jobs = static_cast<int>(to_int(key, value));
    } else {
        throw ConfigError("unknown config key: " + key);
    }
}

RunConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot read config: " + path);
    RunConfig cfg;
    std::string line;
    std::size_t ln = 0;
    bool saw_version = false;
    while (std::getline(f, line)) {
        ++ln;
        std::string s = line;
        if (auto h = s.find('#'); h != std::string::npos) s.erase(h);
        auto first = s.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        auto last = s.find_last_not_of(" \t\r");
        s = s.substr(first, last - first + 1);
        auto eq = s.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(ln) + ": expected key=value");
        std::string key = s.substr(0, eq), value = s.substr(eq + 1);
        while (!key.empty() && (key.back() == ' ' || key.back() == '\t')) key.pop_back();
        while (!value.empty() && (value.front() == ' ' || value.front() == '\t'))
            value.erase(value.begin());
        if (key == "schema_version") saw_version = true;
        apply_config_line(cfg, key, value);
    }
    if (!saw_version) throw ConfigError("config missing schema_version");
    cfg.validate();
    return cfg;
}

void write_config(const std::string& path, const RunConfig& cfg) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot write config: " + path);
    f << "schema_version=" << kConfigSchemaVersion << "\n"
      << "seed=" << cfg.seed << "\n"
      << "charts=" << cfg.charts << "\n"
      << "tasks_per_kind=" << cfg.tasks_per_kind << "\n"
      << "min_categories=" << cfg.min_categories << "\n"
      << "max_categories=" << cfg.max_categories << "\n"
      << "min_value=" << cfg.min_value << "\n"
      << "max_value=" << cfg.max_value << "\n"
      << "orientation=" << cfg.orientation << "\n"
      << "hit_reward=" << cfg.reward.hit_reward << "\n"
      << "distance_weight=" << cfg.reward.distance_weight << "\n"
      << "step_penalty=" << cfg.reward.step_penalty << "\n"
      << "clip_ratio=" << cfg.ppo.clip_ratio << "\n"
      << "discount=" << cfg.ppo.discount << "\n"
      << "gae_lambda=" << cfg.ppo.gae_lambda << "\n"
      << "epochs=" << cfg.ppo.epochs << "\n"
      << "minibatch_size=" << cfg.ppo.minibatch_size << "\n"
      << "rollout_length=" << cfg.ppo.rollout_length << "\n"
      << "learning_rate=" << cfg.ppo.learning_rate << "\n"
      << "entropy_coef=" << cfg.ppo.entropy_coef << "\n"
      << "value_coef=" << cfg.ppo.value_coef << "\n"
      << "max_grad_norm=" << cfg.ppo.max_grad_norm << "\n"
      << "total_env_steps=" << cfg.ppo.total_env_steps << "\n"
      << "step_cap=" << cfg.caps.step_cap << "\n"
      << "global_cap=" << cfg.caps.global_cap << "\n"
      << "fovea_radius=" << cfg.fovea_radius << "\n"
      << "baseline_fixations=" << cfg.baseline_fixations << "\n"
      << "mode=" << cfg.mode << "\n"
      << "endpoint_url=" << cfg.endpoint_url << "\n"
      << "endpoint_token=" << cfg.endpoint_token << "\n"
      << "out_dir=" << cfg.out_dir << "\n"
      << "jobs=" << cfg.jobs << "\n";
}

}  // namespace scanviz
