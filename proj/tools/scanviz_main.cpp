#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "scanviz/commands.hpp"
#include "scanviz/error.hpp"

using namespace scanviz;

namespace {

RunConfig make_config(const std::string& config_path, std::uint64_t seed, bool seed_set, int jobs,
                      bool jobs_set, const std::string& mode, bool mode_set,
                      const std::string& out_dir, bool out_set) {
    RunConfig cfg;
    if (!config_path.empty()) cfg = load_config(config_path);
    if (seed_set) cfg.seed = seed;
    if (jobs_set) cfg.jobs = jobs;
    if (mode_set) cfg.mode = mode;
    if (out_set) cfg.out_dir = out_dir;
    if (const char* url = std::getenv("SCANVIZ_ENDPOINT_URL"); url && *url)
        cfg.endpoint_url = url;
    if (const char* tok = std::getenv("SCANVIZ_ENDPOINT_TOKEN"); tok && *tok)
        cfg.endpoint_token = tok;
    cfg.validate();
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"scanviz: chart scanpath simulation pipeline"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags may follow the subcommand

    std::string config_path, mode = "rule", out_dir = "out";
    std::uint64_t seed = 1;
    int jobs = 1;
    app.add_option("--config", config_path, "key=value config file")->capture_default_str();
    auto* seed_opt = app.add_option("--seed", seed, "master seed");
    auto* jobs_opt = app.add_option("--jobs", jobs, "worker threads");
    auto* mode_opt =
        app.add_option("--mode", mode, "cognitive mode")->check(CLI::IsMember({"rule", "external"}));
    auto* out_opt = app.add_option("--out", out_dir, "output directory");

    auto* gen = app.add_subcommand("gen", "generate chart + task corpus");
    auto* train = app.add_subcommand("train", "train the three gaze policies");
    auto* predict = app.add_subcommand("predict", "predict scanpaths (model + baselines)");
    auto* eval = app.add_subcommand("eval", "score predictions against references");
    auto* overlay = app.add_subcommand("overlay", "render fixation overlays");

    std::string corpus_dir, models_dir, predicted, reference, scanpaths, out_file;
    train->add_option("--corpus", corpus_dir, "corpus directory")->required();
    predict->add_option("--corpus", corpus_dir, "corpus directory")->required();
    predict->add_option("--models", models_dir, "checkpoint directory")->required();
    predict->add_option("--scanpaths", out_file, "output JSONL path");
    eval->add_option("--predicted", predicted, "predicted scanpaths (JSONL/CSV)")->required();
    eval->add_option("--reference", reference, "reference scanpaths (JSONL/CSV)")->required();
    eval->add_option("--corpus", corpus_dir, "corpus directory")->required();
    eval->add_option("--report", out_file, "report path prefix (.csv/.json appended)");
    overlay->add_option("--scanpaths", scanpaths, "scanpaths to draw (JSONL/CSV)")->required();
    overlay->add_option("--corpus", corpus_dir, "corpus directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        RunConfig cfg = make_config(config_path, seed, seed_opt->count() > 0, jobs,
                                    jobs_opt->count() > 0, mode, mode_opt->count() > 0, out_dir,
                                    out_opt->count() > 0);
        if (gen->parsed()) return cmd_gen(cfg);
        if (train->parsed()) return cmd_train(cfg, corpus_dir);
        if (predict->parsed()) {
            if (out_file.empty()) out_file = cfg.out_dir + "/scanpaths.jsonl";
            return cmd_predict(cfg, corpus_dir, models_dir, out_file);
        }
        if (eval->parsed()) {
            if (out_file.empty()) out_file = cfg.out_dir + "/report";
            return cmd_eval(cfg, predicted, reference, corpus_dir, out_file);
        }
        if (overlay->parsed()) return cmd_overlay(cfg, scanpaths, corpus_dir, cfg.out_dir);
        return 1;
    } catch (const TrainingError& e) {
        std::cerr << "training error: " << e.what() << "\n";
        return 3;
    } catch (const ServiceError& e) {
        std::cerr << "service error: " << e.what() << "\n";
        return 4;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
