#pragma once

#include <functional>
#include <string>
#include <vector>

#include "scanviz/gaze_env.hpp"
#include "scanviz/policy_net.hpp"

namespace scanviz {

struct PpoConfig {
    double clip_ratio = 0.2;   // epsilon, 0 < eps < 1
    double discount = 0.99;    // gamma, 0 < gamma <= 1
    double gae_lambda = 0.95;
    int epochs = 8;
    int minibatch_size = 256;
    int rollout_length = 1024;
    double learning_rate = 1e-2;
    double entropy_coef = 0.003;
    double value_coef = 0.5;
    double max_grad_norm = 0.5;
    long total_env_steps = 100000;

    void validate() const;
};

struct TrainLogRow {
    int batch = 0;
    double mean_return = 0.0;
    double mean_length = 0.0;
    double policy_loss = 0.0;
    double value_loss = 0.0;
    double entropy = 0.0;
};

// Produces fresh episodes for one subtask kind.
using EpisodeFactory = std::function<GazeEpisode(Rng&)>;

struct TrainResult {
    PolicyNet net;
    std::vector<TrainLogRow> log;
};

// Clipped-surrogate PPO with GAE and an entropy bonus. Gradients come from
// PolicyNet's analytic backward pass. Throws TrainingError on a non-finite
// loss, carrying the message "last good checkpoint at batch N".
TrainResult ppo_train(const EpisodeFactory& factory, NetConfig net_cfg, const PpoConfig& cfg,
                      std::uint64_t seed);

// Same, but continues from an already-trained policy instead of a fresh
// initialization (optimizer state starts fresh). Used for curriculum stages
// where the final objective is too sparse to learn from scratch.
TrainResult ppo_train_from(const EpisodeFactory& factory, PolicyNet initial, const PpoConfig& cfg,
                           std::uint64_t seed);

// Fixed transition batch; advantages/returns/old log-probs are constants.
struct PpoBatch {
    std::vector<double> obs;  // size * kObservationSize
    std::vector<int> actions;
    std::vector<double> old_logp;
    std::vector<double> advantages;
    std::vector<double> returns;
    int size = 0;
};

struct LossTerms {
    double total = 0.0;
    double policy = 0.0;
    double value = 0.0;
    double entropy = 0.0;
};

// Mean PPO loss over the batch; when grad is non-null, accumulates the
// analytic gradient into it (must be zeroed and sized to num_params).
// Exposed so the finite-difference gradient check exercises the exact
// training objective.
LossTerms ppo_loss_and_grad(const PolicyNet& net, const PpoBatch& batch, const PpoConfig& cfg,
                            std::vector<double>* grad);

void write_train_log_csv(const std::string& path, const std::vector<TrainLogRow>& log);

}  // namespace scanviz
