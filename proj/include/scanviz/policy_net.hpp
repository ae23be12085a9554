#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "scanviz/geometry.hpp"
#include "scanviz/rng.hpp"
#include "scanviz/vision.hpp"

namespace scanviz {

struct NetConfig {
    int in_channels = kNumChannels;
    int conv1_channels = 8;
    int conv2_channels = 8;  // per-cell mix of local + column/row context
    int hidden = 24;

    bool operator==(const NetConfig&) const = default;
};

// Small convolutional actor-critic. Layer 1 is a 3x3 conv (tanh). Layer 2
// mixes, per cell, the local layer-1 features with their column and row
// means (a cheap long-range connection: a bar and its labels share a column
// on vertical charts, a row on horizontal ones). Action logits are a weight-
// shared linear readout of each cell's layer-2 features; the state value goes
// through one fully connected hidden layer. Weights are doubles; checkpoints
// store float32.
class PolicyNet {
public:
    explicit PolicyNet(NetConfig cfg = {});

    const NetConfig& config() const { return cfg_; }
    int num_params() const { return static_cast<int>(params_.size()); }
    std::vector<double>& params() { return params_; }
    const std::vector<double>& params() const { return params_; }

    void init_weights(Rng& rng);

    struct Forward {
        std::vector<double> input;   // in_channels * 400
        std::vector<double> a1;      // conv1_channels * 400 (post-tanh)
        std::vector<double> a2;      // conv2_channels * 400 (post-tanh)
        std::vector<double> hidden;  // hidden (post-tanh)
        std::vector<double> logits;  // 400
        double value = 0.0;
    };

    void forward(const double* obs, Forward& f) const;

    // Accumulates d(loss)/d(params) into grad given upstream gradients on the
    // logits and the value head.
    void backward(const Forward& f, const double* dlogits, double dvalue,
                  std::vector<double>& grad) const;

    void save(const std::string& path) const;
    static PolicyNet load(const std::string& path);

private:
    NetConfig cfg_;
    std::vector<double> params_;

    // parameter block offsets
    int conv1_w_, conv1_b_, mix_local_w_, mix_col_w_, mix_row_w_, mix_b_, fc_w_, fc_b_,
        logit_w_, logit_b_, value_w_, value_b_;
    friend struct NetLayout;
};

enum class ActMode { Sample, Greedy };

// Greedy takes the argmax with lowest-index tie-break; sampling draws from
// softmax(logits). Throws NumericError on non-finite logits.
GridCoord act(const PolicyNet& net, const ObservationStack& obs, Rng& rng, ActMode mode);

void softmax(const std::vector<double>& logits, std::vector<double>& probs);

}  // namespace scanviz
