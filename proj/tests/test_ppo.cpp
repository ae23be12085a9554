#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "scanviz/error.hpp"
#include "scanviz/ppo.hpp"

using namespace scanviz;

namespace {

RenderedChart toy_chart() {
    ChartSpec spec;
    spec.chart_id = "cppo";
    spec.orientation = Orientation::Vertical;
    spec.title = "N BY K";
    spec.category_axis_label = "K";
    spec.value_axis_label = "N";
    spec.data = {{"AA", 30.0}, {"BB", 60.0}};
    spec.value_axis_max = 100.0;
    spec.tick_step = 25.0;
    return render(spec);
}

// Target fixed at cell (10,10), reference channel pointing at it, random start.
EpisodeFactory fixed_target_factory(const ChartView& view, int step_cap = 10) {
    return [&view, step_cap](Rng& rng) {
        GazeEpisode ep;
        ep.view = &view;
        ep.target_boxes = {GridCoord{10, 10}.pixel_rect()};
        ep.reference = GridCoord{10, 10};
        ep.start = {rng.uniform_int(0, 19), rng.uniform_int(0, 19)};
        ep.step_cap = step_cap;
        return ep;
    };
}

NetConfig small_net() {
    NetConfig c;
    c.conv1_channels = 2;
    c.conv2_channels = 2;
    c.hidden = 8;
    return c;
}

PpoBatch random_batch(const PolicyNet& net, Rng& rng, int size) {
    PpoBatch b;
    b.size = size;
    b.obs.resize(static_cast<std::size_t>(size) * kObservationSize);
    for (auto& v : b.obs) v = rng.uniform(0.0, 1.0);
    PolicyNet::Forward f;
    std::vector<double> probs;
    for (int i = 0; i < size; ++i) {
        int a = rng.uniform_int(0, kNumCells - 1);
        b.actions.push_back(a);
        net.forward(&b.obs[static_cast<std::size_t>(i) * kObservationSize], f);
        softmax(f.logits, probs);
        // ratio starts at 1: keeps the objective differentiable at the
        // evaluation point (strict interior of the clip band)
        b.old_logp.push_back(std::log(probs[a]));
        b.advantages.push_back(rng.normal(0.0, 1.0));
        b.returns.push_back(rng.normal(0.0, 2.0));
    }
    return b;
}

}  // namespace

TEST_CASE("config validation") {
    PpoConfig c;
    CHECK_NOTHROW(c.validate());
    c.clip_ratio = 0.0;
    CHECK_THROWS_AS(c.validate(), ParamError);
    c = {};
    c.clip_ratio = 1.0;
    CHECK_THROWS_AS(c.validate(), ParamError);
    c = {};
    c.discount = 0.0;
    CHECK_THROWS_AS(c.validate(), ParamError);
    c = {};
    c.gae_lambda = 1.5;
    CHECK_THROWS_AS(c.validate(), ParamError);
    c = {};
    c.minibatch_size = 0;
    CHECK_THROWS_AS(c.validate(), ParamError);
    c = {};
    c.learning_rate = 0.0;
    CHECK_THROWS_AS(c.validate(), ParamError);
    c = {};
    c.total_env_steps = 0;
    CHECK_THROWS_AS(c.validate(), ParamError);
}

TEST_CASE("analytic gradient matches central finite differences") {
    PpoConfig cfg;
    const double h = 1e-5;
    for (int param_set = 0; param_set < 10; ++param_set) {
        PolicyNet net(small_net());
        Rng rng(1000 + param_set);
        net.init_weights(rng);
        PpoBatch batch = random_batch(net, rng, 8);

        std::vector<double> grad(net.num_params(), 0.0);
        ppo_loss_and_grad(net, batch, cfg, &grad);

        // spot-check a random subset of coordinates
        for (int probe = 0; probe < 40; ++probe) {
            int k = rng.uniform_int(0, net.num_params() - 1);
            double orig = net.params()[k];
            net.params()[k] = orig + h;
            double up = ppo_loss_and_grad(net, batch, cfg, nullptr).total;
            net.params()[k] = orig - h;
            double dn = ppo_loss_and_grad(net, batch, cfg, nullptr).total;
            net.params()[k] = orig;
            double fd = (up - dn) / (2.0 * h);
            double denom = std::max({std::abs(fd), std::abs(grad[k]), 1e-6});
            CHECK(std::abs(fd - grad[k]) / denom <= 1e-4);
        }
    }
}

TEST_CASE("loss terms are reported consistently") {
    PpoConfig cfg;
    PolicyNet net(small_net());
    Rng rng(5);
    net.init_weights(rng);
    PpoBatch batch = random_batch(net, rng, 8);
    LossTerms t = ppo_loss_and_grad(net, batch, cfg, nullptr);
    CHECK(t.total == doctest::Approx(t.policy + cfg.value_coef * t.value -
                                     cfg.entropy_coef * t.entropy));
    CHECK(t.entropy > 0.0);
    CHECK(t.entropy <= std::log(static_cast<double>(kNumCells)) + 1e-9);
    // at ratio=1 with normalized-ish advantages, policy loss = -mean(adv)
    double mean_adv = 0.0;
    for (double a : batch.advantages) mean_adv += a;
    mean_adv /= batch.size;
    CHECK(t.policy == doctest::Approx(-mean_adv).epsilon(1e-9));
}

TEST_CASE("degenerate all-hit environment yields the analytic return") {
    RenderedChart chart = toy_chart();
    ChartView view = make_view(chart);
    EpisodeFactory factory = [&view](Rng&) {
        GazeEpisode ep;
        ep.view = &view;
        ep.target_boxes = {Rect{0, 0, kImageSize, kImageSize}};
        ep.step_cap = 5;
        return ep;
    };
    PpoConfig cfg;
    cfg.rollout_length = 256;
    cfg.total_env_steps = 256;
    TrainResult r = ppo_train(factory, small_net(), cfg, 42);
    REQUIRE(r.log.size() == 1);
    // every first fixation hits: return = R_hit - c, length 1
    CHECK(r.log[0].mean_return == doctest::Approx(9.95));
    CHECK(r.log[0].mean_length == doctest::Approx(1.0));
}

TEST_CASE("training improves the fixed-target policy") {
    RenderedChart chart = toy_chart();
    ChartView view = make_view(chart);
    EpisodeFactory factory = fixed_target_factory(view);
    PpoConfig cfg;
    cfg.rollout_length = 1024;
    cfg.total_env_steps = 16384;
    TrainResult r = ppo_train(factory, small_net(), cfg, 7);
    REQUIRE(r.log.size() == 16);

    // greedy rollouts from every start cell must find the target quickly
    int hits = 0;
    Rng rng(99);
    for (int i = 0; i < kNumCells; ++i) {
        GazeEpisode ep;
        ep.view = &view;
        ep.target_boxes = {GridCoord{10, 10}.pixel_rect()};
        ep.reference = GridCoord{10, 10};
        ep.start = GridCoord::from_index(i);
        ep.step_cap = 10;
        while (!ep.done()) {
            GridCoord a = act(r.net, ep.observe_current(), rng, ActMode::Greedy);
            env_step(ep, a, rng);
        }
        if (ep.hit) ++hits;
    }
    CHECK(hits >= 360);  // >= 90% of the 400 starts

    // mean episode length shrinks as the policy learns
    double first = r.log.front().mean_length;
    double last = r.log.back().mean_length;
    CHECK(last < first);
}

TEST_CASE("episode length decreases across seeds") {
    RenderedChart chart = toy_chart();
    ChartView view = make_view(chart);
    for (std::uint64_t seed : {11ull, 22ull, 33ull}) {
        EpisodeFactory factory = fixed_target_factory(view);
        PpoConfig cfg;
        cfg.rollout_length = 1024;
        cfg.total_env_steps = 16384;
        TrainResult r = ppo_train(factory, small_net(), cfg, seed);
        CHECK(r.log.back().mean_length < r.log.front().mean_length);
    }
}

TEST_CASE("divergent rewards raise TrainingError with a checkpoint note") {
    RenderedChart chart = toy_chart();
    ChartView view = make_view(chart);
    EpisodeFactory factory = [&view](Rng& rng) {
        GazeEpisode ep;
        ep.view = &view;
        ep.target_boxes = {Rect{0, 0, kImageSize, kImageSize}};
        ep.step_cap = 5;
        ep.reward.hit_reward = 1e308;  // blows up the value loss
        (void)rng;
        return ep;
    };
    PpoConfig cfg;
    cfg.rollout_length = 256;
    cfg.total_env_steps = 256;
    try {
        ppo_train(factory, small_net(), cfg, 1);
        FAIL("expected TrainingError");
    } catch (const TrainingError& e) {
        CHECK(std::string(e.what()).find("last good checkpoint at batch") != std::string::npos);
    }
}

TEST_CASE("training log CSV") {
    std::vector<TrainLogRow> log(3);
    for (int i = 0; i < 3; ++i) {
        log[i].batch = i;
        log[i].mean_return = 1.5 * i;
    }
    std::string path = "test_ppo_log.csv";
    write_train_log_csv(path, log);
    std::ifstream f(path);
    std::string line;
    std::getline(f, line);
    CHECK(line == "batch,mean_return,mean_length,policy_loss,value_loss,entropy");
    int rows = 0;
    while (std::getline(f, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 3);
    std::remove(path.c_str());
}
