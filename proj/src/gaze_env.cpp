#include "scanviz/gaze_env.hpp"

#include "scanviz/error.hpp"

namespace scanviz {

ChartView make_view(const RenderedChart& chart) {
    ChartView v;
    v.chart = &chart;
    v.peripheral = compute_peripheral(chart);
    v.saliency = compute_saliency(chart);
    return v;
}

ObservationStack GazeEpisode::observe_current() const {
    return observe(view->peripheral, *view->chart, current(), history, view->saliency, reference,
                   fovea_radius);
}

StepResult env_step(GazeEpisode& episode, GridCoord action, Rng& rng) {
    if (episode.finished) throw StateError("env_step on a finished episode");
    if (!action.valid()) throw BoundsError("env_step: action outside the grid");

    bool hit = false;
    if (episode.hit_mode == HitMode::FovealIntersect) {
        Rect fovea = fovea_pixel_rect(action, episode.fovea_radius);
        for (const auto& b : episode.target_boxes)
            if (b.intersects(fovea)) {
                hit = true;
                break;
            }
    } else {
        PixelCoord px = sample_pixel(action, rng);
        for (const auto& b : episode.target_boxes)
            if (b.contains(px.x, px.y)) {
                hit = true;
                break;
            }
    }

    double dist = episode.trace.empty() ? 0.0 : cell_distance(episode.current(), action);
    double reward = (hit ? episode.reward.hit_reward : 0.0) -
                    episode.reward.distance_weight * dist - episode.reward.step_penalty;

    episode.trace.push_back(action);
    episode.history.record(action);
    episode.hit = hit;
    episode.finished = hit || static_cast<int>(episode.trace.size()) >= episode.step_cap;

    StepResult out;
    out.reward = reward;
    out.done = episode.finished;
    out.hit = hit;
    out.obs = episode.observe_current();
    return out;
}

}  // namespace scanviz
