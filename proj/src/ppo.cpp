#include "scanviz/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "scanviz/error.hpp"

namespace scanviz {

void PpoConfig::validate() const {
    if (clip_ratio <= 0.0 || clip_ratio >= 1.0) throw ParamError("clip_ratio must be in (0,1)");
    if (discount <= 0.0 || discount > 1.0) throw ParamError("discount must be in (0,1]");
    if (gae_lambda < 0.0 || gae_lambda > 1.0) throw ParamError("gae_lambda must be in [0,1]");
    if (epochs < 1 || minibatch_size < 1 || rollout_length < 1)
        throw ParamError("epochs/minibatch/rollout must be positive");
    if (learning_rate <= 0.0) throw ParamError("learning_rate must be positive");
    if (total_env_steps < 1) throw ParamError("total_env_steps must be positive");
}

namespace {

double log_sum_exp(const std::vector<double>& logits) {
    double mx = *std::max_element(logits.begin(), logits.end());
    double s = 0.0;
    for (double l : logits) s += std::exp(l - mx);
    return mx + std::log(s);
}

struct Adam {
    std::vector<double> m, v;
    int t = 0;
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

    explicit Adam(int n) : m(n, 0.0), v(n, 0.0) {}

    void step(std::vector<double>& params, const std::vector<double>& grad, double lr) {
        ++t;
        double bc1 = 1.0 - std::pow(beta1, t);
        double bc2 = 1.0 - std::pow(beta2, t);
        for (std::size_t i = 0; i < params.size(); ++i) {
            m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i];
            v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i];
            params[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
        }
    }
};

}  // namespace

LossTerms ppo_loss_and_grad(const PolicyNet& net, const PpoBatch& batch, const PpoConfig& cfg,
                            std::vector<double>* grad) {
    LossTerms terms;
    PolicyNet::Forward f;
    std::vector<double> probs(kNumCells), dlogits(kNumCells);
    const double inv_n = 1.0 / batch.size;

    for (int s = 0; s < batch.size; ++s) {
        net.forward(batch.obs.data() + static_cast<std::size_t>(s) * kObservationSize, f);
        int a = batch.actions[s];
        double lse = log_sum_exp(f.logits);
        softmax(f.logits, probs);
        double logp = f.logits[a] - lse;

        double adv = batch.advantages[s];
        double ratio = std::exp(logp - batch.old_logp[s]);
        double clipped = std::clamp(ratio, 1.0 - cfg.clip_ratio, 1.0 + cfg.clip_ratio);
        double surr1 = ratio * adv;
        double surr2 = clipped * adv;
        double surr = std::min(surr1, surr2);
        terms.policy += -surr * inv_n;

        double entropy = 0.0;
        for (int k = 0; k < kNumCells; ++k)
            if (probs[k] > 0.0) entropy -= probs[k] * std::log(probs[k]);
        terms.entropy += entropy * inv_n;

        double verr = f.value - batch.returns[s];
        terms.value += 0.5 * verr * verr * inv_n;

        if (grad) {
            // d(-surr)/dlogp: the clipped branch has zero gradient outside
            // the trust region.
            double coeff = 0.0;
            if (surr1 <= surr2)
                coeff = ratio * adv;
            else if (ratio > 1.0 - cfg.clip_ratio && ratio < 1.0 + cfg.clip_ratio)
                coeff = ratio * adv;
            for (int k = 0; k < kNumCells; ++k) {
                double dlogp_k = (k == a ? 1.0 : 0.0) - probs[k];
                double d_ent_k = probs[k] * (std::log(std::max(probs[k], 1e-300)) + entropy);
                dlogits[k] = (-coeff * dlogp_k + cfg.entropy_coef * d_ent_k) * inv_n;
            }
            double dvalue = cfg.value_coef * verr * inv_n;
            net.backward(f, dlogits.data(), dvalue, *grad);
        }
    }
    terms.total = terms.policy + cfg.value_coef * terms.value - cfg.entropy_coef * terms.entropy;
    return terms;
}

namespace {

TrainResult ppo_train_impl(const EpisodeFactory& factory, PolicyNet net, const PpoConfig& cfg,
                           Rng& rng) {
    cfg.validate();
    PolicyNet last_good = net;
    Adam adam(net.num_params());
    std::vector<TrainLogRow> log;

    const int n = cfg.rollout_length;
    std::vector<double> obs_buf(static_cast<std::size_t>(n) * kObservationSize);
    std::vector<int> act_buf(n);
    std::vector<double> logp_buf(n), val_buf(n), rew_buf(n);
    std::vector<std::uint8_t> done_buf(n);

    GazeEpisode episode = factory(rng);
    ObservationStack obs = episode.observe_current();
    double ep_return = 0.0;

    PolicyNet::Forward fwd;
    std::vector<double> probs(kNumCells);
    std::vector<double> flat(kObservationSize);

    long steps_done = 0;
    int batch_idx = 0;
    while (steps_done < cfg.total_env_steps) {
        double sum_returns = 0.0, sum_lengths = 0.0;
        int finished_episodes = 0;

        for (int t = 0; t < n; ++t) {
            obs.flatten(flat.data());
            std::copy(flat.begin(), flat.end(),
                      obs_buf.begin() + static_cast<std::size_t>(t) * kObservationSize);
            net.forward(flat.data(), fwd);
            softmax(fwd.logits, probs);
            double u = rng.uniform01();
            int a = kNumCells - 1;
            double acc = 0.0;
            for (int k = 0; k < kNumCells; ++k) {
                acc += probs[k];
                if (u < acc) {
                    a = k;
                    break;
                }
            }
            act_buf[t] = a;
            logp_buf[t] = std::log(std::max(probs[a], 1e-300));
            val_buf[t] = fwd.value;

            auto step = env_step(episode, GridCoord::from_index(a), rng);
            rew_buf[t] = step.reward;
            done_buf[t] = step.done ? 1 : 0;
            ep_return += step.reward;

            if (step.done) {
                sum_returns += ep_return;
                sum_lengths += static_cast<double>(episode.trace.size());
                ++finished_episodes;
                ep_return = 0.0;
                episode = factory(rng);
                obs = episode.observe_current();
            } else {
                obs = std::move(step.obs);
            }
        }
        steps_done += n;

        // GAE; bootstrap from the value of the observation after the rollout.
        obs.flatten(flat.data());
        net.forward(flat.data(), fwd);
        double next_value = fwd.value;
        std::vector<double> adv(n), ret(n);
        double gae = 0.0;
        for (int t = n - 1; t >= 0; --t) {
            double not_done = done_buf[t] ? 0.0 : 1.0;
            double nv = (t == n - 1) ? next_value : val_buf[t + 1];
            double delta = rew_buf[t] + cfg.discount * nv * not_done - val_buf[t];
            gae = delta + cfg.discount * cfg.gae_lambda * not_done * gae;
            adv[t] = gae;
            ret[t] = adv[t] + val_buf[t];
        }
        double mean_adv = std::accumulate(adv.begin(), adv.end(), 0.0) / n;
        double var = 0.0;
        for (double a : adv) var += (a - mean_adv) * (a - mean_adv);
        double sd = std::sqrt(var / n) + 1e-8;
        for (double& a : adv) a = (a - mean_adv) / sd;

        std::vector<int> order(n);
        std::iota(order.begin(), order.end(), 0);
        LossTerms batch_terms;
        std::vector<double> grad(net.num_params());
        PpoBatch mb;

        for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
            for (int i = n - 1; i > 0; --i)
                std::swap(order[i], order[rng.uniform_int(0, i)]);
            for (int startm = 0; startm < n; startm += cfg.minibatch_size) {
                int bs = std::min(cfg.minibatch_size, n - startm);
                mb.size = bs;
                mb.obs.resize(static_cast<std::size_t>(bs) * kObservationSize);
                mb.actions.resize(bs);
                mb.old_logp.resize(bs);
                mb.advantages.resize(bs);
                mb.returns.resize(bs);
                for (int i = 0; i < bs; ++i) {
                    int src = order[startm + i];
                    std::copy(obs_buf.begin() + static_cast<std::size_t>(src) * kObservationSize,
                              obs_buf.begin() + static_cast<std::size_t>(src + 1) * kObservationSize,
                              mb.obs.begin() + static_cast<std::size_t>(i) * kObservationSize);
                    mb.actions[i] = act_buf[src];
                    mb.old_logp[i] = logp_buf[src];
                    mb.advantages[i] = adv[src];
                    mb.returns[i] = ret[src];
                }
                std::fill(grad.begin(), grad.end(), 0.0);
                LossTerms terms = ppo_loss_and_grad(net, mb, cfg, &grad);
                if (!std::isfinite(terms.total))
                    throw TrainingError("training diverged (non-finite loss); last good checkpoint at batch " +
                                        std::to_string(batch_idx));
                batch_terms = terms;

                double norm2 = 0.0;
                for (double gv : grad) norm2 += gv * gv;
                double norm = std::sqrt(norm2);
                if (cfg.max_grad_norm > 0.0 && norm > cfg.max_grad_norm) {
                    double s = cfg.max_grad_norm / norm;
                    for (double& gv : grad) gv *= s;
                }
                adam.step(net.params(), grad, cfg.learning_rate);
            }
        }

        for (double pv : net.params())
            if (!std::isfinite(pv))
                throw TrainingError("training diverged (non-finite parameters); last good checkpoint at batch " +
                                    std::to_string(batch_idx));
        last_good = net;

        TrainLogRow row;
        row.batch = batch_idx++;
        row.mean_return = finished_episodes > 0 ? sum_returns / finished_episodes : 0.0;
        row.mean_length = finished_episodes > 0 ? sum_lengths / finished_episodes : 0.0;
        row.policy_loss = batch_terms.policy;
        row.value_loss = batch_terms.value;
        row.entropy = batch_terms.entropy;
        log.push_back(row);
    }
    return {std::move(net), std::move(log)};
}

}  // namespace

TrainResult ppo_train(const EpisodeFactory& factory, NetConfig net_cfg, const PpoConfig& cfg,
                      std::uint64_t seed) {
    Rng rng(seed);
    PolicyNet net(net_cfg);
    net.init_weights(rng);
    return ppo_train_impl(factory, std::move(net), cfg, rng);
}

TrainResult ppo_train_from(const EpisodeFactory& factory, PolicyNet initial, const PpoConfig& cfg,
                           std::uint64_t seed) {
    Rng rng(seed);
    return ppo_train_impl(factory, std::move(initial), cfg, rng);
}

void write_train_log_csv(const std::string& path, const std::vector<TrainLogRow>& log) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot write training log: " + path);
    f << "batch,mean_return,mean_length,policy_loss,value_loss,entropy\n";
    for (const auto& r : log) {
        f << r.batch << "," << r.mean_return << "," << r.mean_length << "," << r.policy_loss << ","
          << r.value_loss << "," << r.entropy << "\n";
    }
}

}  // namespace scanviz
