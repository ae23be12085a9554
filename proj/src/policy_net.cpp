#include "scanviz/policy_net.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "scanviz/error.hpp"

namespace scanviz {

namespace {
constexpr int kGrid = kGridSize;        // 20
constexpr std::uint32_t kMagic = 0x4c50565au;  // "ZVPL"
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kEndianTag = 0x01020304u;
}  // namespace

PolicyNet::PolicyNet(NetConfig cfg) : cfg_(cfg) {
    const int c_in = cfg_.in_channels, c1 = cfg_.conv1_channels, c2 = cfg_.conv2_channels,
              h = cfg_.hidden;
    int off = 0;
    conv1_w_ = off;
    off += c1 * c_in * 9;
    conv1_b_ = off;
    off += c1;
    mix_local_w_ = off;
    off += c2 * c1;
    mix_col_w_ = off;
    off += c2 * c1;
    mix_row_w_ = off;
    off += c2 * c1;
    mix_b_ = off;
    off += c2;
    fc_w_ = off;
    off += h * c2 * kNumCells;
    fc_b_ = off;
    off += h;
    logit_w_ = off;
    off += c2;
    logit_b_ = off;
    off += 1;
    value_w_ = off;
    off += h;
    value_b_ = off;
    off += 1;
    params_.assign(off, 0.0);
}

void PolicyNet::init_weights(Rng& rng) {
    auto xavier = [&](int w_off, int count, int fan_in, int fan_out, double gain) {
        double bound = gain * std::sqrt(6.0 / (fan_in + fan_out));
        for (int i = 0; i < count; ++i) params_[w_off + i] = rng.uniform(-bound, bound);
    };
    const int c_in = cfg_.in_channels, c1 = cfg_.conv1_channels, c2 = cfg_.conv2_channels,
              h = cfg_.hidden;
    xavier(conv1_w_, c1 * c_in * 9, c_in * 9, c1 * 9, 1.0);
    xavier(mix_local_w_, c2 * c1, 3 * c1, c2, 1.0);
    xavier(mix_col_w_, c2 * c1, 3 * c1, c2, 1.0);
    xavier(mix_row_w_, c2 * c1, 3 * c1, c2, 1.0);
    xavier(fc_w_, h * c2 * kNumCells, c2 * kNumCells, h, 1.0);
    // Small policy head keeps the initial policy near-uniform.
    xavier(logit_w_, c2, c2, 1, 0.01);
    xavier(value_w_, h, h, 1, 1.0);
}

void PolicyNet::forward(const double* obs, Forward& f) const {
    const int c_in = cfg_.in_channels, c1 = cfg_.conv1_channels, c2 = cfg_.conv2_channels,
              h = cfg_.hidden;
    const double* p = params_.data();

    f.input.assign(obs, obs + c_in * kNumCells);
    f.a1.assign(static_cast<std::size_t>(c1) * kNumCells, 0.0);
    f.a2.assign(static_cast<std::size_t>(c2) * kNumCells, 0.0);
    f.hidden.assign(h, 0.0);
    f.logits.assign(kNumCells, 0.0);

    // conv1: 3x3, stride 1, pad 1, tanh
    for (int oc = 0; oc < c1; ++oc) {
        for (int y = 0; y < kGrid; ++y) {
            for (int x = 0; x < kGrid; ++x) {
                double z = p[conv1_b_ + oc];
                for (int ic = 0; ic < c_in; ++ic) {
                    const double* w = p + conv1_w_ + (oc * c_in + ic) * 9;
                    const double* in = obs + ic * kNumCells;
                    for (int ky = 0; ky < 3; ++ky) {
                        int iy = y + ky - 1;
                        if (iy < 0 || iy >= kGrid) continue;
                        for (int kx = 0; kx < 3; ++kx) {
                            int ix = x + kx - 1;
                            if (ix < 0 || ix >= kGrid) continue;
                            z += w[ky * 3 + kx] * in[iy * kGrid + ix];
                        }
                    }
                }
                f.a1[oc * kNumCells + y * kGrid + x] = std::tanh(z);
            }
        }
    }

    // layer 2: per-cell mix of local features with column/row means, tanh
    std::vector<double> colctx(static_cast<std::size_t>(c1) * kGrid, 0.0);
    std::vector<double> rowctx(static_cast<std::size_t>(c1) * kGrid, 0.0);
    for (int ic = 0; ic < c1; ++ic) {
        const double* in = f.a1.data() + ic * kNumCells;
        for (int y = 0; y < kGrid; ++y)
            for (int x = 0; x < kGrid; ++x) {
                colctx[ic * kGrid + x] += in[y * kGrid + x];
                rowctx[ic * kGrid + y] += in[y * kGrid + x];
            }
    }
    for (double& v : colctx) v /= kGrid;
    for (double& v : rowctx) v /= kGrid;
    for (int oc = 0; oc < c2; ++oc) {
        const double* wl = p + mix_local_w_ + oc * c1;
        const double* wc = p + mix_col_w_ + oc * c1;
        const double* wr = p + mix_row_w_ + oc * c1;
        for (int y = 0; y < kGrid; ++y) {
            for (int x = 0; x < kGrid; ++x) {
                double z = p[mix_b_ + oc];
                for (int ic = 0; ic < c1; ++ic)
                    z += wl[ic] * f.a1[ic * kNumCells + y * kGrid + x] +
                         wc[ic] * colctx[ic * kGrid + x] + wr[ic] * rowctx[ic * kGrid + y];
                f.a2[oc * kNumCells + y * kGrid + x] = std::tanh(z);
            }
        }
    }

    const int flat = c2 * kNumCells;
    for (int j = 0; j < h; ++j) {
        double z = p[fc_b_ + j];
        const double* w = p + fc_w_ + j * flat;
        for (int i = 0; i < flat; ++i) z += w[i] * f.a2[i];
        f.hidden[j] = std::tanh(z);
    }

    // weight-shared per-cell readout
    for (int k = 0; k < kNumCells; ++k) {
        double z = p[logit_b_];
        for (int oc = 0; oc < c2; ++oc) z += p[logit_w_ + oc] * f.a2[oc * kNumCells + k];
        f.logits[k] = z;
    }
    double v = p[value_b_];
    for (int j = 0; j < h; ++j) v += p[value_w_ + j] * f.hidden[j];
    f.value = v;
}

void PolicyNet::backward(const Forward& f, const double* dlogits, double dvalue,
                         std::vector<double>& grad) const {
    const int c_in = cfg_.in_channels, c1 = cfg_.conv1_channels, c2 = cfg_.conv2_channels,
              h = cfg_.hidden;
    const double* p = params_.data();
    double* g = grad.data();

    std::vector<double> dh(h, 0.0);
    const int flat = c2 * kNumCells;
    std::vector<double> da2(flat, 0.0);
    for (int k = 0; k < kNumCells; ++k) {
        double dk = dlogits[k];
        if (dk == 0.0) continue;
        g[logit_b_] += dk;
        for (int oc = 0; oc < c2; ++oc) {
            g[logit_w_ + oc] += dk * f.a2[oc * kNumCells + k];
            da2[oc * kNumCells + k] += dk * p[logit_w_ + oc];
        }
    }
    g[value_b_] += dvalue;
    for (int j = 0; j < h; ++j) {
        g[value_w_ + j] += dvalue * f.hidden[j];
        dh[j] += dvalue * p[value_w_ + j];
    }

    for (int j = 0; j < h; ++j) {
        double dz = dh[j] * (1.0 - f.hidden[j] * f.hidden[j]);
        if (dz == 0.0) continue;
        g[fc_b_ + j] += dz;
        const double* w = p + fc_w_ + j * flat;
        double* gw = g + fc_w_ + j * flat;
        for (int i = 0; i < flat; ++i) {
            gw[i] += dz * f.a2[i];
            da2[i] += dz * w[i];
        }
    }

    // recompute the layer-2 context means from a1
    std::vector<double> colctx(static_cast<std::size_t>(c1) * kGrid, 0.0);
    std::vector<double> rowctx(static_cast<std::size_t>(c1) * kGrid, 0.0);
    for (int ic = 0; ic < c1; ++ic) {
        const double* in = f.a1.data() + ic * kNumCells;
        for (int y = 0; y < kGrid; ++y)
            for (int x = 0; x < kGrid; ++x) {
                colctx[ic * kGrid + x] += in[y * kGrid + x];
                rowctx[ic * kGrid + y] += in[y * kGrid + x];
            }
    }
    for (double& v : colctx) v /= kGrid;
    for (double& v : rowctx) v /= kGrid;

    std::vector<double> da1(static_cast<std::size_t>(c1) * kNumCells, 0.0);
    std::vector<double> dcol(static_cast<std::size_t>(c1) * kGrid, 0.0);
    std::vector<double> drow(static_cast<std::size_t>(c1) * kGrid, 0.0);
    for (int oc = 0; oc < c2; ++oc) {
        const double* wl = p + mix_local_w_ + oc * c1;
        const double* wc = p + mix_col_w_ + oc * c1;
        const double* wr = p + mix_row_w_ + oc * c1;
        double* gwl = g + mix_local_w_ + oc * c1;
        double* gwc = g + mix_col_w_ + oc * c1;
        double* gwr = g + mix_row_w_ + oc * c1;
        for (int y = 0; y < kGrid; ++y) {
            for (int x = 0; x < kGrid; ++x) {
                double a = f.a2[oc * kNumCells + y * kGrid + x];
                double dz = da2[oc * kNumCells + y * kGrid + x] * (1.0 - a * a);
                if (dz == 0.0) continue;
                g[mix_b_ + oc] += dz;
                for (int ic = 0; ic < c1; ++ic) {
                    gwl[ic] += dz * f.a1[ic * kNumCells + y * kGrid + x];
                    gwc[ic] += dz * colctx[ic * kGrid + x];
                    gwr[ic] += dz * rowctx[ic * kGrid + y];
                    da1[ic * kNumCells + y * kGrid + x] += dz * wl[ic];
                    dcol[ic * kGrid + x] += dz * wc[ic];
                    drow[ic * kGrid + y] += dz * wr[ic];
                }
            }
        }
    }
    for (int ic = 0; ic < c1; ++ic) {
        double* din = da1.data() + ic * kNumCells;
        for (int y = 0; y < kGrid; ++y)
            for (int x = 0; x < kGrid; ++x)
                din[y * kGrid + x] +=
                    (dcol[ic * kGrid + x] + drow[ic * kGrid + y]) / kGrid;
    }

    for (int oc = 0; oc < c1; ++oc) {
        for (int y = 0; y < kGrid; ++y) {
            for (int x = 0; x < kGrid; ++x) {
                double a = f.a1[oc * kNumCells + y * kGrid + x];
                double dz = da1[oc * kNumCells + y * kGrid + x] * (1.0 - a * a);
                if (dz == 0.0) continue;
                g[conv1_b_ + oc] += dz;
                for (int ic = 0; ic < c_in; ++ic) {
                    double* gw = g + conv1_w_ + (oc * c_in + ic) * 9;
                    const double* in = f.input.data() + ic * kNumCells;
                    for (int ky = 0; ky < 3; ++ky) {
                        int iy = y + ky - 1;
                        if (iy < 0 || iy >= kGrid) continue;
                        for (int kx = 0; kx < 3; ++kx) {
                            int ix = x + kx - 1;
                            if (ix < 0 || ix >= kGrid) continue;
                            gw[ky * 3 + kx] += dz * in[iy * kGrid + ix];
                        }
                    }
                }
            }
        }
    }
}

void PolicyNet::save(const std::string& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write checkpoint: " + path);
    auto put_u32 = [&](std::uint32_t v) { f.write(reinterpret_cast<const char*>(&v), 4); };
    put_u32(kMagic);
    put_u32(kVersion);
    put_u32(kEndianTag);
    put_u32(static_cast<std::uint32_t>(cfg_.in_channels));
    put_u32(static_cast<std::uint32_t>(cfg_.conv1_channels));
    put_u32(static_cast<std::uint32_t>(cfg_.conv2_channels));
    put_u32(static_cast<std::uint32_t>(cfg_.hidden));
    put_u32(static_cast<std::uint32_t>(kGrid));
    put_u32(static_cast<std::uint32_t>(params_.size()));
    for (double d : params_) {
        float v = static_cast<float>(d);
        f.write(reinterpret_cast<const char*>(&v), 4);
    }
    if (!f) throw IoError("checkpoint write failed: " + path);
}

PolicyNet PolicyNet::load(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot read checkpoint: " + path);
    auto get_u32 = [&]() {
        std::uint32_t v = 0;
        f.read(reinterpret_cast<char*>(&v), 4);
        return v;
    };
    if (get_u32() != kMagic) throw ParseError("bad checkpoint magic: " + path, 0);
    if (get_u32() != kVersion) throw ParseError("unsupported checkpoint version: " + path, 4);
    if (get_u32() != kEndianTag) throw ParseError("checkpoint endianness mismatch: " + path, 8);
    NetConfig cfg;
    cfg.in_channels = static_cast<int>(get_u32());
    cfg.conv1_channels = static_cast<int>(get_u32());
    cfg.conv2_channels = static_cast<int>(get_u32());
    cfg.hidden = static_cast<int>(get_u32());
    if (get_u32() != static_cast<std::uint32_t>(kGrid))
        throw ParseError("checkpoint grid size mismatch: " + path, 28);
    std::uint32_t n = get_u32();
    PolicyNet net(cfg);
    if (n != static_cast<std::uint32_t>(net.num_params()))
        throw ParseError("checkpoint parameter count mismatch: " + path, 32);
    for (std::uint32_t i = 0; i < n; ++i) {
        float v = 0.0f;
        f.read(reinterpret_cast<char*>(&v), 4);
        net.params_[i] = v;
    }
    if (!f) throw IoError("truncated checkpoint: " + path);
    return net;
}

void softmax(const std::vector<double>& logits, std::vector<double>& probs) {
    double mx = *std::max_element(logits.begin(), logits.end());
    probs.resize(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        probs[i] = std::exp(logits[i] - mx);
        sum += probs[i];
    }
    for (auto& v : probs) v /= sum;
}

GridCoord act(const PolicyNet& net, const ObservationStack& obs, Rng& rng, ActMode mode) {
    std::vector<double> flat(kObservationSize);
    obs.flatten(flat.data());
    PolicyNet::Forward f;
    net.forward(flat.data(), f);
    for (double l : f.logits)
        if (!std::isfinite(l)) throw NumericError("non-finite policy logits");

    if (mode == ActMode::Greedy) {
        int best = 0;
        for (int i = 1; i < kNumCells; ++i)
            if (f.logits[i] > f.logits[best]) best = i;
        return GridCoord::from_index(best);
    }
    std::vector<double> probs;
    softmax(f.logits, probs);
    double u = rng.uniform01();
    double acc = 0.0;
    for (int i = 0; i < kNumCells; ++i) {
        acc += probs[i];
        if (u < acc) return GridCoord::from_index(i);
    }
    return GridCoord::from_index(kNumCells - 1);
}

}  // namespace scanviz
