// SPDX-License-Identifier: Apache-2.0
//
// aoa-lab: angle-of-arrival estimation with MUSIC and neural networks
// Copyright (C) 2026 aoa-lab contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include "aoa/bnn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "aoa/textio.hpp"

namespace aoa {

double softplus(double x) {
    if (x > 30.0)
        return x;
    return std::log1p(std::exp(x));
}

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Concrete weights for one posterior draw (same shapes as the mu tensors).
struct SampledLayer {
    std::vector<double> w;
    std::vector<double> b;
};

struct LayerCache {
    std::vector<double> in;  // batch x fan_in
    std::vector<double> pre; // batch x fan_out
    std::vector<double> act; // batch x fan_out
};

std::vector<double> forward_sampled(const std::vector<BnnVarLayer> &layers,
                                    const std::vector<SampledLayer> &sampled,
                                    const std::vector<double> &x, int batch,
                                    std::vector<LayerCache> *caches) {
    std::vector<double> cur = x;
    if (caches)
        caches->assign(layers.size(), LayerCache{});
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const BnnVarLayer &layer = layers[l];
        const int fi = layer.fan_in;
        const int fo = layer.fan_out;
        if (static_cast<int>(cur.size()) != batch * fi)
            throw ShapeError("bnn forward: layer input size mismatch");
        std::vector<double> pre(static_cast<std::size_t>(batch) * fo);
        for (int b = 0; b < batch; ++b) {
            double *row = pre.data() + static_cast<std::size_t>(b) * fo;
            for (int o = 0; o < fo; ++o)
                row[o] = sampled[l].b[o];
            const double *xin = cur.data() + static_cast<std::size_t>(b) * fi;
            for (int i = 0; i < fi; ++i) {
                const double xi = xin[i];
                if (xi == 0.0)
                    continue;
                const double *wrow = sampled[l].w.data() + static_cast<std::size_t>(i) * fo;
                for (int o = 0; o < fo; ++o)
                    row[o] += xi * wrow[o];
            }
        }
        std::vector<double> act(pre.size());
        for (std::size_t i = 0; i < pre.size(); ++i)
            act[i] = activation_apply(layer.activation, pre[i]);
        if (caches) {
            (*caches)[l].in = cur;
            (*caches)[l].pre = pre;
            (*caches)[l].act = act;
        }
        cur = std::move(act);
    }
    return cur;
}

double act_deriv_local(Activation kind, double pre, double act) {
    switch (kind) {
    case Activation::relu: return pre > 0.0 ? 1.0 : 0.0;
    case Activation::sigmoid: return act * (1.0 - act);
    case Activation::tanh: return 1.0 - act * act;
    case Activation::leaky_relu: return pre > 0.0 ? 1.0 : kLeakySlope;
    default: return 1.0;
    }
}

// Gradients of the summed batch loss w.r.t. the sampled weights.
void backward_sampled(const std::vector<BnnVarLayer> &layers,
                      const std::vector<SampledLayer> &sampled,
                      const std::vector<LayerCache> &caches, std::vector<double> dout, int batch,
                      std::vector<SampledLayer> &grads) {
    for (int l = static_cast<int>(layers.size()) - 1; l >= 0; --l) {
        const BnnVarLayer &layer = layers[l];
        const LayerCache &cache = caches[l];
        const int fi = layer.fan_in;
        const int fo = layer.fan_out;

        std::vector<double> dpre(dout.size());
        for (std::size_t i = 0; i < dout.size(); ++i)
            dpre[i] = dout[i] * act_deriv_local(layer.activation, cache.pre[i], cache.act[i]);

        std::vector<double> din(static_cast<std::size_t>(batch) * fi, 0.0);
        for (int b = 0; b < batch; ++b) {
            const double *xin = cache.in.data() + static_cast<std::size_t>(b) * fi;
            const double *drow = dpre.data() + static_cast<std::size_t>(b) * fo;
            for (int o = 0; o < fo; ++o)
                grads[l].b[o] += drow[o];
            for (int i = 0; i < fi; ++i) {
                const double xi = xin[i];
                double *gw = grads[l].w.data() + static_cast<std::size_t>(i) * fo;
                const double *wrow = sampled[l].w.data() + static_cast<std::size_t>(i) * fo;
                double acc = 0.0;
                for (int o = 0; o < fo; ++o) {
                    gw[o] += xi * drow[o];
                    acc += drow[o] * wrow[o];
                }
                din[static_cast<std::size_t>(b) * fi + i] += acc;
            }
        }
        dout = std::move(din);
    }
}

std::vector<SampledLayer> zero_like(const std::vector<BnnVarLayer> &layers) {
    std::vector<SampledLayer> z(layers.size());
    for (std::size_t l = 0; l < layers.size(); ++l) {
        z[l].w.assign(layers[l].mu_w.size(), 0.0);
        z[l].b.assign(layers[l].mu_b.size(), 0.0);
    }
    return z;
}

} // namespace

double bnn_kl(const BnnModel &model) {
    double kl = 0.0;
    auto add = [&](const std::vector<double> &mu, const std::vector<double> &rho) {
        for (std::size_t i = 0; i < mu.size(); ++i) {
            const double s = softplus(rho[i]);
            kl += 0.5 * (mu[i] * mu[i] + s * s - 1.0) - std::log(s);
        }
    };
    for (const BnnVarLayer &l : model.layers) {
        add(l.mu_w, l.rho_w);
        add(l.mu_b, l.rho_b);
    }
    return kl;
}

std::vector<double> BnnModel::forward_at_mean(const FeatureVector &raw_features) const {
    const FeatureVector x = input_stats.apply(raw_features);
    if (static_cast<int>(x.size()) != input_dim())
        throw ShapeError("bnn forward: feature length does not match model input");
    std::vector<SampledLayer> at_mean(layers.size());
    for (std::size_t l = 0; l < layers.size(); ++l) {
        at_mean[l].w = layers[l].mu_w;
        at_mean[l].b = layers[l].mu_b;
    }
    std::vector<double> y = forward_sampled(layers, at_mean, x, 1, nullptr);
    for (double &v : y)
        v *= label_scale;
    return y;
}

BnnModel train_bnn(const Dataset &dataset, const TrainConfig &config, int mc_samples) {
    config.validate();
    if (mc_samples < 1)
        throw ConfigError("train_bnn: mc_samples must be >= 1");
    if (dataset.features.empty())
        throw ConfigError("train_bnn: empty dataset");
    const int n = static_cast<int>(dataset.size());
    const int in_dim = dataset.feature_dim();
    const int out_dim = dataset.label_dim();
    if (out_dim < 1)
        throw ConfigError("train_bnn: dataset has no labels");

    BnnModel model;
    model.sigma_lik = config.bnn_sigma_lik;
    model.input_stats = NormStats::fit(dataset.features);
    model.label_scale = 90.0;

    std::vector<std::vector<double>> x(n), t(n);
    for (int i = 0; i < n; ++i) {
        x[i] = model.input_stats.apply(dataset.features[i]);
        t[i].resize(out_dim);
        for (int k = 0; k < out_dim; ++k)
            t[i][k] = dataset.labels_deg[i][k] / model.label_scale;
    }

    // Initialize mu He-style; rho so the posterior std starts near 0.05.
    std::mt19937_64 init_rng(mix_seed(config.seed ^ 0xb11fULL));
    const double rho0 = std::log(std::expm1(0.05));
    int cur = in_dim;
    std::vector<int> widths = config.hidden_sizes;
    widths.push_back(out_dim);
    for (std::size_t h = 0; h < widths.size(); ++h) {
        BnnVarLayer l;
        l.fan_in = cur;
        l.fan_out = widths[h];
        l.activation = h + 1 < widths.size() ? config.hidden_activation : Activation::linear;
        if (l.activation == Activation::rbf)
            throw ConfigError("train_bnn: rbf hidden layers are not supported");
        const double limit = std::sqrt(6.0 / static_cast<double>(cur));
        std::uniform_real_distribution<double> u(-limit, limit);
        l.mu_w.resize(static_cast<std::size_t>(cur) * widths[h]);
        for (double &w : l.mu_w)
            w = u(init_rng);
        l.rho_w.assign(l.mu_w.size(), rho0);
        l.mu_b.assign(widths[h], 0.0);
        l.rho_b.assign(widths[h], rho0);
        model.layers.push_back(std::move(l));
        cur = widths[h];
    }

    struct VarAdam {
        AdamState mu_w, rho_w, mu_b, rho_b;
    };
    std::vector<VarAdam> adam(model.layers.size());
    int step = 0;

    std::mt19937_64 shuffle_rng(mix_seed(config.seed ^ 0x51ffULL));
    std::mt19937_64 noise_rng(mix_seed(config.seed ^ 0xe5ULL));
    std::normal_distribution<double> gauss(0.0, 1.0);

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);

    const double inv_var_lik = 1.0 / (model.sigma_lik * model.sigma_lik);

    for (int epoch = 0; epoch < config.bnn_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        for (std::size_t pos = 0; pos < order.size(); pos += config.batch_size) {
            const int bsz =
                static_cast<int>(std::min<std::size_t>(config.batch_size, order.size() - pos));
            std::vector<double> xb(static_cast<std::size_t>(bsz) * in_dim);
            std::vector<double> tb(static_cast<std::size_t>(bsz) * out_dim);
            for (int b = 0; b < bsz; ++b) {
                const int i = order[pos + b];
                std::copy(x[i].begin(), x[i].end(), xb.begin() + static_cast<std::size_t>(b) * in_dim);
                std::copy(t[i].begin(), t[i].end(), tb.begin() + static_cast<std::size_t>(b) * out_dim);
            }

            std::vector<SampledLayer> gmu = zero_like(model.layers);
            std::vector<SampledLayer> grho = zero_like(model.layers);

            for (int s = 0; s < mc_samples; ++s) {
                // Reparameterized draw w = mu + softplus(rho) * xi.
                std::vector<SampledLayer> sampled(model.layers.size());
                std::vector<SampledLayer> xi(model.layers.size());
                for (std::size_t l = 0; l < model.layers.size(); ++l) {
                    const BnnVarLayer &layer = model.layers[l];
                    sampled[l].w.resize(layer.mu_w.size());
                    sampled[l].b.resize(layer.mu_b.size());
                    xi[l].w.resize(layer.mu_w.size());
                    xi[l].b.resize(layer.mu_b.size());
                    for (std::size_t i = 0; i < layer.mu_w.size(); ++i) {
                        xi[l].w[i] = gauss(noise_rng);
                        sampled[l].w[i] = layer.mu_w[i] + softplus(layer.rho_w[i]) * xi[l].w[i];
                    }
                    for (std::size_t i = 0; i < layer.mu_b.size(); ++i) {
                        xi[l].b[i] = gauss(noise_rng);
                        sampled[l].b[i] = layer.mu_b[i] + softplus(layer.rho_b[i]) * xi[l].b[i];
                    }
                }

                std::vector<LayerCache> caches;
                const std::vector<double> y =
                    forward_sampled(model.layers, sampled, xb, bsz, &caches);

                double nll = 0.0;
                std::vector<double> dout(y.size());
                for (std::size_t i = 0; i < y.size(); ++i) {
                    const double d = y[i] - tb[i];
                    nll += 0.5 * d * d * inv_var_lik;
                    dout[i] = d * inv_var_lik;
                }
                if (!std::isfinite(nll))
                    throw NumericError("train_bnn: non-finite likelihood at epoch " +
                                       std::to_string(epoch));

                std::vector<SampledLayer> gw = zero_like(model.layers);
                backward_sampled(model.layers, sampled, caches, std::move(dout), bsz, gw);

                for (std::size_t l = 0; l < model.layers.size(); ++l) {
                    const BnnVarLayer &layer = model.layers[l];
                    for (std::size_t i = 0; i < layer.mu_w.size(); ++i) {
                        gmu[l].w[i] += gw[l].w[i];
                        grho[l].w[i] += gw[l].w[i] * xi[l].w[i] * sigmoid(layer.rho_w[i]);
                    }
                    for (std::size_t i = 0; i < layer.mu_b.size(); ++i) {
                        gmu[l].b[i] += gw[l].b[i];
                        grho[l].b[i] += gw[l].b[i] * xi[l].b[i] * sigmoid(layer.rho_b[i]);
                    }
                }
            }

            // Scale the minibatch likelihood to the full dataset and add the
            // KL gradient once per step.
            const double scale = static_cast<double>(n) / (static_cast<double>(bsz) * mc_samples);
            ++step;
            for (std::size_t l = 0; l < model.layers.size(); ++l) {
                BnnVarLayer &layer = model.layers[l];
                for (std::size_t i = 0; i < layer.mu_w.size(); ++i) {
                    const double s = softplus(layer.rho_w[i]);
                    gmu[l].w[i] = gmu[l].w[i] * scale + layer.mu_w[i];
                    grho[l].w[i] = grho[l].w[i] * scale + (s - 1.0 / s) * sigmoid(layer.rho_w[i]);
                }
                for (std::size_t i = 0; i < layer.mu_b.size(); ++i) {
                    const double s = softplus(layer.rho_b[i]);
                    gmu[l].b[i] = gmu[l].b[i] * scale + layer.mu_b[i];
                    grho[l].b[i] = grho[l].b[i] * scale + (s - 1.0 / s) * sigmoid(layer.rho_b[i]);
                }
                adam_step(layer.mu_w, gmu[l].w, adam[l].mu_w, step, config.learning_rate);
                adam_step(layer.rho_w, grho[l].w, adam[l].rho_w, step, config.learning_rate);
                adam_step(layer.mu_b, gmu[l].b, adam[l].mu_b, step, config.learning_rate);
                adam_step(layer.rho_b, grho[l].b, adam[l].rho_b, step, config.learning_rate);
            }
        }
    }
    return model;
}

BnnPrediction predict_bnn(const BnnModel &model, const FeatureVector &raw_features,
                          int mc_samples, std::uint64_t seed) {
    if (mc_samples < 1)
        throw ConfigError("predict_bnn: mc_samples must be >= 1");
    const FeatureVector x = model.input_stats.apply(raw_features);
    if (static_cast<int>(x.size()) != model.input_dim())
        throw ShapeError("predict_bnn: feature length does not match model input");

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const int out_dim = model.output_dim();

    std::vector<double> sum(out_dim, 0.0), sum_sq(out_dim, 0.0);
    std::vector<SampledLayer> sampled(model.layers.size());
    for (int s = 0; s < mc_samples; ++s) {
        for (std::size_t l = 0; l < model.layers.size(); ++l) {
            const BnnVarLayer &layer = model.layers[l];
            sampled[l].w.resize(layer.mu_w.size());
            sampled[l].b.resize(layer.mu_b.size());
            for (std::size_t i = 0; i < layer.mu_w.size(); ++i)
                sampled[l].w[i] = layer.mu_w[i] + softplus(layer.rho_w[i]) * gauss(rng);
            for (std::size_t i = 0; i < layer.mu_b.size(); ++i)
                sampled[l].b[i] = layer.mu_b[i] + softplus(layer.rho_b[i]) * gauss(rng);
        }
        std::vector<double> y = forward_sampled(model.layers, sampled, x, 1, nullptr);
        for (int k = 0; k < out_dim; ++k) {
            const double deg = y[k] * model.label_scale;
            sum[k] += deg;
            sum_sq[k] += deg * deg;
        }
    }

    BnnPrediction pred;
    pred.mean_deg.resize(out_dim);
    pred.std_deg.resize(out_dim);
    for (int k = 0; k < out_dim; ++k) {
        pred.mean_deg[k] = sum[k] / mc_samples;
        const double var = std::max(0.0, sum_sq[k] / mc_samples - pred.mean_deg[k] * pred.mean_deg[k]);
        pred.std_deg[k] = std::sqrt(var);
    }
    return pred;
}

nlohmann::json bnn_to_json(const BnnModel &model) {
    nlohmann::json layers = nlohmann::json::array();
    for (const BnnVarLayer &l : model.layers)
        layers.push_back({{"fan_in", l.fan_in},
                          {"fan_out", l.fan_out},
                          {"activation", to_string(l.activation)},
                          {"mu_w", l.mu_w},
                          {"rho_w", l.rho_w},
                          {"mu_b", l.mu_b},
                          {"rho_b", l.rho_b}});
    return nlohmann::json{
        {"format_version", 1},
        {"type", "bnn"},
        {"label_scale", model.label_scale},
        {"sigma_lik", model.sigma_lik},
        {"input_stats", {{"mean", model.input_stats.mean}, {"std", model.input_stats.stddev}}},
        {"layers", layers}};
}

BnnModel bnn_from_json(const nlohmann::json &j) {
    if (j.value("type", "") != "bnn")
        throw ConfigError("model file is not a BNN model");
    BnnModel model;
    model.label_scale = j.at("label_scale").get<double>();
    model.sigma_lik = j.at("sigma_lik").get<double>();
    model.input_stats.mean = j.at("input_stats").at("mean").get<std::vector<double>>();
    model.input_stats.stddev = j.at("input_stats").at("std").get<std::vector<double>>();
    for (const nlohmann::json &lj : j.at("layers")) {
        BnnVarLayer l;
        l.fan_in = lj.at("fan_in").get<int>();
        l.fan_out = lj.at("fan_out").get<int>();
        l.activation = activation_from_string(lj.at("activation").get<std::string>());
        l.mu_w = lj.at("mu_w").get<std::vector<double>>();
        l.rho_w = lj.at("rho_w").get<std::vector<double>>();
        l.mu_b = lj.at("mu_b").get<std::vector<double>>();
        l.rho_b = lj.at("rho_b").get<std::vector<double>>();
        model.layers.push_back(std::move(l));
    }
    if (model.layers.empty())
        throw ConfigError("model file has no layers");
    return model;
}

void save_bnn(const BnnModel &model, const std::string &path) {
    write_text_file(path, bnn_to_json(model).dump(2) + "\n");
}

BnnModel load_bnn(const std::string &path) {
    try {
        return bnn_from_json(nlohmann::json::parse(read_text_file(path)));
    } catch (const nlohmann::json::exception &e) {
        throw ConfigError("bad model file '" + path + "': " + e.what());
    }
}

} // namespace aoa
