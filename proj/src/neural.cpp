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

#include "aoa/neural.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "aoa/textio.hpp"

namespace aoa {

const char *to_string(Activation a) {
    switch (a) {
    case Activation::relu: return "relu";
    case Activation::sigmoid: return "sigmoid";
    case Activation::tanh: return "tanh";
    case Activation::leaky_relu: return "leaky_relu";
    case Activation::linear: return "linear";
    case Activation::rbf: return "rbf";
    }
    return "?";
}

Activation activation_from_string(const std::string &s) {
    if (s == "relu") return Activation::relu;
    if (s == "sigmoid") return Activation::sigmoid;
    if (s == "tanh") return Activation::tanh;
    if (s == "leaky_relu") return Activation::leaky_relu;
    if (s == "linear") return Activation::linear;
    if (s == "rbf") return Activation::rbf;
    throw ConfigError("unknown activation '" + s + "'");
}

double activation_apply(Activation kind, double x) {
    switch (kind) {
    case Activation::relu: return x > 0.0 ? x : 0.0;
    case Activation::sigmoid: return 1.0 / (1.0 + std::exp(-x));
    case Activation::tanh: return std::tanh(x);
    case Activation::leaky_relu: return x > 0.0 ? x : kLeakySlope * x;
    case Activation::linear: return x;
    case Activation::rbf: return std::exp(-x * x);
    }
    return x;
}

void TrainConfig::validate() const {
    for (int h : hidden_sizes)
        if (h < 1)
            throw ConfigError("hidden layer sizes must be >= 1");
    if (batch_size < 1)
        throw ConfigError("batch_size must be >= 1");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0))
        throw ConfigError("dropout_rate must be in [0, 1)");
    if (l2_coeff < 0.0)
        throw ConfigError("l2_coeff must be >= 0");
    if (max_epochs < 1)
        throw ConfigError("max_epochs must be >= 1");
    if (patience < 1)
        throw ConfigError("patience must be >= 1");
    if (!(learning_rate > 0.0))
        throw ConfigError("learning_rate must be > 0");
    if (!(validation_fraction > 0.0 && validation_fraction < 1.0))
        throw ConfigError("validation_fraction must be in (0, 1)");
    if (rbf_units < 0)
        throw ConfigError("rbf_units must be >= 0");
    if (bnn_epochs < 1)
        throw ConfigError("bnn_epochs must be >= 1");
    if (!(bnn_sigma_lik > 0.0))
        throw ConfigError("bnn_sigma_lik must be > 0");
}

std::vector<double> dropout_mask(std::mt19937_64 &rng, std::size_t n, double rate) {
    std::vector<double> mask(n, 1.0);
    if (rate <= 0.0)
        return mask;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double keep_scale = 1.0 / (1.0 - rate);
    for (std::size_t i = 0; i < n; ++i)
        mask[i] = u(rng) < rate ? 0.0 : keep_scale;
    return mask;
}

void adam_step(std::vector<double> &param, const std::vector<double> &grad, AdamState &state,
               int t, double lr, double beta1, double beta2, double eps) {
    if (param.size() != grad.size())
        throw ShapeError("adam_step: parameter/gradient size mismatch");
    if (state.m.size() != param.size()) {
        state.m.assign(param.size(), 0.0);
        state.v.assign(param.size(), 0.0);
    }
    const double bc1 = 1.0 - std::pow(beta1, t);
    const double bc2 = 1.0 - std::pow(beta2, t);
    for (std::size_t i = 0; i < param.size(); ++i) {
        state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * grad[i];
        state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * grad[i] * grad[i];
        const double mhat = state.m[i] / bc1;
        const double vhat = state.v[i] / bc2;
        param[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
}

void batch_norm_train_forward(const std::vector<double> &z, int batch, int dim,
                              const std::vector<double> &gamma, const std::vector<double> &beta,
                              std::vector<double> &out, BatchNormCache &cache) {
    if (static_cast<int>(z.size()) != batch * dim)
        throw ShapeError("batch_norm_train_forward: bad input size");
    out.assign(z.size(), 0.0);
    cache.xhat.assign(z.size(), 0.0);
    cache.mean.assign(dim, 0.0);
    cache.var.assign(dim, 0.0);
    for (int b = 0; b < batch; ++b)
        for (int o = 0; o < dim; ++o)
            cache.mean[o] += z[static_cast<std::size_t>(b) * dim + o];
    for (int o = 0; o < dim; ++o)
        cache.mean[o] /= batch;
    for (int b = 0; b < batch; ++b)
        for (int o = 0; o < dim; ++o) {
            const double d = z[static_cast<std::size_t>(b) * dim + o] - cache.mean[o];
            cache.var[o] += d * d;
        }
    for (int o = 0; o < dim; ++o)
        cache.var[o] /= batch;
    for (int b = 0; b < batch; ++b)
        for (int o = 0; o < dim; ++o) {
            const std::size_t at = static_cast<std::size_t>(b) * dim + o;
            cache.xhat[at] = (z[at] - cache.mean[o]) / std::sqrt(cache.var[o] + kBatchNormEps);
            out[at] = gamma[o] * cache.xhat[at] + beta[o];
        }
}

// ---------------------------------------------------------------------------
// k-means for radial centers
// ---------------------------------------------------------------------------

namespace {

double sq_dist(const double *a, const double *b, int dim) {
    double s = 0.0;
    for (int i = 0; i < dim; ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

} // namespace

RbfParams fit_rbf_centers(const std::vector<FeatureVector> &points, int num_units,
                          std::uint64_t seed) {
    if (points.empty())
        throw ConfigError("fit_rbf_centers: no training points");
    const int n = static_cast<int>(points.size());
    const int dim = static_cast<int>(points.front().size());
    if (num_units < 1 || num_units > n)
        throw ConfigError("fit_rbf_centers: need 1 <= num_units <= num_samples");
    for (const FeatureVector &p : points)
        if (static_cast<int>(p.size()) != dim)
            throw ShapeError("fit_rbf_centers: inconsistent point dimensions");

    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> pick(0, n - 1);

    RbfParams params;
    params.num_units = num_units;
    params.fan_in = dim;
    params.centers.assign(static_cast<std::size_t>(num_units) * dim, 0.0);
    params.widths.assign(num_units, 0.0);

    // Farthest-point init: seeded first pick, then repeatedly the sample
    // farthest from its nearest chosen center.
    std::vector<int> chosen(num_units, 0);
    chosen[0] = pick(rng);
    std::vector<double> nearest(n, std::numeric_limits<double>::max());
    for (int u = 1; u < num_units; ++u) {
        for (int i = 0; i < n; ++i)
            nearest[i] = std::min(nearest[i],
                                  sq_dist(points[i].data(), points[chosen[u - 1]].data(), dim));
        int far = 0;
        for (int i = 1; i < n; ++i)
            if (nearest[i] > nearest[far])
                far = i;
        chosen[u] = far;
    }
    for (int u = 0; u < num_units; ++u)
        std::copy(points[chosen[u]].begin(), points[chosen[u]].end(),
                  params.centers.begin() + static_cast<std::size_t>(u) * dim);

    std::vector<int> assign(n, -1);
    const int max_iters = 50;
    for (int iter = 0; iter < max_iters; ++iter) {
        bool changed = false;
        for (int i = 0; i < n; ++i) {
            int best = 0;
            double best_d = sq_dist(points[i].data(), params.center(0), dim);
            for (int u = 1; u < num_units; ++u) {
                const double d = sq_dist(points[i].data(), params.center(u), dim);
                if (d < best_d) {
                    best_d = d;
                    best = u;
                }
            }
            if (assign[i] != best) {
                assign[i] = best;
                changed = true;
            }
        }
        if (!changed && iter > 0)
            break;

        std::vector<double> sums(static_cast<std::size_t>(num_units) * dim, 0.0);
        std::vector<int> counts(num_units, 0);
        for (int i = 0; i < n; ++i) {
            ++counts[assign[i]];
            for (int d = 0; d < dim; ++d)
                sums[static_cast<std::size_t>(assign[i]) * dim + d] += points[i][d];
        }
        for (int u = 0; u < num_units; ++u) {
            if (counts[u] == 0) {
                // Dead center: reseed from a random sample.
                const int r = pick(rng);
                std::copy(points[r].begin(), points[r].end(),
                          params.centers.begin() + static_cast<std::size_t>(u) * dim);
                continue;
            }
            for (int d = 0; d < dim; ++d)
                params.centers[static_cast<std::size_t>(u) * dim + d] =
                    sums[static_cast<std::size_t>(u) * dim + d] / counts[u];
        }
    }

    // Final assignment decides widths: 1 / (mean member distance + 1e-6).
    std::vector<double> dist_sum(num_units, 0.0);
    std::vector<int> counts(num_units, 0);
    for (int i = 0; i < n; ++i) {
        int best = 0;
        double best_d = sq_dist(points[i].data(), params.center(0), dim);
        for (int u = 1; u < num_units; ++u) {
            const double d = sq_dist(points[i].data(), params.center(u), dim);
            if (d < best_d) {
                best_d = d;
                best = u;
            }
        }
        dist_sum[best] += std::sqrt(best_d);
        ++counts[best];
    }
    for (int u = 0; u < num_units; ++u) {
        const double mean_dist = counts[u] > 0 ? dist_sum[u] / counts[u] : 0.0;
        params.widths[u] = 1.0 / (mean_dist + 1e-6);
    }
    return params;
}

// ---------------------------------------------------------------------------
// batch forward / backward
// ---------------------------------------------------------------------------

namespace {

std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

double act_deriv(Activation kind, double pre, double act) {
    switch (kind) {
    case Activation::relu: return pre > 0.0 ? 1.0 : 0.0;
    case Activation::sigmoid: return act * (1.0 - act);
    case Activation::tanh: return 1.0 - act * act;
    case Activation::leaky_relu: return pre > 0.0 ? 1.0 : kLeakySlope;
    case Activation::linear: return 1.0;
    case Activation::rbf: break; // handled separately in the backward pass
    }
    return 1.0;
}

struct LayerCache {
    std::vector<double> in;     // batch x fan_in
    std::vector<double> affine; // batch x fan_out (dense only)
    BatchNormCache bn;
    std::vector<double> pre;   // batch x fan_out, pre-activation
    std::vector<double> act;   // batch x fan_out
    std::vector<double> mask;  // dropout mask, empty when inactive
    std::vector<double> rbf_r; // batch x fan_out radial distances
    std::vector<double> out;   // layer output
};

struct ForwardOpts {
    bool training = false;        // batch-norm batch statistics
    bool update_running = false;  // refresh batch-norm running stats
    double dropout_rate = 0.0;    // hidden-layer dropout (training only)
    std::mt19937_64 *dropout_rng = nullptr;
};

// x is batch x input_dim in normalized feature space; returns the final
// layer output (scaled label space).
std::vector<double> forward_batch(const std::vector<DenseLayer> &layers_in,
                                  std::vector<DenseLayer> *layers_mut,
                                  const std::vector<double> &x, int batch,
                                  const ForwardOpts &opts, std::vector<LayerCache> *caches) {
    const std::vector<DenseLayer> &layers = layers_mut ? *layers_mut : layers_in;
    std::vector<double> cur = x;
    if (caches)
        caches->assign(layers.size(), LayerCache{});

    for (std::size_t l = 0; l < layers.size(); ++l) {
        const DenseLayer &layer = layers[l];
        const bool hidden = l + 1 < layers.size();
        const int fi = layer.fan_in;
        const int fo = layer.fan_out;
        if (static_cast<int>(cur.size()) != batch * fi)
            throw ShapeError("forward: layer input size mismatch");

        LayerCache local;
        LayerCache &cache = caches ? (*caches)[l] : local;
        cache.in = cur;

        std::vector<double> pre(static_cast<std::size_t>(batch) * fo, 0.0);
        if (layer.activation == Activation::rbf) {
            cache.rbf_r.assign(static_cast<std::size_t>(batch) * fo, 0.0);
            for (int b = 0; b < batch; ++b)
                for (int u = 0; u < fo; ++u) {
                    const double r = std::sqrt(
                        sq_dist(cur.data() + static_cast<std::size_t>(b) * fi, layer.rbf.center(u), fi));
                    cache.rbf_r[static_cast<std::size_t>(b) * fo + u] = r;
                    pre[static_cast<std::size_t>(b) * fo + u] = layer.rbf.widths[u] * r;
                }
        } else {
            std::vector<double> affine(static_cast<std::size_t>(batch) * fo);
            for (int b = 0; b < batch; ++b) {
                double *row = affine.data() + static_cast<std::size_t>(b) * fo;
                for (int o = 0; o < fo; ++o)
                    row[o] = layer.biases[o];
                const double *xin = cur.data() + static_cast<std::size_t>(b) * fi;
                for (int i = 0; i < fi; ++i) {
                    const double xi = xin[i];
                    if (xi == 0.0)
                        continue;
                    const double *wrow = layer.weights.data() + static_cast<std::size_t>(i) * fo;
                    for (int o = 0; o < fo; ++o)
                        row[o] += xi * wrow[o];
                }
            }
            cache.affine = affine;
            if (layer.batch_norm) {
                if (opts.training) {
                    batch_norm_train_forward(affine, batch, fo, layer.bn_gamma, layer.bn_beta,
                                             pre, cache.bn);
                    if (opts.update_running && layers_mut) {
                        DenseLayer &mut = (*layers_mut)[l];
                        for (int o = 0; o < fo; ++o) {
                            mut.bn_run_mean[o] = kBatchNormMomentum * mut.bn_run_mean[o] +
                                                 (1.0 - kBatchNormMomentum) * cache.bn.mean[o];
                            mut.bn_run_var[o] = kBatchNormMomentum * mut.bn_run_var[o] +
                                                (1.0 - kBatchNormMomentum) * cache.bn.var[o];
                        }
                    }
                } else {
                    for (int b = 0; b < batch; ++b)
                        for (int o = 0; o < fo; ++o) {
                            const std::size_t at = static_cast<std::size_t>(b) * fo + o;
                            const double xhat = (affine[at] - layer.bn_run_mean[o]) /
                                                std::sqrt(layer.bn_run_var[o] + kBatchNormEps);
                            pre[at] = layer.bn_gamma[o] * xhat + layer.bn_beta[o];
                        }
                }
            } else {
                pre = affine;
            }
        }
        cache.pre = pre;

        std::vector<double> act(pre.size());
        for (std::size_t i = 0; i < pre.size(); ++i)
            act[i] = activation_apply(layer.activation, pre[i]);
        cache.act = act;

        if (hidden && opts.training && opts.dropout_rate > 0.0 && opts.dropout_rng) {
            cache.mask = dropout_mask(*opts.dropout_rng, act.size(), opts.dropout_rate);
            for (std::size_t i = 0; i < act.size(); ++i)
                act[i] *= cache.mask[i];
        }
        cache.out = act;
        cur = std::move(act);
    }
    return cur;
}

struct LayerGrads {
    std::vector<double> w;
    std::vector<double> b;
    std::vector<double> gamma;
    std::vector<double> beta;
};

// dout is the gradient of the loss w.r.t. the network output
// (batch x fan_out of the last layer). Adds the l2 term on dense weights.
std::vector<LayerGrads> backward_batch(const std::vector<DenseLayer> &layers,
                                       const std::vector<LayerCache> &caches,
                                       std::vector<double> dout, int batch, double l2_coeff) {
    std::vector<LayerGrads> grads(layers.size());
    for (int l = static_cast<int>(layers.size()) - 1; l >= 0; --l) {
        const DenseLayer &layer = layers[l];
        const LayerCache &cache = caches[l];
        const int fi = layer.fan_in;
        const int fo = layer.fan_out;

        if (!cache.mask.empty())
            for (std::size_t i = 0; i < dout.size(); ++i)
                dout[i] *= cache.mask[i];

        std::vector<double> din(static_cast<std::size_t>(batch) * fi, 0.0);

        if (layer.activation == Activation::rbf) {
            // out = exp(-(w_u r)^2): d out/d pre = -2 pre out, d pre/d x via
            // the radial direction. Centers and widths stay fixed.
            for (int b = 0; b < batch; ++b)
                for (int u = 0; u < fo; ++u) {
                    const std::size_t at = static_cast<std::size_t>(b) * fo + u;
                    const double dpre = dout[at] * (-2.0) * cache.pre[at] * cache.act[at];
                    const double r = cache.rbf_r[at];
                    if (r <= 0.0)
                        continue;
                    const double dr = dpre * layer.rbf.widths[u];
                    const double *xin = cache.in.data() + static_cast<std::size_t>(b) * fi;
                    const double *c = layer.rbf.center(u);
                    double *drow = din.data() + static_cast<std::size_t>(b) * fi;
                    for (int i = 0; i < fi; ++i)
                        drow[i] += dr * (xin[i] - c[i]) / r;
                }
        } else {
            std::vector<double> dpre(dout.size());
            for (std::size_t i = 0; i < dout.size(); ++i)
                dpre[i] = dout[i] * act_deriv(layer.activation, cache.pre[i], cache.act[i]);

            std::vector<double> daffine;
            if (layer.batch_norm) {
                grads[l].gamma.assign(fo, 0.0);
                grads[l].beta.assign(fo, 0.0);
                daffine.assign(dpre.size(), 0.0);
                for (int o = 0; o < fo; ++o) {
                    const double inv = 1.0 / std::sqrt(cache.bn.var[o] + kBatchNormEps);
                    double dxhat_sum = 0.0;
                    double dxhat_xhat_sum = 0.0;
                    for (int b = 0; b < batch; ++b) {
                        const std::size_t at = static_cast<std::size_t>(b) * fo + o;
                        const double dxhat = dpre[at] * layer.bn_gamma[o];
                        dxhat_sum += dxhat;
                        dxhat_xhat_sum += dxhat * cache.bn.xhat[at];
                        grads[l].gamma[o] += dpre[at] * cache.bn.xhat[at];
                        grads[l].beta[o] += dpre[at];
                    }
                    const double nb = static_cast<double>(batch);
                    for (int b = 0; b < batch; ++b) {
                        const std::size_t at = static_cast<std::size_t>(b) * fo + o;
                        const double dxhat = dpre[at] * layer.bn_gamma[o];
                        daffine[at] = inv / nb *
                                      (nb * dxhat - dxhat_sum - cache.bn.xhat[at] * dxhat_xhat_sum);
                    }
                }
            } else {
                daffine = std::move(dpre);
            }

            grads[l].w.assign(layer.weights.size(), 0.0);
            grads[l].b.assign(fo, 0.0);
            for (int b = 0; b < batch; ++b) {
                const double *xin = cache.in.data() + static_cast<std::size_t>(b) * fi;
                const double *drow = daffine.data() + static_cast<std::size_t>(b) * fo;
                for (int o = 0; o < fo; ++o)
                    grads[l].b[o] += drow[o];
                for (int i = 0; i < fi; ++i) {
                    const double xi = xin[i];
                    double *gw = grads[l].w.data() + static_cast<std::size_t>(i) * fo;
                    double *dinrow = din.data() + static_cast<std::size_t>(b) * fi;
                    const double *wrow = layer.weights.data() + static_cast<std::size_t>(i) * fo;
                    double acc = 0.0;
                    for (int o = 0; o < fo; ++o) {
                        gw[o] += xi * drow[o];
                        acc += drow[o] * wrow[o];
                    }
                    dinrow[i] += acc;
                }
            }
            if (l2_coeff > 0.0)
                for (std::size_t i = 0; i < layer.weights.size(); ++i)
                    grads[l].w[i] += 2.0 * l2_coeff * layer.weights[i];
        }
        dout = std::move(din);
    }
    return grads;
}

double weight_l2(const std::vector<DenseLayer> &layers) {
    double s = 0.0;
    for (const DenseLayer &l : layers)
        if (l.activation != Activation::rbf)
            for (double w : l.weights)
                s += w * w;
    return s;
}

double mse_of(const std::vector<double> &pred, const std::vector<double> &target) {
    double s = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - target[i];
        s += d * d;
    }
    return s / static_cast<double>(pred.size());
}

} // namespace

// ---------------------------------------------------------------------------
// model construction and inference
// ---------------------------------------------------------------------------

namespace {

DenseLayer make_dense(int fan_in, int fan_out, Activation act, bool with_bn,
                      std::mt19937_64 &rng) {
    DenseLayer l;
    l.fan_in = fan_in;
    l.fan_out = fan_out;
    l.activation = act;
    l.weights.resize(static_cast<std::size_t>(fan_in) * fan_out);
    l.biases.assign(fan_out, 0.0);
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
    std::uniform_real_distribution<double> u(-limit, limit);
    for (double &w : l.weights)
        w = u(rng);
    if (with_bn) {
        l.batch_norm = true;
        l.bn_gamma.assign(fan_out, 1.0);
        l.bn_beta.assign(fan_out, 0.0);
        l.bn_run_mean.assign(fan_out, 0.0);
        l.bn_run_var.assign(fan_out, 1.0);
    }
    return l;
}

MlpModel build_model(int input_dim, int output_dim, const TrainConfig &cfg,
                     const std::vector<FeatureVector> &norm_features) {
    std::mt19937_64 init_rng(mix_seed(cfg.seed));
    MlpModel model;
    int cur = input_dim;
    for (std::size_t h = 0; h < cfg.hidden_sizes.size(); ++h) {
        const int width = cfg.hidden_sizes[h];
        if (h == 0 && cfg.rbf_units > 0) {
            DenseLayer l;
            l.fan_in = cur;
            l.fan_out = cfg.rbf_units;
            l.activation = Activation::rbf;
            l.rbf = fit_rbf_centers(norm_features, cfg.rbf_units, mix_seed(cfg.seed ^ 0x5bfULL));
            model.layers.push_back(std::move(l));
            cur = cfg.rbf_units;
            continue;
        }
        model.layers.push_back(make_dense(cur, width, cfg.hidden_activation, true, init_rng));
        cur = width;
    }
    model.layers.push_back(make_dense(cur, output_dim, Activation::linear, false, init_rng));
    return model;
}

} // namespace

std::vector<double> MlpModel::forward(const FeatureVector &raw_features) const {
    const FeatureVector x = input_stats.apply(raw_features);
    if (static_cast<int>(x.size()) != input_dim())
        throw ShapeError("forward: feature length does not match model input");
    ForwardOpts opts; // inference
    std::vector<double> y = forward_batch(layers, nullptr, x, 1, opts, nullptr);
    for (double &v : y)
        v *= label_scale;
    return y;
}

double training_loss(const MlpModel &model, const std::vector<FeatureVector> &raw_features,
                     const std::vector<std::vector<double>> &targets_deg, double l2_coeff) {
    if (raw_features.empty() || raw_features.size() != targets_deg.size())
        throw ShapeError("training_loss: bad batch");
    const int batch = static_cast<int>(raw_features.size());
    const int in_dim = model.input_dim();
    const int out_dim = model.output_dim();
    std::vector<double> x(static_cast<std::size_t>(batch) * in_dim);
    std::vector<double> t(static_cast<std::size_t>(batch) * out_dim);
    for (int b = 0; b < batch; ++b) {
        const FeatureVector nx = model.input_stats.apply(raw_features[b]);
        std::copy(nx.begin(), nx.end(), x.begin() + static_cast<std::size_t>(b) * in_dim);
        for (int k = 0; k < out_dim; ++k)
            t[static_cast<std::size_t>(b) * out_dim + k] = targets_deg[b][k] / model.label_scale;
    }
    ForwardOpts opts;
    opts.training = true;
    const std::vector<double> y = forward_batch(model.layers, nullptr, x, batch, opts, nullptr);
    return mse_of(y, t) + l2_coeff * weight_l2(model.layers);
}

double gradient_check(const MlpModel &model_in, const std::vector<FeatureVector> &raw_features,
                      const std::vector<std::vector<double>> &targets_deg, double l2_coeff) {
    MlpModel model = model_in;
    const int batch = static_cast<int>(raw_features.size());
    const int in_dim = model.input_dim();
    const int out_dim = model.output_dim();
    std::vector<double> x(static_cast<std::size_t>(batch) * in_dim);
    std::vector<double> t(static_cast<std::size_t>(batch) * out_dim);
    for (int b = 0; b < batch; ++b) {
        const FeatureVector nx = model.input_stats.apply(raw_features[b]);
        std::copy(nx.begin(), nx.end(), x.begin() + static_cast<std::size_t>(b) * in_dim);
        for (int k = 0; k < out_dim; ++k)
            t[static_cast<std::size_t>(b) * out_dim + k] = targets_deg[b][k] / model.label_scale;
    }

    auto loss_at = [&]() {
        ForwardOpts opts;
        opts.training = true;
        const std::vector<double> y = forward_batch(model.layers, nullptr, x, batch, opts, nullptr);
        return mse_of(y, t) + l2_coeff * weight_l2(model.layers);
    };

    // Analytic gradients.
    std::vector<LayerCache> caches;
    ForwardOpts opts;
    opts.training = true;
    const std::vector<double> y = forward_batch(model.layers, nullptr, x, batch, opts, &caches);
    std::vector<double> dout(y.size());
    for (std::size_t i = 0; i < y.size(); ++i)
        dout[i] = 2.0 * (y[i] - t[i]) / static_cast<double>(y.size());
    const std::vector<LayerGrads> grads =
        backward_batch(model.layers, caches, std::move(dout), batch, l2_coeff);

    const double h = 1e-5;
    double worst = 0.0;
    auto check_tensor = [&](std::vector<double> &param, const std::vector<double> &grad) {
        for (std::size_t i = 0; i < param.size(); ++i) {
            const double keep = param[i];
            param[i] = keep + h;
            const double lp = loss_at();
            param[i] = keep - h;
            const double lm = loss_at();
            param[i] = keep;
            const double fd = (lp - lm) / (2.0 * h);
            const double dev = std::abs(grad[i] - fd) / std::max(1.0, std::abs(grad[i]) + std::abs(fd));
            worst = std::max(worst, dev);
        }
    };
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        DenseLayer &layer = model.layers[l];
        if (layer.activation == Activation::rbf)
            continue;
        check_tensor(layer.weights, grads[l].w);
        check_tensor(layer.biases, grads[l].b);
        if (layer.batch_norm) {
            check_tensor(layer.bn_gamma, grads[l].gamma);
            check_tensor(layer.bn_beta, grads[l].beta);
        }
    }
    return worst;
}

// ---------------------------------------------------------------------------
// training
// ---------------------------------------------------------------------------

namespace {

struct TrainPlan {
    NormStats stats;
    std::vector<std::vector<double>> x; // normalized features
    std::vector<std::vector<double>> t; // scaled targets
    MlpModel init_model;
};

TrainPlan make_plan(const Dataset &ds, const TrainConfig &cfg) {
    cfg.validate();
    if (ds.features.empty())
        throw ConfigError("train: empty dataset");
    const int in_dim = ds.feature_dim();
    const int out_dim = ds.label_dim();
    if (out_dim < 1)
        throw ConfigError("train: dataset has no labels");
    for (std::size_t i = 0; i < ds.size(); ++i) {
        if (static_cast<int>(ds.features[i].size()) != in_dim ||
            static_cast<int>(ds.labels_deg[i].size()) != out_dim)
            throw ShapeError("train: inconsistent dataset sample dimensions");
    }

    TrainPlan plan;
    plan.stats = NormStats::fit(ds.features);
    plan.x.resize(ds.size());
    plan.t.resize(ds.size());
    const double scale = 90.0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        plan.x[i] = plan.stats.apply(ds.features[i]);
        plan.t[i].resize(out_dim);
        for (int k = 0; k < out_dim; ++k)
            plan.t[i][k] = ds.labels_deg[i][k] / scale;
    }
    plan.init_model = build_model(in_dim, out_dim, cfg, plan.x);
    plan.init_model.input_stats = plan.stats;
    plan.init_model.label_scale = scale;
    return plan;
}

double eval_mse(const MlpModel &model, const TrainPlan &plan, const std::vector<int> &idx) {
    const int out_dim = model.output_dim();
    double s = 0.0;
    ForwardOpts opts; // inference
    for (int i : idx) {
        const std::vector<double> y =
            forward_batch(model.layers, nullptr, plan.x[i], 1, opts, nullptr);
        for (int k = 0; k < out_dim; ++k) {
            const double d = y[k] - plan.t[i][k];
            s += d * d;
        }
    }
    return s / (static_cast<double>(idx.size()) * out_dim);
}

class EarlyStopper {
  public:
    explicit EarlyStopper(int patience) : patience_(patience) {}

    // Feed one validation loss per epoch; true means stop now.
    bool observe(double val_loss) {
        ++epoch_;
        if (val_loss < best_) {
            best_ = val_loss;
            best_epoch_ = epoch_;
            since_best_ = 0;
            improved_ = true;
            return false;
        }
        improved_ = false;
        return ++since_best_ >= patience_;
    }

    bool improved_last() const { return improved_; }
    int best_epoch() const { return best_epoch_; }

  private:
    int patience_;
    int epoch_ = -1;
    int best_epoch_ = -1;
    int since_best_ = 0;
    double best_ = std::numeric_limits<double>::infinity();
    bool improved_ = false;
};

MlpModel train_indices(const TrainPlan &plan, const std::vector<int> &train_idx,
                       const std::vector<int> &val_idx, const TrainConfig &cfg,
                       TrainHistory *history) {
    if (train_idx.empty())
        throw ConfigError("train: training split is empty");
    if (val_idx.empty())
        throw ConfigError("train: validation split is empty");

    MlpModel model = plan.init_model;
    const int in_dim = model.input_dim();
    const int out_dim = model.output_dim();

    std::mt19937_64 shuffle_rng(mix_seed(cfg.seed ^ 0x51ffULL));
    std::mt19937_64 dropout_rng(mix_seed(cfg.seed ^ 0xd0ULL));

    struct LayerAdam {
        AdamState w, b, gamma, beta;
    };
    std::vector<LayerAdam> adam(model.layers.size());
    int step = 0;

    EarlyStopper stopper(cfg.patience);
    MlpModel best_model = model;
    TrainHistory hist;

    std::vector<int> order = train_idx;
    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);

        double epoch_sq = 0.0;
        for (std::size_t pos = 0; pos < order.size(); pos += cfg.batch_size) {
            const int bsz = static_cast<int>(std::min<std::size_t>(cfg.batch_size, order.size() - pos));
            std::vector<double> x(static_cast<std::size_t>(bsz) * in_dim);
            std::vector<double> t(static_cast<std::size_t>(bsz) * out_dim);
            for (int b = 0; b < bsz; ++b) {
                const int i = order[pos + b];
                std::copy(plan.x[i].begin(), plan.x[i].end(),
                          x.begin() + static_cast<std::size_t>(b) * in_dim);
                std::copy(plan.t[i].begin(), plan.t[i].end(),
                          t.begin() + static_cast<std::size_t>(b) * out_dim);
            }

            std::vector<LayerCache> caches;
            ForwardOpts opts;
            opts.training = true;
            opts.update_running = true;
            opts.dropout_rate = cfg.dropout_rate;
            opts.dropout_rng = &dropout_rng;
            const std::vector<double> y = forward_batch(model.layers, &model.layers, x, bsz, opts, &caches);

            const double batch_mse = mse_of(y, t);
            if (!std::isfinite(batch_mse))
                throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch) +
                                   " (diverged; try a lower learning rate)");
            epoch_sq += batch_mse * bsz;

            std::vector<double> dout(y.size());
            for (std::size_t i = 0; i < y.size(); ++i)
                dout[i] = 2.0 * (y[i] - t[i]) / static_cast<double>(y.size());
            const std::vector<LayerGrads> grads =
                backward_batch(model.layers, caches, std::move(dout), bsz, cfg.l2_coeff);

            ++step;
            for (std::size_t l = 0; l < model.layers.size(); ++l) {
                DenseLayer &layer = model.layers[l];
                if (layer.activation == Activation::rbf)
                    continue;
                adam_step(layer.weights, grads[l].w, adam[l].w, step, cfg.learning_rate);
                adam_step(layer.biases, grads[l].b, adam[l].b, step, cfg.learning_rate);
                if (layer.batch_norm) {
                    adam_step(layer.bn_gamma, grads[l].gamma, adam[l].gamma, step, cfg.learning_rate);
                    adam_step(layer.bn_beta, grads[l].beta, adam[l].beta, step, cfg.learning_rate);
                }
            }
        }

        hist.train_loss.push_back(epoch_sq / static_cast<double>(order.size()));
        const double val = eval_mse(model, plan, val_idx);
        hist.val_loss.push_back(val);
        hist.stopped_epoch = epoch;

        const bool stop = stopper.observe(val);
        if (stopper.improved_last())
            best_model = model;
        if (stop)
            break;
    }
    hist.best_epoch = stopper.best_epoch();
    if (history)
        *history = hist;
    return best_model;
}

} // namespace

MlpModel train(const Dataset &dataset, const TrainConfig &config, TrainHistory *history) {
    TrainPlan plan = make_plan(dataset, config);
    const int n = static_cast<int>(dataset.size());

    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 split_rng(mix_seed(config.seed ^ 0xab1eULL));
    std::shuffle(idx.begin(), idx.end(), split_rng);

    const int val_n = static_cast<int>(std::lround(config.validation_fraction * n));
    if (val_n < 1)
        throw ConfigError("train: validation split is empty (dataset too small for "
                          "validation_fraction)");
    if (val_n >= n)
        throw ConfigError("train: no samples left for training");
    const std::vector<int> val_idx(idx.begin(), idx.begin() + val_n);
    const std::vector<int> train_idx(idx.begin() + val_n, idx.end());
    return train_indices(plan, train_idx, val_idx, config, history);
}

KFoldResult kfold_train(const Dataset &dataset, const TrainConfig &config, int k) {
    if (k < 2)
        throw ConfigError("kfold_train: k must be >= 2");
    const int n = static_cast<int>(dataset.size());
    if (k > n)
        throw ConfigError("kfold_train: k exceeds dataset size");
    TrainPlan plan = make_plan(dataset, config);

    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 split_rng(mix_seed(config.seed ^ 0xf01dULL));
    std::shuffle(idx.begin(), idx.end(), split_rng);

    KFoldResult result;
    for (int f = 0; f < k; ++f) {
        const int lo = static_cast<int>(static_cast<long long>(f) * n / k);
        const int hi = static_cast<int>(static_cast<long long>(f + 1) * n / k);
        std::vector<int> val_idx(idx.begin() + lo, idx.begin() + hi);
        std::vector<int> train_idx;
        train_idx.reserve(n - (hi - lo));
        train_idx.insert(train_idx.end(), idx.begin(), idx.begin() + lo);
        train_idx.insert(train_idx.end(), idx.begin() + hi, idx.end());
        result.folds.push_back(train_indices(plan, train_idx, val_idx, config, nullptr));
    }

    // Arithmetic mean of every trained tensor; the shared radial layer and
    // normalization statistics carry over unchanged.
    result.averaged = result.folds.front();
    const double kk = static_cast<double>(k);
    for (std::size_t l = 0; l < result.averaged.layers.size(); ++l) {
        DenseLayer &avg = result.averaged.layers[l];
        auto average_into = [&](std::vector<double> DenseLayer::*member) {
            std::vector<double> &dst = avg.*member;
            for (std::size_t i = 0; i < dst.size(); ++i) {
                double s = 0.0;
                for (int f = 0; f < k; ++f)
                    s += (result.folds[f].layers[l].*member)[i];
                dst[i] = s / kk;
            }
        };
        average_into(&DenseLayer::weights);
        average_into(&DenseLayer::biases);
        average_into(&DenseLayer::bn_gamma);
        average_into(&DenseLayer::bn_beta);
        average_into(&DenseLayer::bn_run_mean);
        average_into(&DenseLayer::bn_run_var);
    }
    return result;
}

// ---------------------------------------------------------------------------
// serialization
// ---------------------------------------------------------------------------

namespace {

using nlohmann::json;

json layer_to_json(const DenseLayer &l) {
    json j{{"fan_in", l.fan_in},
           {"fan_out", l.fan_out},
           {"activation", to_string(l.activation)},
           {"weights", l.weights},
           {"biases", l.biases}};
    if (l.batch_norm)
        j["batch_norm"] = {{"gamma", l.bn_gamma},
                           {"beta", l.bn_beta},
                           {"running_mean", l.bn_run_mean},
                           {"running_var", l.bn_run_var}};
    if (l.activation == Activation::rbf)
        j["rbf"] = {{"num_units", l.rbf.num_units},
                    {"fan_in", l.rbf.fan_in},
                    {"centers", l.rbf.centers},
                    {"widths", l.rbf.widths}};
    return j;
}

DenseLayer layer_from_json(const json &j) {
    DenseLayer l;
    l.fan_in = j.at("fan_in").get<int>();
    l.fan_out = j.at("fan_out").get<int>();
    l.activation = activation_from_string(j.at("activation").get<std::string>());
    l.weights = j.at("weights").get<std::vector<double>>();
    l.biases = j.at("biases").get<std::vector<double>>();
    if (j.contains("batch_norm")) {
        l.batch_norm = true;
        l.bn_gamma = j["batch_norm"].at("gamma").get<std::vector<double>>();
        l.bn_beta = j["batch_norm"].at("beta").get<std::vector<double>>();
        l.bn_run_mean = j["batch_norm"].at("running_mean").get<std::vector<double>>();
        l.bn_run_var = j["batch_norm"].at("running_var").get<std::vector<double>>();
    }
    if (j.contains("rbf")) {
        l.rbf.num_units = j["rbf"].at("num_units").get<int>();
        l.rbf.fan_in = j["rbf"].at("fan_in").get<int>();
        l.rbf.centers = j["rbf"].at("centers").get<std::vector<double>>();
        l.rbf.widths = j["rbf"].at("widths").get<std::vector<double>>();
    }
    return l;
}

} // namespace

nlohmann::json mlp_to_json(const MlpModel &model) {
    json layers = json::array();
    for (const DenseLayer &l : model.layers)
        layers.push_back(layer_to_json(l));
    return json{{"format_version", 1},
                {"type", "mlp"},
                {"label_scale", model.label_scale},
                {"input_stats", {{"mean", model.input_stats.mean}, {"std", model.input_stats.stddev}}},
                {"layers", layers}};
}

MlpModel mlp_from_json(const nlohmann::json &j) {
    if (j.value("type", "") != "mlp")
        throw ConfigError("model file is not an MLP model");
    MlpModel model;
    model.label_scale = j.at("label_scale").get<double>();
    model.input_stats.mean = j.at("input_stats").at("mean").get<std::vector<double>>();
    model.input_stats.stddev = j.at("input_stats").at("std").get<std::vector<double>>();
    for (const json &lj : j.at("layers"))
        model.layers.push_back(layer_from_json(lj));
    if (model.layers.empty())
        throw ConfigError("model file has no layers");
    return model;
}

void save_mlp(const MlpModel &model, const std::string &path) {
    write_text_file(path, mlp_to_json(model).dump(2) + "\n");
}

MlpModel load_mlp(const std::string &path) {
    try {
        return mlp_from_json(nlohmann::json::parse(read_text_file(path)));
    } catch (const nlohmann::json::exception &e) {
        throw ConfigError("bad model file '" + path + "': " + e.what());
    }
}

} // namespace aoa
