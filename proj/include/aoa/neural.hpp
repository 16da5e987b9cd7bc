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

#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "aoa/features.hpp"

namespace aoa {

enum class Activation { relu, sigmoid, tanh, leaky_relu, linear, rbf };

const char *to_string(Activation a);
Activation activation_from_string(const std::string &s);

// Scalar activation value. For rbf, x is the scaled radial distance
// sigma*(r - c) and the value is exp(-x^2).
double activation_apply(Activation kind, double x);

constexpr double kLeakySlope = 0.01;
constexpr double kBatchNormEps = 1e-5;
constexpr double kBatchNormMomentum = 0.9;

// Radial units: unit u responds with exp(-(width_u * ||x - center_u||)^2).
struct RbfParams {
    int num_units = 0;
    int fan_in = 0;
    std::vector<double> centers; // num_units x fan_in, row-major
    std::vector<double> widths;  // num_units

    const double *center(int u) const { return centers.data() + static_cast<std::size_t>(u) * fan_in; }
};

// Centers via seeded k-means (farthest-point init, 50 Lloyd iterations);
// width of unit u is 1 / (mean distance from center u to its cluster
// members + 1e-6). Empty clusters are reseeded from a random sample.
RbfParams fit_rbf_centers(const std::vector<FeatureVector> &points, int num_units,
                          std::uint64_t seed);

// One layer of the feed-forward stack. Dense layers apply x*W + b, an
// optional batch norm, then the activation; rbf layers ignore W/b and use
// the radial parameters (fixed after fitting, not trained).
struct DenseLayer {
    int fan_in = 0;
    int fan_out = 0;
    Activation activation = Activation::relu;
    std::vector<double> weights; // fan_in x fan_out, row-major by input
    std::vector<double> biases;  // fan_out

    bool batch_norm = false;
    std::vector<double> bn_gamma;
    std::vector<double> bn_beta;
    std::vector<double> bn_run_mean;
    std::vector<double> bn_run_var;

    RbfParams rbf; // used only when activation == rbf
};

struct TrainConfig {
    std::vector<int> hidden_sizes{25, 25, 25};
    Activation hidden_activation = Activation::relu;
    int rbf_units = 0; // >0 turns the first hidden layer into a radial layer
    int batch_size = 64;
    double dropout_rate = 0.10;
    double l2_coeff = 0.001;
    int max_epochs = 2000;
    int patience = 20;
    double learning_rate = 0.001;
    double validation_fraction = 0.1;
    int kfold_k = 5;
    std::uint64_t seed = 1;

    // Bayes-by-backprop settings (fixed epoch budget, no early stop).
    int bnn_epochs = 300;
    double bnn_sigma_lik = 0.1; // likelihood noise in scaled label space

    void validate() const;
};

// Point-estimate regressor: layer stack plus the input normalization and
// label scaling baked in at training time. forward() takes raw features
// and returns angles in degrees; inference is deterministic (dropout off,
// batch norm uses running statistics).
struct MlpModel {
    std::vector<DenseLayer> layers;
    NormStats input_stats;
    double label_scale = 90.0;

    int input_dim() const { return layers.empty() ? 0 : layers.front().fan_in; }
    int output_dim() const { return layers.empty() ? 0 : layers.back().fan_out; }

    std::vector<double> forward(const FeatureVector &raw_features) const;
};

struct TrainHistory {
    std::vector<double> train_loss; // per-epoch mean MSE over training batches
    std::vector<double> val_loss;   // per-epoch MSE on the validation split
    int best_epoch = -1;            // 0-based index of the restored epoch
    int stopped_epoch = -1;         // 0-based index of the last epoch run
};

// Minimize MSE + l2*||W||^2 with Adam. Dropout (inverted scaling) and
// batch norm are active on hidden layers during training only; early
// stopping watches the validation split and restores the best epoch.
MlpModel train(const Dataset &dataset, const TrainConfig &config,
               TrainHistory *history = nullptr);

struct KFoldResult {
    MlpModel averaged;
    std::vector<MlpModel> folds;
};

// K-fold training with a shared initialization across folds; the averaged
// model takes the arithmetic mean of all fold weights and batch-norm
// running statistics.
KFoldResult kfold_train(const Dataset &dataset, const TrainConfig &config, int k);

// Backprop vs central finite differences (h = 1e-5) over every trainable
// parameter, on the training-mode loss with dropout disabled. Returns the
// maximum deviation |g_bp - g_fd| / max(1, |g_bp| + |g_fd|).
double gradient_check(const MlpModel &model, const std::vector<FeatureVector> &raw_features,
                      const std::vector<std::vector<double>> &targets_deg, double l2_coeff = 0.0);

// Training-mode loss (batch-norm batch statistics, no dropout):
// mean squared error in scaled label space plus l2*sum(W^2) over dense
// weight matrices.
double training_loss(const MlpModel &model, const std::vector<FeatureVector> &raw_features,
                     const std::vector<std::vector<double>> &targets_deg, double l2_coeff);

// --- building blocks reused by the trainer and exercised directly in tests

// Inverted-scaling dropout mask: each entry is 0 with probability `rate`,
// otherwise 1/(1-rate).
std::vector<double> dropout_mask(std::mt19937_64 &rng, std::size_t n, double rate);

struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
};

// One Adam update (bias-corrected, epsilon outside the square root);
// t is the 1-based step counter.
void adam_step(std::vector<double> &param, const std::vector<double> &grad, AdamState &state,
               int t, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

struct BatchNormCache {
    std::vector<double> xhat; // batch x dim
    std::vector<double> mean; // dim
    std::vector<double> var;  // dim (biased)
};

// Training-mode batch norm: per-feature standardization by batch mean and
// biased batch variance (guarded by kBatchNormEps), then gamma/beta.
void batch_norm_train_forward(const std::vector<double> &z, int batch, int dim,
                              const std::vector<double> &gamma, const std::vector<double> &beta,
                              std::vector<double> &out, BatchNormCache &cache);

// --- model files (JSON, exact double round-trip)

nlohmann::json mlp_to_json(const MlpModel &model);
MlpModel mlp_from_json(const nlohmann::json &j);

void save_mlp(const MlpModel &model, const std::string &path);
MlpModel load_mlp(const std::string &path);

} // namespace aoa
