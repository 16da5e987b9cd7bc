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
#include <string>
#include <vector>

#include <json.hpp>

#include "aoa/neural.hpp"

namespace aoa {

// Gaussian variational posterior per weight: std = softplus(rho), prior is
// the standard normal.
struct BnnVarLayer {
    int fan_in = 0;
    int fan_out = 0;
    Activation activation = Activation::relu;
    std::vector<double> mu_w;  // fan_in x fan_out, row-major by input
    std::vector<double> rho_w;
    std::vector<double> mu_b; // fan_out
    std::vector<double> rho_b;
};

struct BnnModel {
    std::vector<BnnVarLayer> layers;
    NormStats input_stats;
    double label_scale = 90.0;
    double sigma_lik = 0.1; // Gaussian likelihood noise in scaled label space

    int input_dim() const { return layers.empty() ? 0 : layers.front().fan_in; }
    int output_dim() const { return layers.empty() ? 0 : layers.back().fan_out; }

    // Deterministic forward at the posterior mean, angles in degrees.
    std::vector<double> forward_at_mean(const FeatureVector &raw_features) const;
};

double softplus(double x);

// Closed-form KL(q || N(0, I)) summed over all weights and biases:
// 0.5 * (mu^2 + sigma^2 - 1) - ln(sigma) per parameter.
double bnn_kl(const BnnModel &model);

// Bayes by backprop: maximize the ELBO with the reparameterization
// w = mu + softplus(rho) * xi via Adam, minibatch likelihood scaled by
// N/B against the full KL. Fixed epoch budget (config.bnn_epochs), no
// validation split and no early stopping.
BnnModel train_bnn(const Dataset &dataset, const TrainConfig &config, int mc_samples);

struct BnnPrediction {
    std::vector<double> mean_deg;
    std::vector<double> std_deg;
};

// Monte-Carlo posterior predictive over mc_samples weight draws;
// deterministic for a given seed.
BnnPrediction predict_bnn(const BnnModel &model, const FeatureVector &raw_features,
                          int mc_samples, std::uint64_t seed);

nlohmann::json bnn_to_json(const BnnModel &model);
BnnModel bnn_from_json(const nlohmann::json &j);
void save_bnn(const BnnModel &model, const std::string &path);
BnnModel load_bnn(const std::string &path);

} // namespace aoa
