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

#include "aoa/array_signal.hpp"
#include "aoa/linalg.hpp"

namespace aoa {

// Real feature vector of length M(M+1): real parts of the upper covariance
// triangle (row-major, diagonal included) followed by the imaginary parts.
using FeatureVector = std::vector<double>;

// Sample covariance (1/L) * X * X^H. Hermitian by construction: the lower
// triangle is the exact conjugate of the upper one and the diagonal is real.
CxMatrix covariance(const CxMatrix &x);
CxMatrix covariance(const SnapshotMatrix &x);

FeatureVector extract_features(const CxMatrix &r);

// Rebuild the Hermitian covariance matrix from a raw (un-normalized)
// feature vector. Exact inverse of extract_features.
CxMatrix covariance_from_features(const FeatureVector &features, int num_antennas);

// Per-feature z-score statistics. Uses the population standard deviation;
// features with std below 1e-12 get std = 1 so constant columns pass
// through unscaled.
struct NormStats {
    std::vector<double> mean;
    std::vector<double> stddev;

    static NormStats fit(const std::vector<FeatureVector> &samples);
    FeatureVector apply(const FeatureVector &features) const;
};

struct DatasetMeta {
    ArrayConfig array;
    int num_sources = 2;
    double snr_db = 20.0;
    double source_power = 1.0;
    SignalKind signal_kind = SignalKind::complex_gaussian;
    std::uint64_t seed = 0;
    std::vector<double> perturbation_eps; // empty = uniform spacing
    int feature_layout_version = 1;
};

// Labeled samples: raw covariance features plus source angles in degrees,
// sorted ascending per sample.
struct Dataset {
    std::vector<FeatureVector> features;
    std::vector<std::vector<double>> labels_deg;
    DatasetMeta meta;
    NormStats stats; // fit over all samples at generation time

    std::size_t size() const { return features.size(); }
    int feature_dim() const { return features.empty() ? 0 : static_cast<int>(features.front().size()); }
    int label_dim() const { return labels_deg.empty() ? 0 : static_cast<int>(labels_deg.front().size()); }
};

// Draw `num_samples` scenes with angles i.i.d. uniform on [-pi/2, pi/2]
// (continuous, no grid), synthesize snapshots and reduce them to features.
// Sample i uses seed+i for all of its randomness, so any parallel split
// over samples reproduces the serial result bit for bit.
Dataset generate_dataset(const ArrayConfig &config, int num_samples, int num_sources,
                         double snr_db, std::uint64_t seed,
                         const SpacingPerturbation *perturbation = nullptr,
                         SignalKind signal_kind = SignalKind::complex_gaussian,
                         double source_power = 1.0);

// Build the single sample with index `index` of the dataset that
// generate_dataset(seed, ...) would produce.
void generate_sample(const ArrayConfig &config, int num_sources, double snr_db,
                     std::uint64_t seed, std::uint64_t index,
                     const SpacingPerturbation *perturbation, SignalKind signal_kind,
                     double source_power, FeatureVector &features_out,
                     std::vector<double> &labels_deg_out);

// CSV with header f0,...,f{D-1},theta0,...,theta{K-1}; a JSON sidecar next
// to it (extension replaced by .json) carries config, seed and stats.
void save_dataset(const Dataset &ds, const std::string &csv_path);
Dataset load_dataset(const std::string &csv_path);

std::string dataset_sidecar_path(const std::string &csv_path);

nlohmann::json array_config_to_json(const ArrayConfig &c);
ArrayConfig array_config_from_json(const nlohmann::json &j);

} // namespace aoa
