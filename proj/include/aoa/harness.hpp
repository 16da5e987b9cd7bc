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

#include "aoa/bnn.hpp"
#include "aoa/features.hpp"
#include "aoa/music.hpp"
#include "aoa/neural.hpp"
#include "aoa/schemes.hpp"

namespace aoa {

// Per-angle absolute errors in degrees under the assignment (over all K!
// permutations, K <= 4) that minimizes the total absolute error. Returned
// in the order of the true angles.
std::vector<double> matched_error(const std::vector<double> &true_deg,
                                  const std::vector<double> &predicted_deg);

struct EcdfPoint {
    double error;
    double cdf;
};

// Empirical CDF: F(x) = fraction of errors <= x, one point per distinct
// error value.
std::vector<EcdfPoint> ecdf(std::vector<double> errors);

struct ErrorReport {
    std::vector<std::vector<double>> per_sample_errors; // K entries per sample
    std::vector<bool> merged;                           // MUSIC merged flag per sample
    int merged_count = 0;
    double median_deg = 0.0;
    double mean_deg = 0.0;
    double p90_deg = 0.0;
    double rmse_deg = 0.0;
    std::vector<EcdfPoint> ecdf_points;
};

ErrorReport make_error_report(std::vector<std::vector<double>> per_sample_errors,
                              std::vector<bool> merged);

double median_of(std::vector<double> values);

// ---------------------------------------------------------------------------
// experiments
// ---------------------------------------------------------------------------

struct ExperimentConfig {
    std::uint64_t seed = 42;
    ArrayConfig array;
    int num_sources = 2;
    SignalKind signal_kind = SignalKind::complex_gaussian;
    double source_power = 1.0;

    int train_samples = 4000;
    double train_snr_db = 20.0;
    std::uint64_t train_seed = 0;

    int test_samples = 2000;
    std::vector<double> test_snr_db{20.0};
    std::uint64_t test_seed = 0;
    double max_separation_deg = 0.0; // >0 restricts scenes to close pairs

    bool perturb = false;
    double perturb_frac = 0.05; // epsilon ~ U(-frac, frac) * element spacing
    std::uint64_t perturb_seed = 0;
    std::vector<double> explicit_eps; // overrides the random draw when set

    std::vector<std::string> estimators{"music", "mlp"};
    double music_resolution_deg = 0.01;
    TrainConfig training;
    int bnn_train_mc = 1;
    int bnn_predict_mc = 100;
};

ExperimentConfig experiment_from_json(const nlohmann::json &j);
ExperimentConfig load_experiment_config(const std::string &path);

// A trained (or trainless, for MUSIC) angle estimator.
struct Estimator {
    enum class Type { music, mlp, bnn, scheme };
    Type type = Type::music;
    std::string name = "music";
    MlpModel mlp;
    BnnModel bnn;
    Scheme scheme;
};

// Known estimator names: music, mlp, rbf-mlp, bnn, scheme-joint,
// scheme-parallel, scheme-serial. Neural estimators train on `train_data`.
Estimator make_estimator(const std::string &name, const Dataset &train_data,
                         const ExperimentConfig &cfg);

// Predict the angles for sample i of a dataset. MUSIC rebuilds the
// covariance matrix from the raw features; merged_out reports its peak
// merge flag.
std::vector<double> estimator_predict(const Estimator &est, const Dataset &data, std::size_t i,
                                      const ExperimentConfig &cfg, bool *merged_out);

ErrorReport evaluate_estimator(const Estimator &est, const Dataset &test,
                               const ExperimentConfig &cfg,
                               std::vector<std::vector<double>> *predictions_out = nullptr);

// Sample draw identical to generate_dataset but with scenes rejected until
// max(angles) - min(angles) <= max_separation_deg (when > 0).
Dataset generate_dataset_restricted(const ArrayConfig &config, int num_samples, int num_sources,
                                    double snr_db, std::uint64_t seed,
                                    const SpacingPerturbation *perturbation, SignalKind kind,
                                    double source_power, double max_separation_deg);

// Spacing perturbation drawn once per experiment from its seed.
SpacingPerturbation draw_perturbation(const ArrayConfig &array, double magnitude_frac,
                                      std::uint64_t seed);

// Write errors.csv / scatter.csv / ecdf.csv / report.json for one
// estimator run into `dir`.
void write_report_files(const std::string &dir, const std::string &estimator_name,
                        double snr_db, const Dataset &test,
                        const std::vector<std::vector<double>> &predictions,
                        const ErrorReport &report, const nlohmann::json &extra_meta);

// Full experiment: generate data, train the configured estimators, test at
// every SNR in the list, and write per-run report directories plus a
// combined ecdf_all.csv and summary.json under out_dir. Byte-identical
// outputs for identical config + seed.
void run_experiment(const ExperimentConfig &cfg, const std::string &out_dir);

} // namespace aoa
