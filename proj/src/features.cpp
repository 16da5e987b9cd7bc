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

#include "aoa/features.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <json.hpp>

#include "aoa/textio.hpp"

namespace aoa {

CxMatrix covariance(const CxMatrix &x) {
    if (x.rows() < 1 || x.cols() < 1)
        throw ShapeError("covariance: empty snapshot matrix");
    const int m = x.rows();
    const int len = x.cols();
    CxMatrix r(m, m);
    for (int i = 0; i < m; ++i) {
        for (int j = i; j < m; ++j) {
            cxd acc(0.0, 0.0);
            for (int t = 0; t < len; ++t)
                acc += x(i, t) * std::conj(x(j, t));
            acc /= static_cast<double>(len);
            if (i == j) {
                r(i, i) = cxd(acc.real(), 0.0);
            } else {
                r(i, j) = acc;
                r(j, i) = std::conj(acc);
            }
        }
    }
    return r;
}

CxMatrix covariance(const SnapshotMatrix &x) { return covariance(x.data); }

FeatureVector extract_features(const CxMatrix &r) {
    if (r.rows() != r.cols())
        throw ShapeError("extract_features: covariance matrix must be square");
    const int m = r.rows();
    const int ntri = m * (m + 1) / 2;
    FeatureVector v(2 * ntri);
    int k = 0;
    for (int i = 0; i < m; ++i) {
        for (int j = i; j < m; ++j) {
            v[k] = r(i, j).real();
            v[ntri + k] = r(i, j).imag();
            ++k;
        }
    }
    return v;
}

CxMatrix covariance_from_features(const FeatureVector &features, int num_antennas) {
    const int m = num_antennas;
    const int ntri = m * (m + 1) / 2;
    if (static_cast<int>(features.size()) != 2 * ntri)
        throw ShapeError("covariance_from_features: feature length does not match antenna count");
    CxMatrix r(m, m);
    int k = 0;
    for (int i = 0; i < m; ++i) {
        for (int j = i; j < m; ++j) {
            const cxd v(features[k], features[ntri + k]);
            if (i == j) {
                r(i, i) = cxd(v.real(), 0.0);
            } else {
                r(i, j) = v;
                r(j, i) = std::conj(v);
            }
            ++k;
        }
    }
    return r;
}

NormStats NormStats::fit(const std::vector<FeatureVector> &samples) {
    if (samples.empty())
        throw ConfigError("NormStats::fit: no samples");
    const std::size_t dim = samples.front().size();
    NormStats st;
    st.mean.assign(dim, 0.0);
    st.stddev.assign(dim, 0.0);
    for (const FeatureVector &s : samples) {
        if (s.size() != dim)
            throw ShapeError("NormStats::fit: inconsistent feature lengths");
        for (std::size_t k = 0; k < dim; ++k)
            st.mean[k] += s[k];
    }
    const double n = static_cast<double>(samples.size());
    for (std::size_t k = 0; k < dim; ++k)
        st.mean[k] /= n;
    for (const FeatureVector &s : samples)
        for (std::size_t k = 0; k < dim; ++k) {
            const double d = s[k] - st.mean[k];
            st.stddev[k] += d * d;
        }
    for (std::size_t k = 0; k < dim; ++k) {
        st.stddev[k] = std::sqrt(st.stddev[k] / n);
        if (st.stddev[k] < 1e-12)
            st.stddev[k] = 1.0;
    }
    return st;
}

FeatureVector NormStats::apply(const FeatureVector &features) const {
    if (features.size() != mean.size())
        throw ShapeError("normalize: feature length does not match statistics");
    FeatureVector out(features.size());
    for (std::size_t k = 0; k < features.size(); ++k) {
        const double sd = stddev[k] < 1e-12 ? 1.0 : stddev[k];
        out[k] = (features[k] - mean[k]) / sd;
    }
    return out;
}

void generate_sample(const ArrayConfig &config, int num_sources, double snr_db,
                     std::uint64_t seed, std::uint64_t index,
                     const SpacingPerturbation *perturbation, SignalKind signal_kind,
                     double source_power, FeatureVector &features_out,
                     std::vector<double> &labels_deg_out) {
    std::mt19937_64 rng(seed + index);
    std::uniform_real_distribution<double> uangle(-kPi / 2.0, kPi / 2.0);

    SourceScene scene;
    scene.source_power = source_power;
    scene.snr_db = snr_db;
    scene.signal_kind = signal_kind;
    scene.angles_rad.resize(num_sources);
    for (int k = 0; k < num_sources; ++k)
        scene.angles_rad[k] = uangle(rng);

    const std::uint64_t synth_seed = rng();
    SnapshotMatrix x = synthesize(config, scene, perturbation, synth_seed);
    features_out = extract_features(covariance(x));

    labels_deg_out.resize(num_sources);
    for (int k = 0; k < num_sources; ++k)
        labels_deg_out[k] = rad2deg(scene.angles_rad[k]);
    std::sort(labels_deg_out.begin(), labels_deg_out.end());
}

Dataset generate_dataset(const ArrayConfig &config, int num_samples, int num_sources,
                         double snr_db, std::uint64_t seed,
                         const SpacingPerturbation *perturbation, SignalKind signal_kind,
                         double source_power) {
    config.validate();
    if (num_samples < 1)
        throw ConfigError("num_samples must be >= 1");
    if (num_sources < 1 || num_sources >= config.num_antennas)
        throw ConfigError("num_sources must satisfy 1 <= K < num_antennas");

    Dataset ds;
    ds.meta.array = config;
    ds.meta.num_sources = num_sources;
    ds.meta.snr_db = snr_db;
    ds.meta.source_power = source_power;
    ds.meta.signal_kind = signal_kind;
    ds.meta.seed = seed;
    if (perturbation)
        ds.meta.perturbation_eps = perturbation->epsilon_m;

    ds.features.resize(num_samples);
    ds.labels_deg.resize(num_samples);
    for (int i = 0; i < num_samples; ++i)
        generate_sample(config, num_sources, snr_db, seed, static_cast<std::uint64_t>(i),
                        perturbation, signal_kind, source_power, ds.features[i], ds.labels_deg[i]);

    ds.stats = NormStats::fit(ds.features);
    return ds;
}

std::string dataset_sidecar_path(const std::string &csv_path) {
    const std::size_t dot = csv_path.find_last_of('.');
    const std::size_t slash = csv_path.find_last_of("/\\");
    if (dot == std::string::npos || (slash != std::string::npos && dot < slash))
        return csv_path + ".json";
    return csv_path.substr(0, dot) + ".json";
}

nlohmann::json array_config_to_json(const ArrayConfig &c) {
    return nlohmann::json{{"num_antennas", c.num_antennas},
                          {"element_spacing_m", c.element_spacing},
                          {"carrier_freq_hz", c.carrier_freq},
                          {"wavelength_m", c.wavelength},
                          {"snapshot_len", c.snapshot_len},
                          {"angle_convention", to_string(c.angle_convention)}};
}

ArrayConfig array_config_from_json(const nlohmann::json &j) {
    ArrayConfig c;
    c.num_antennas = j.at("num_antennas").get<int>();
    c.element_spacing = j.at("element_spacing_m").get<double>();
    c.carrier_freq = j.at("carrier_freq_hz").get<double>();
    c.wavelength = j.value("wavelength_m", 0.0);
    c.snapshot_len = j.at("snapshot_len").get<int>();
    c.angle_convention = angle_convention_from_string(j.value("angle_convention", "sin"));
    return c;
}

void save_dataset(const Dataset &ds, const std::string &csv_path) {
    if (ds.features.empty())
        throw ConfigError("save_dataset: empty dataset");
    const int d = ds.feature_dim();
    const int k = ds.label_dim();

    std::ostringstream csv;
    for (int i = 0; i < d; ++i)
        csv << 'f' << i << ',';
    for (int i = 0; i < k; ++i)
        csv << "theta" << i << (i + 1 < k ? "," : "");
    csv << '\n';
    for (std::size_t s = 0; s < ds.size(); ++s) {
        for (int i = 0; i < d; ++i)
            csv << format_double(ds.features[s][i]) << ',';
        for (int i = 0; i < k; ++i)
            csv << format_double(ds.labels_deg[s][i]) << (i + 1 < k ? "," : "");
        csv << '\n';
    }
    write_text_file(csv_path, csv.str());

    nlohmann::json side;
    side["format"] = "aoa-dataset";
    side["feature_layout_version"] = ds.meta.feature_layout_version;
    side["array"] = array_config_to_json(ds.meta.array);
    side["num_sources"] = ds.meta.num_sources;
    side["snr_db"] = std::isinf(ds.meta.snr_db) ? nlohmann::json("inf") : nlohmann::json(ds.meta.snr_db);
    side["source_power_w"] = ds.meta.source_power;
    side["signal_kind"] = to_string(ds.meta.signal_kind);
    side["seed"] = ds.meta.seed;
    side["perturbation_eps_m"] = ds.meta.perturbation_eps;
    side["normalization"] = {{"mean", ds.stats.mean}, {"std", ds.stats.stddev}};
    write_text_file(dataset_sidecar_path(csv_path), side.dump(2) + "\n");
}

Dataset load_dataset(const std::string &csv_path) {
    Dataset ds;

    nlohmann::json side;
    try {
        side = nlohmann::json::parse(read_text_file(dataset_sidecar_path(csv_path)));
    } catch (const nlohmann::json::exception &e) {
        throw ConfigError("bad dataset sidecar for '" + csv_path + "': " + e.what());
    }
    try {
        ds.meta.feature_layout_version = side.at("feature_layout_version").get<int>();
        ds.meta.array = array_config_from_json(side.at("array"));
        ds.meta.num_sources = side.at("num_sources").get<int>();
        if (side.at("snr_db").is_string())
            ds.meta.snr_db = parse_double(side.at("snr_db").get<std::string>());
        else
            ds.meta.snr_db = side.at("snr_db").get<double>();
        ds.meta.source_power = side.value("source_power_w", 1.0);
        ds.meta.signal_kind = signal_kind_from_string(side.value("signal_kind", "complex_gaussian"));
        ds.meta.seed = side.at("seed").get<std::uint64_t>();
        ds.meta.perturbation_eps = side.value("perturbation_eps_m", std::vector<double>{});
        ds.stats.mean = side.at("normalization").at("mean").get<std::vector<double>>();
        ds.stats.stddev = side.at("normalization").at("std").get<std::vector<double>>();
    } catch (const nlohmann::json::exception &e) {
        throw ConfigError("dataset sidecar missing fields: " + std::string(e.what()));
    }
    if (ds.meta.feature_layout_version != 1)
        throw ConfigError("unsupported feature layout version");

    const std::string text = read_text_file(csv_path);
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line))
        throw ConfigError("dataset CSV '" + csv_path + "' is empty");
    const std::vector<std::string> header = split_csv_line(line);
    int d = 0;
    int k = 0;
    for (const std::string &h : header) {
        if (h.rfind('f', 0) == 0)
            ++d;
        else if (h.rfind("theta", 0) == 0)
            ++k;
        else
            throw ConfigError("unexpected dataset CSV column '" + h + "'");
    }
    if (d <= 0 || k <= 0)
        throw ConfigError("dataset CSV needs f* and theta* columns");

    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        const std::vector<std::string> cells = split_csv_line(line);
        if (static_cast<int>(cells.size()) != d + k)
            throw ConfigError("dataset CSV row has wrong cell count");
        FeatureVector f(d);
        std::vector<double> lab(k);
        for (int i = 0; i < d; ++i)
            f[i] = parse_double(cells[i]);
        for (int i = 0; i < k; ++i)
            lab[i] = parse_double(cells[d + i]);
        ds.features.push_back(std::move(f));
        ds.labels_deg.push_back(std::move(lab));
    }
    if (ds.features.empty())
        throw ConfigError("dataset CSV has no samples");
    if (static_cast<int>(ds.stats.mean.size()) != d)
        throw ConfigError("normalization stats do not match feature dimension");
    return ds;
}

} // namespace aoa
