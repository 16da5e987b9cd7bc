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

#include "aoa/schemes.hpp"

#include <algorithm>

#include "aoa/textio.hpp"

namespace aoa {

const char *to_string(SchemeKind k) {
    switch (k) {
    case SchemeKind::joint: return "joint";
    case SchemeKind::parallel: return "parallel";
    case SchemeKind::serial: return "serial";
    }
    return "?";
}

SchemeKind scheme_kind_from_string(const std::string &s) {
    if (s == "joint") return SchemeKind::joint;
    if (s == "parallel") return SchemeKind::parallel;
    if (s == "serial") return SchemeKind::serial;
    throw ConfigError("unknown scheme kind '" + s + "'");
}

namespace {

// Dataset view with a single label column.
Dataset single_label(const Dataset &ds, int column) {
    Dataset out;
    out.meta = ds.meta;
    out.features = ds.features;
    out.labels_deg.resize(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i)
        out.labels_deg[i] = {ds.labels_deg[i][column]};
    out.stats = ds.stats;
    return out;
}

// Stage i of the serial scheme consumes features ++ labels 0..i-1
// (teacher forcing: true upstream angles during training).
Dataset serial_stage_dataset(const Dataset &ds, int stage) {
    Dataset out;
    out.meta = ds.meta;
    out.features.resize(ds.size());
    out.labels_deg.resize(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        FeatureVector f = ds.features[i];
        for (int k = 0; k < stage; ++k)
            f.push_back(ds.labels_deg[i][k]);
        out.features[i] = std::move(f);
        out.labels_deg[i] = {ds.labels_deg[i][stage]};
    }
    out.stats = NormStats::fit(out.features);
    return out;
}

} // namespace

Scheme train_scheme(const Dataset &dataset, const SchemeSpec &spec) {
    spec.stage_config.validate();
    if (spec.num_angles < 1)
        throw ConfigError("train_scheme: num_angles must be >= 1");
    if (dataset.label_dim() != spec.num_angles)
        throw ConfigError("train_scheme: dataset label dimension does not match num_angles");

    Scheme scheme;
    scheme.kind = spec.kind;
    scheme.num_angles = spec.num_angles;

    switch (spec.kind) {
    case SchemeKind::joint:
        scheme.stages.push_back(train(dataset, spec.stage_config));
        break;
    case SchemeKind::parallel:
        for (int k = 0; k < spec.num_angles; ++k)
            scheme.stages.push_back(train(single_label(dataset, k), spec.stage_config));
        break;
    case SchemeKind::serial:
        for (int k = 0; k < spec.num_angles; ++k)
            scheme.stages.push_back(train(serial_stage_dataset(dataset, k), spec.stage_config));
        break;
    }
    return scheme;
}

std::vector<double> Scheme::predict(const FeatureVector &raw_features,
                                    std::vector<FeatureVector> *trace) const {
    if (stages.empty())
        throw ConfigError("scheme has no trained stages");
    if (trace)
        trace->clear();

    std::vector<double> angles;
    switch (kind) {
    case SchemeKind::joint: {
        if (trace)
            trace->push_back(raw_features);
        angles = stages.front().forward(raw_features);
        break;
    }
    case SchemeKind::parallel: {
        for (const MlpModel &stage : stages) {
            if (trace)
                trace->push_back(raw_features);
            angles.push_back(stage.forward(raw_features).front());
        }
        break;
    }
    case SchemeKind::serial: {
        // Later stages see the predictions of earlier ones, so inference is
        // exposed to its own upstream errors.
        FeatureVector input = raw_features;
        for (const MlpModel &stage : stages) {
            if (trace)
                trace->push_back(input);
            const double theta = stage.forward(input).front();
            angles.push_back(theta);
            input.push_back(theta);
        }
        break;
    }
    }
    std::sort(angles.begin(), angles.end());
    return angles;
}

nlohmann::json scheme_to_json(const Scheme &scheme) {
    nlohmann::json stages = nlohmann::json::array();
    for (const MlpModel &m : scheme.stages)
        stages.push_back(mlp_to_json(m));
    return nlohmann::json{{"format_version", 1},
                          {"type", "scheme"},
                          {"kind", to_string(scheme.kind)},
                          {"num_angles", scheme.num_angles},
                          {"stages", stages}};
}

Scheme scheme_from_json(const nlohmann::json &j) {
    if (j.value("type", "") != "scheme")
        throw ConfigError("model file is not a scheme bundle");
    Scheme scheme;
    scheme.kind = scheme_kind_from_string(j.at("kind").get<std::string>());
    scheme.num_angles = j.at("num_angles").get<int>();
    for (const nlohmann::json &sj : j.at("stages"))
        scheme.stages.push_back(mlp_from_json(sj));
    if (scheme.stages.empty())
        throw ConfigError("scheme bundle has no stages");
    return scheme;
}

void save_scheme(const Scheme &scheme, const std::string &path) {
    write_text_file(path, scheme_to_json(scheme).dump(2) + "\n");
}

Scheme load_scheme(const std::string &path) {
    try {
        return scheme_from_json(nlohmann::json::parse(read_text_file(path)));
    } catch (const nlohmann::json::exception &e) {
        throw ConfigError("bad scheme file '" + path + "': " + e.what());
    }
}

} // namespace aoa
