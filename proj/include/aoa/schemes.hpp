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

#include <string>
#include <vector>

#include <json.hpp>

#include "aoa/neural.hpp"

namespace aoa {

// How a K-angle estimate is composed from point models:
//   joint    - one model with K outputs
//   parallel - K independent single-output models, model i learns the
//              i-th smallest angle
//   serial   - K single-output stages; stage i additionally consumes the
//              angles of stages 0..i-1 (true labels while training,
//              predictions at inference)
enum class SchemeKind { joint, parallel, serial };

const char *to_string(SchemeKind k);
SchemeKind scheme_kind_from_string(const std::string &s);

struct SchemeSpec {
    SchemeKind kind = SchemeKind::joint;
    int num_angles = 2;
    TrainConfig stage_config;
};

struct Scheme {
    SchemeKind kind = SchemeKind::joint;
    int num_angles = 0;
    std::vector<MlpModel> stages; // joint: 1 entry; parallel/serial: K entries

    // Predicted angles in degrees, sorted ascending. When `trace` is given
    // it receives the raw input vector fed to each stage.
    std::vector<double> predict(const FeatureVector &raw_features,
                                std::vector<FeatureVector> *trace = nullptr) const;
};

Scheme train_scheme(const Dataset &dataset, const SchemeSpec &spec);

nlohmann::json scheme_to_json(const Scheme &scheme);
Scheme scheme_from_json(const nlohmann::json &j);
void save_scheme(const Scheme &scheme, const std::string &path);
Scheme load_scheme(const std::string &path);

} // namespace aoa
