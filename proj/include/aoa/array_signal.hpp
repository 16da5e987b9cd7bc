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
#include <optional>
#include <string>
#include <vector>

#include "aoa/linalg.hpp"

namespace aoa {

// Mapping g(theta) used in the per-element phase 2*pi*d*g(theta)/lambda.
// With `cos` the response is even in theta, so +theta and -theta alias;
// `sin` keeps angles in [-pi/2, pi/2] uniquely identifiable and is the
// default.
enum class AngleConvention { cos, sin };

enum class SignalKind { complex_gaussian, sinusoid };

const char *to_string(AngleConvention c);
const char *to_string(SignalKind k);
AngleConvention angle_convention_from_string(const std::string &s);
SignalKind signal_kind_from_string(const std::string &s);

// Physical scenario of the uniform linear array.
struct ArrayConfig {
    int num_antennas = 6;
    double element_spacing = 0.10; // meters
    double carrier_freq = 1.0e6;   // Hz
    double wavelength = 0.0;       // meters; 0 means derive c/carrier_freq
    int snapshot_len = 4000;
    AngleConvention angle_convention = AngleConvention::sin;

    double effective_wavelength() const;
    void validate() const; // throws ConfigError
};

// Source constellation: angles in radians, common per-source power, SNR of
// the additive receiver noise.
struct SourceScene {
    std::vector<double> angles_rad;
    double source_power = 1.0; // watts
    double snr_db = 20.0;      // +inf disables noise
    SignalKind signal_kind = SignalKind::complex_gaussian;

    void validate(const ArrayConfig &config) const;
};

// Per-element spacing bias epsilon_m; perturbed positions are
// d_m = m*d + epsilon_m (0-based m) and must stay strictly increasing.
struct SpacingPerturbation {
    std::vector<double> epsilon_m;

    std::vector<double> positions(const ArrayConfig &config) const;
};

// Complex received data, antennas by time samples, plus the provenance
// needed to interpret it later.
struct SnapshotMatrix {
    CxMatrix data;
    ArrayConfig config;
    SourceScene scene;
};

// Array response a(theta): element m equals exp(j*2*pi*tau*m) with
// tau = d*g(theta)/lambda. When explicit element positions are given the
// exponent uses the per-element position instead of m*d.
std::vector<cxd> steering_vector(const ArrayConfig &config, double angle_rad,
                                 const std::vector<double> *positions = nullptr);

// Synthesize X = A*S + N. Source symbols are scaled so each row of S has
// empirical mean power exactly source_power; noise is i.i.d. circular
// complex Gaussian with variance source_power * 10^(-snr_db/10) per
// antenna. Deterministic for a given seed.
SnapshotMatrix synthesize(const ArrayConfig &config, const SourceScene &scene,
                          const SpacingPerturbation *perturbation, std::uint64_t seed);

} // namespace aoa
