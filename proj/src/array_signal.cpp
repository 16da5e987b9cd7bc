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

#include "aoa/array_signal.hpp"

#include <cmath>
#include <limits>
#include <random>

namespace aoa {

const char *to_string(AngleConvention c) {
    return c == AngleConvention::cos ? "cos" : "sin";
}

const char *to_string(SignalKind k) {
    return k == SignalKind::complex_gaussian ? "complex_gaussian" : "sinusoid";
}

AngleConvention angle_convention_from_string(const std::string &s) {
    if (s == "cos")
        return AngleConvention::cos;
    if (s == "sin")
        return AngleConvention::sin;
    throw ConfigError("unknown angle convention '" + s + "' (expected 'cos' or 'sin')");
}

SignalKind signal_kind_from_string(const std::string &s) {
    if (s == "complex_gaussian")
        return SignalKind::complex_gaussian;
    if (s == "sinusoid")
        return SignalKind::sinusoid;
    throw ConfigError("unknown signal kind '" + s + "'");
}

double ArrayConfig::effective_wavelength() const {
    if (wavelength > 0.0)
        return wavelength;
    return kSpeedOfLight / carrier_freq;
}

void ArrayConfig::validate() const {
    if (num_antennas < 2)
        throw ConfigError("num_antennas must be >= 2");
    if (!(element_spacing > 0.0))
        throw ConfigError("element_spacing must be > 0");
    if (snapshot_len < 1)
        throw ConfigError("snapshot_len must be >= 1");
    if (wavelength < 0.0)
        throw ConfigError("wavelength must be > 0 (or 0 to derive from carrier)");
    if (wavelength == 0.0 && !(carrier_freq > 0.0))
        throw ConfigError("carrier_freq must be > 0 when wavelength is derived");
}

void SourceScene::validate(const ArrayConfig &config) const {
    if (angles_rad.empty())
        throw ConfigError("scene needs at least one source");
    if (static_cast<int>(angles_rad.size()) >= config.num_antennas)
        throw ConfigError("number of sources must be smaller than number of antennas");
    for (double a : angles_rad)
        if (!(a >= -kPi / 2.0 && a <= kPi / 2.0))
            throw DomainError("source angle outside [-pi/2, pi/2]");
    if (!(source_power > 0.0))
        throw ConfigError("source_power must be > 0");
}

std::vector<double> SpacingPerturbation::positions(const ArrayConfig &config) const {
    if (static_cast<int>(epsilon_m.size()) != config.num_antennas)
        throw ShapeError("perturbation length does not match antenna count");
    std::vector<double> pos(epsilon_m.size());
    for (std::size_t m = 0; m < epsilon_m.size(); ++m)
        pos[m] = static_cast<double>(m) * config.element_spacing + epsilon_m[m];
    for (std::size_t m = 1; m < pos.size(); ++m)
        if (!(pos[m] > pos[m - 1]))
            throw ConfigError("perturbed element positions must stay strictly increasing");
    return pos;
}

std::vector<cxd> steering_vector(const ArrayConfig &config, double angle_rad,
                                 const std::vector<double> *positions) {
    config.validate();
    if (!(angle_rad >= -kPi / 2.0 && angle_rad <= kPi / 2.0))
        throw DomainError("steering angle outside [-pi/2, pi/2]");
    if (positions && static_cast<int>(positions->size()) != config.num_antennas)
        throw ShapeError("position list does not match antenna count");

    const double g = config.angle_convention == AngleConvention::cos ? std::cos(angle_rad)
                                                                     : std::sin(angle_rad);
    const double lambda = config.effective_wavelength();
    std::vector<cxd> a(config.num_antennas);
    for (int m = 0; m < config.num_antennas; ++m) {
        const double pos = positions ? (*positions)[m] : static_cast<double>(m) * config.element_spacing;
        a[m] = std::polar(1.0, 2.0 * kPi * pos * g / lambda);
    }
    return a;
}

namespace {

// Scale a source row to have empirical mean power exactly `power`.
void normalize_row_power(std::vector<cxd> &row, double power) {
    double p = 0.0;
    for (const cxd &v : row)
        p += std::norm(v);
    p /= static_cast<double>(row.size());
    if (p <= 0.0)
        return;
    const double scale = std::sqrt(power / p);
    for (cxd &v : row)
        v *= scale;
}

} // namespace

SnapshotMatrix synthesize(const ArrayConfig &config, const SourceScene &scene,
                          const SpacingPerturbation *perturbation, std::uint64_t seed) {
    config.validate();
    scene.validate(config);

    const int num_sources = static_cast<int>(scene.angles_rad.size());
    const int m = config.num_antennas;
    const int len = config.snapshot_len;

    std::vector<double> pos;
    const std::vector<double> *pos_ptr = nullptr;
    if (perturbation) {
        pos = perturbation->positions(config);
        pos_ptr = &pos;
    }

    // A stacks one steering vector per source.
    CxMatrix a(m, num_sources);
    for (int n = 0; n < num_sources; ++n) {
        std::vector<cxd> col = steering_vector(config, scene.angles_rad[n], pos_ptr);
        for (int r = 0; r < m; ++r)
            a(r, n) = col[r];
    }

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * kPi);

    // Source symbol matrix S, one row per source. Rows are drawn first so
    // the noise stream is independent of the source count only through
    // draw order, keeping results reproducible per seed.
    CxMatrix s(num_sources, len);
    for (int n = 0; n < num_sources; ++n) {
        std::vector<cxd> row(len);
        if (scene.signal_kind == SignalKind::complex_gaussian) {
            const double sigma = std::sqrt(0.5);
            for (int t = 0; t < len; ++t)
                row[t] = cxd(sigma * gauss(rng), sigma * gauss(rng));
        } else {
            // Carrier sampled at fs = 4*fc (quarter-period steps) with a
            // random initial phase per source. All sources share the
            // frequency, which makes them mutually correlated.
            const double phi = phase(rng);
            const double amp = std::sqrt(2.0);
            for (int t = 0; t < len; ++t)
                row[t] = cxd(amp * std::sin(kPi / 2.0 * static_cast<double>(t) + phi), 0.0);
        }
        normalize_row_power(row, scene.source_power);
        for (int t = 0; t < len; ++t)
            s(n, t) = row[t];
    }

    SnapshotMatrix out;
    out.config = config;
    out.scene = scene;
    out.data = CxMatrix(m, len);
    for (int r = 0; r < m; ++r)
        for (int n = 0; n < num_sources; ++n) {
            const cxd arn = a(r, n);
            for (int t = 0; t < len; ++t)
                out.data(r, t) += arn * s(n, t);
        }

    if (!std::isinf(scene.snr_db)) {
        const double noise_var = scene.source_power * std::pow(10.0, -scene.snr_db / 10.0);
        const double sigma = std::sqrt(noise_var / 2.0);
        for (int r = 0; r < m; ++r)
            for (int t = 0; t < len; ++t)
                out.data(r, t) += cxd(sigma * gauss(rng), sigma * gauss(rng));
    }
    return out;
}

} // namespace aoa
