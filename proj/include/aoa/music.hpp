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

#include "aoa/array_signal.hpp"
#include "aoa/linalg.hpp"

namespace aoa {

// Eigenvalues sorted descending; eigenvector column i pairs with
// eigenvalue i. Columns are orthonormal.
struct EigenDecomposition {
    std::vector<double> eigenvalues;
    CxMatrix eigenvectors;
};

// Cyclic Jacobi eigensolver for complex Hermitian matrices. Each rotation
// phase-aligns the off-diagonal pivot and applies a real Jacobi rotation;
// sweeps continue until the off-diagonal Frobenius mass falls below 1e-12
// of the matrix norm. Input must be Hermitian within 1e-10.
EigenDecomposition eig_hermitian(const CxMatrix &a);

// MUSIC pseudo-spectrum sampled on a uniform degree grid.
struct SpectrumCurve {
    std::vector<double> grid_deg;
    std::vector<double> values;
};

// p(theta) = 1 / ||U_n^H a(theta)||^2 over [-90, 90] degrees, where U_n
// spans the M-K smallest eigenvectors of r.
SpectrumCurve pseudo_spectrum(const CxMatrix &r, int num_sources, const ArrayConfig &config,
                              double resolution_deg);

// Top-k strict interior local maxima, sorted ascending by angle. When the
// curve has fewer than k local maxima (peaks merged), the remaining slots
// are filled with the largest grid values not yet selected and `merged`
// is set.
struct PeakPick {
    std::vector<double> angles_deg;
    bool merged = false;
};

PeakPick pick_peaks(const SpectrumCurve &curve, int k);

struct MusicEstimate {
    std::vector<double> angles_deg;
    bool merged = false;
};

MusicEstimate music_from_covariance(const CxMatrix &r, int num_sources,
                                    const ArrayConfig &config, double resolution_deg);
MusicEstimate music_estimate(const SnapshotMatrix &x, int num_sources, double resolution_deg);

// Two-column CSV: angle_deg,p
void save_spectrum_csv(const SpectrumCurve &curve, const std::string &path);

} // namespace aoa
