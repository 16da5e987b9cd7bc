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

#include "aoa/music.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "aoa/features.hpp"
#include "aoa/textio.hpp"

namespace aoa {

namespace {

double offdiag_norm(const CxMatrix &a) {
    double s = 0.0;
    for (int p = 0; p < a.rows(); ++p)
        for (int q = p + 1; q < a.cols(); ++q)
            s += std::norm(a(p, q));
    return std::sqrt(2.0 * s);
}

} // namespace

EigenDecomposition eig_hermitian(const CxMatrix &input) {
    if (input.rows() != input.cols())
        throw ShapeError("eig_hermitian: matrix must be square");
    const int n = input.rows();
    const double scale = std::max(max_abs(input), 1.0);
    if (hermitian_defect(input) > 1e-10 * scale)
        throw DomainError("eig_hermitian: matrix is not Hermitian within 1e-10");

    // Symmetrize exactly so the sweep below preserves Hermitian structure.
    CxMatrix a(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j)
            a(i, j) = 0.5 * (input(i, j) + std::conj(input(j, i)));
        a(i, i) = cxd(a(i, i).real(), 0.0);
    }

    CxMatrix v = CxMatrix::identity(n);
    const double frob = std::max(frobenius_norm(a), std::numeric_limits<double>::min());
    const double tol = 1e-12 * frob;
    const int max_sweeps = 100;

    int sweep = 0;
    while (offdiag_norm(a) > tol) {
        if (++sweep > max_sweeps)
            throw NumericError("eig_hermitian: no convergence after max sweeps");
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const cxd g = a(p, q);
                const double gabs = std::abs(g);
                if (gabs == 0.0)
                    continue;
                const double app = a(p, p).real();
                const double aqq = a(q, q).real();

                // Phase that makes the pivot real, then a real Jacobi
                // rotation on the aligned 2x2 block.
                const cxd phase = g / gabs; // e^{i phi}
                const double theta = (aqq - app) / (2.0 * gabs);
                double t;
                if (std::abs(theta) > 1e150)
                    t = 0.5 / theta;
                else
                    t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                const cxd sp = s * std::conj(phase); // s * e^{-i phi}

                for (int k = 0; k < n; ++k) {
                    if (k == p || k == q)
                        continue;
                    const cxd akp = a(k, p);
                    const cxd akq = a(k, q);
                    a(k, p) = c * akp - sp * akq;
                    a(k, q) = s * akp + c * std::conj(phase) * akq;
                    a(p, k) = std::conj(a(k, p));
                    a(q, k) = std::conj(a(k, q));
                }
                a(p, p) = cxd(app - t * gabs, 0.0);
                a(q, q) = cxd(aqq + t * gabs, 0.0);
                a(p, q) = cxd(0.0, 0.0);
                a(q, p) = cxd(0.0, 0.0);

                for (int k = 0; k < n; ++k) {
                    const cxd vkp = v(k, p);
                    const cxd vkq = v(k, q);
                    v(k, p) = c * vkp - sp * vkq;
                    v(k, q) = s * vkp + c * std::conj(phase) * vkq;
                }
            }
        }
    }

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int i, int j) { return a(i, i).real() > a(j, j).real(); });

    EigenDecomposition out;
    out.eigenvalues.resize(n);
    out.eigenvectors = CxMatrix(n, n);
    for (int c = 0; c < n; ++c) {
        out.eigenvalues[c] = a(order[c], order[c]).real();
        for (int r = 0; r < n; ++r)
            out.eigenvectors(r, c) = v(r, order[c]);
    }
    return out;
}

SpectrumCurve pseudo_spectrum(const CxMatrix &r, int num_sources, const ArrayConfig &config,
                              double resolution_deg) {
    config.validate();
    const int m = config.num_antennas;
    if (r.rows() != m || r.cols() != m)
        throw ShapeError("pseudo_spectrum: covariance does not match antenna count");
    if (num_sources < 1 || num_sources >= m)
        throw ConfigError("pseudo_spectrum: need 1 <= num_sources < num_antennas");
    if (!(resolution_deg > 0.0))
        throw ConfigError("pseudo_spectrum: resolution must be > 0");

    const EigenDecomposition eig = eig_hermitian(r);
    const int noise_dim = m - num_sources;

    const int npts = static_cast<int>(std::lround(180.0 / resolution_deg)) + 1;
    SpectrumCurve curve;
    curve.grid_deg.resize(npts);
    curve.values.resize(npts);

    for (int i = 0; i < npts; ++i) {
        const double deg = -90.0 + resolution_deg * static_cast<double>(i);
        curve.grid_deg[i] = deg;
        const std::vector<cxd> a = steering_vector(config, deg2rad(std::clamp(deg, -90.0, 90.0)));
        // ||U_n^H a||^2 over the noise eigenvectors (columns K..M-1).
        double denom = 0.0;
        for (int c = num_sources; c < num_sources + noise_dim; ++c) {
            cxd dot(0.0, 0.0);
            for (int row = 0; row < m; ++row)
                dot += std::conj(eig.eigenvectors(row, c)) * a[row];
            denom += std::norm(dot);
        }
        curve.values[i] = 1.0 / std::max(denom, std::numeric_limits<double>::min());
    }
    return curve;
}

PeakPick pick_peaks(const SpectrumCurve &curve, int k) {
    if (curve.grid_deg.empty() || curve.values.empty())
        throw DomainError("pick_peaks: empty spectrum curve");
    if (curve.grid_deg.size() != curve.values.size())
        throw ShapeError("pick_peaks: grid/value length mismatch");
    if (k < 1)
        throw ConfigError("pick_peaks: k must be >= 1");

    const int n = static_cast<int>(curve.values.size());
    std::vector<int> maxima;
    for (int i = 1; i + 1 < n; ++i)
        if (curve.values[i] > curve.values[i - 1] && curve.values[i] > curve.values[i + 1])
            maxima.push_back(i);

    // Largest peaks first; equal values break toward the smaller angle.
    auto by_value = [&](int lhs, int rhs) {
        if (curve.values[lhs] != curve.values[rhs])
            return curve.values[lhs] > curve.values[rhs];
        return lhs < rhs;
    };
    std::sort(maxima.begin(), maxima.end(), by_value);

    PeakPick pick;
    std::vector<int> chosen;
    for (int i = 0; i < static_cast<int>(maxima.size()) && static_cast<int>(chosen.size()) < k; ++i)
        chosen.push_back(maxima[i]);

    if (static_cast<int>(chosen.size()) < k) {
        // Fewer local maxima than sources: peaks merged. Fill the missing
        // slots with the largest grid values not taken yet so callers
        // always receive k estimates, and flag the event.
        pick.merged = true;
        std::vector<bool> used(n, false);
        for (int idx : chosen)
            used[idx] = true;
        std::vector<int> rest;
        rest.reserve(n);
        for (int i = 0; i < n; ++i)
            if (!used[i])
                rest.push_back(i);
        std::sort(rest.begin(), rest.end(), by_value);
        for (int i = 0; static_cast<int>(chosen.size()) < k; ++i) {
            if (i >= static_cast<int>(rest.size()))
                throw ConfigError("pick_peaks: k exceeds grid size");
            chosen.push_back(rest[i]);
        }
    }

    std::sort(chosen.begin(), chosen.end());
    pick.angles_deg.reserve(chosen.size());
    for (int idx : chosen)
        pick.angles_deg.push_back(curve.grid_deg[idx]);
    return pick;
}

MusicEstimate music_from_covariance(const CxMatrix &r, int num_sources,
                                    const ArrayConfig &config, double resolution_deg) {
    const SpectrumCurve curve = pseudo_spectrum(r, num_sources, config, resolution_deg);
    const PeakPick pick = pick_peaks(curve, num_sources);
    return MusicEstimate{pick.angles_deg, pick.merged};
}

MusicEstimate music_estimate(const SnapshotMatrix &x, int num_sources, double resolution_deg) {
    if (num_sources >= x.config.num_antennas)
        throw ConfigError("music_estimate: need num_sources < num_antennas");
    return music_from_covariance(covariance(x), num_sources, x.config, resolution_deg);
}

void save_spectrum_csv(const SpectrumCurve &curve, const std::string &path) {
    std::ostringstream out;
    out << "angle_deg,p\n";
    for (std::size_t i = 0; i < curve.grid_deg.size(); ++i)
        out << format_double(curve.grid_deg[i]) << ',' << format_double(curve.values[i]) << '\n';
    write_text_file(path, out.str());
}

} // namespace aoa
