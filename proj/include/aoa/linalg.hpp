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

#include <complex>
#include <cstddef>
#include <vector>

#include "aoa/errors.hpp"

namespace aoa {

using cxd = std::complex<double>;

constexpr double kPi = 3.14159265358979323846;
constexpr double kSpeedOfLight = 299792458.0; // m/s

inline double deg2rad(double deg) { return deg * kPi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / kPi; }

// Dense row-major complex matrix. Sizes here stay tiny (antenna counts up
// to 16), so this is a plain storage class with no blocking or views.
class CxMatrix {
  public:
    CxMatrix() = default;
    CxMatrix(int rows, int cols)
        : rows_(rows), cols_(cols), a_(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols)) {}

    static CxMatrix identity(int n);

    int rows() const { return rows_; }
    int cols() const { return cols_; }

    cxd &operator()(int r, int c) { return a_[static_cast<std::size_t>(r) * cols_ + c]; }
    const cxd &operator()(int r, int c) const { return a_[static_cast<std::size_t>(r) * cols_ + c]; }

    std::vector<cxd> &storage() { return a_; }
    const std::vector<cxd> &storage() const { return a_; }

  private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<cxd> a_;
};

CxMatrix matmul(const CxMatrix &a, const CxMatrix &b);
CxMatrix adjoint(const CxMatrix &a);

// max_ij |a_ij|
double max_abs(const CxMatrix &a);

// max_ij |a_ij - conj(a_ji)|; zero for an exactly Hermitian matrix
double hermitian_defect(const CxMatrix &a);

double frobenius_norm(const CxMatrix &a);

} // namespace aoa
