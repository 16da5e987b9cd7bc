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

#include "aoa/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace aoa {

CxMatrix CxMatrix::identity(int n) {
    CxMatrix m(n, n);
    for (int i = 0; i < n; ++i)
        m(i, i) = 1.0;
    return m;
}

CxMatrix matmul(const CxMatrix &a, const CxMatrix &b) {
    if (a.cols() != b.rows())
        throw ShapeError("matmul: inner dimensions differ");
    CxMatrix c(a.rows(), b.cols());
    for (int i = 0; i < a.rows(); ++i) {
        for (int k = 0; k < a.cols(); ++k) {
            const cxd aik = a(i, k);
            if (aik == cxd(0.0, 0.0))
                continue;
            for (int j = 0; j < b.cols(); ++j)
                c(i, j) += aik * b(k, j);
        }
    }
    return c;
}

CxMatrix adjoint(const CxMatrix &a) {
    CxMatrix t(a.cols(), a.rows());
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j)
            t(j, i) = std::conj(a(i, j));
    return t;
}

double max_abs(const CxMatrix &a) {
    double m = 0.0;
    for (const cxd &v : a.storage())
        m = std::max(m, std::abs(v));
    return m;
}

double hermitian_defect(const CxMatrix &a) {
    if (a.rows() != a.cols())
        throw ShapeError("hermitian_defect: matrix not square");
    double d = 0.0;
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j)
            d = std::max(d, std::abs(a(i, j) - std::conj(a(j, i))));
    return d;
}

double frobenius_norm(const CxMatrix &a) {
    double s = 0.0;
    for (const cxd &v : a.storage())
        s += std::norm(v);
    return std::sqrt(s);
}

} // namespace aoa
