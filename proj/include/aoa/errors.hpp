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

#include <stdexcept>
#include <string>

namespace aoa {

// Invalid configuration, violated precondition or malformed input file.
// The CLI maps this (and its subclasses) to exit code 2.
class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Argument outside its mathematical domain (angle out of range, empty curve).
class DomainError : public ConfigError {
  public:
    using ConfigError::ConfigError;
};

// Vector or matrix dimension mismatch.
class ShapeError : public ConfigError {
  public:
    using ConfigError::ConfigError;
};

// Numeric failure at runtime (eigensolver non-convergence, NaN loss).
// The CLI maps this to exit code 3.
class NumericError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

} // namespace aoa
