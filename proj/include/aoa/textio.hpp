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

namespace aoa {

// Shortest decimal text that parses back to the identical double. All CSV
// output goes through this so repeated runs are byte-identical.
std::string format_double(double v);

double parse_double(const std::string &s);

std::vector<std::string> split_csv_line(const std::string &line);

void write_text_file(const std::string &path, const std::string &content);
std::string read_text_file(const std::string &path);

} // namespace aoa
