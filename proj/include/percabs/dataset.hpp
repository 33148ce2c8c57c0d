// Copyright 2026 The percabs Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace percabs {

/// Labeled perception observations: a state vector and a binary detection.
struct PerceptionDataset {
  std::size_t dim = 1;
  std::vector<std::vector<double>> x;
  std::vector<std::uint8_t> z;

  std::size_t size() const { return z.size(); }
  void add(std::vector<double> point, bool detected);
  std::size_t positives() const;
};

/// CSV with header `x1,...,xn,z`. Rows may come in any order.
PerceptionDataset read_dataset_csv(std::istream& in);
PerceptionDataset read_dataset_csv(const std::string& path);
void write_dataset_csv(std::ostream& out, const PerceptionDataset& data);
void write_dataset_csv(const std::string& path, const PerceptionDataset& data);

}  // namespace percabs
