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

#include "percabs/dataset.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "percabs/error.hpp"

namespace percabs {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) {
    while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.pop_back();
    while (!field.empty() && field.front() == ' ') field.erase(field.begin());
    out.push_back(field);
  }
  return out;
}

double parse_double(const std::string& s, std::size_t line_no) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    fail(ErrorCode::Io, "dataset line " + std::to_string(line_no) + ": cannot parse '" + s + "'");
  }
  return v;
}

}  // namespace

void PerceptionDataset::add(std::vector<double> point, bool detected) {
  if (point.size() != dim) fail(ErrorCode::DimensionMismatch, "dataset point has the wrong dimension");
  x.push_back(std::move(point));
  z.push_back(detected ? 1 : 0);
}

std::size_t PerceptionDataset::positives() const {
  std::size_t k = 0;
  for (auto v : z) k += v;
  return k;
}

PerceptionDataset read_dataset_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::Io, "dataset is empty (missing header)");
  const auto header = split_fields(line);
  if (header.size() < 2 || header.back() != "z") fail(ErrorCode::Io, "dataset header must be x1,...,xn,z");
  for (std::size_t i = 0; i + 1 < header.size(); ++i) {
    if (header[i] != "x" + std::to_string(i + 1)) fail(ErrorCode::Io, "dataset header must be x1,...,xn,z");
  }
  PerceptionDataset data;
  data.dim = header.size() - 1;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_fields(line);
    if (fields.size() != header.size()) {
      fail(ErrorCode::Io, "dataset line " + std::to_string(line_no) + " has " + std::to_string(fields.size()) +
                              " fields, expected " + std::to_string(header.size()));
    }
    std::vector<double> point(data.dim);
    for (std::size_t i = 0; i < data.dim; ++i) point[i] = parse_double(fields[i], line_no);
    const auto& zf = fields.back();
    if (zf != "0" && zf != "1") fail(ErrorCode::Io, "dataset line " + std::to_string(line_no) + ": z must be 0 or 1");
    data.add(std::move(point), zf == "1");
  }
  return data;
}

PerceptionDataset read_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open dataset " + path);
  return read_dataset_csv(in);
}

void write_dataset_csv(std::ostream& out, const PerceptionDataset& data) {
  for (std::size_t i = 0; i < data.dim; ++i) out << 'x' << i + 1 << ',';
  out << "z\n";
  char buf[64];
  for (std::size_t r = 0; r < data.size(); ++r) {
    for (double v : data.x[r]) {
      auto res = std::to_chars(buf, buf + sizeof buf, v);
      out.write(buf, res.ptr - buf);
      out << ',';
    }
    out << static_cast<int>(data.z[r]) << '\n';
  }
}

void write_dataset_csv(const std::string& path, const PerceptionDataset& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot write dataset " + path);
  write_dataset_csv(out, data);
  if (!out) fail(ErrorCode::Io, "write failed for " + path);
}

}  // namespace percabs
