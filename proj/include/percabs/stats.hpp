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

#include <cstdint>
#include <utility>
#include <vector>

#include "percabs/dataset.hpp"

namespace percabs::stats {

struct BinomialSample {
  std::uint64_t k = 0;
  std::uint64_t n = 0;
};

struct ConfidenceInterval {
  double lo = 0.0;
  double hi = 1.0;
  double level = 0.95;
};

/// Regularized incomplete beta I_x(a, b).
double beta_cdf(double x, double a, double b);

/// Inverse of beta_cdf in x.
double beta_quantile(double p, double a, double b);

/// Standard normal quantile.
double normal_quantile(double p);

/// Exact (Clopper-Pearson) two-sided interval at level 1 - alpha.
ConfidenceInterval clopper_pearson(BinomialSample s, double alpha);

/// Axis-aligned box in state units.
struct Box {
  std::vector<double> lower;
  std::vector<double> upper;

  std::size_t dim() const { return lower.size(); }
  bool contains(const std::vector<double>& x) const;
};

/// p(x) = 1 / (1 + exp(-(w.x + c))), in raw (unstandardized) units.
struct LogisticModel {
  std::vector<double> weights;
  double intercept = 0.0;
  /// Row-major (d+1) x (d+1) covariance of (weights..., intercept).
  std::vector<double> covariance;
  std::uint32_t iterations = 0;
  bool converged = true;

  double score(const std::vector<double>& x) const;
  double predict(const std::vector<double>& x) const;
  /// Standard error of the linear score at x.
  double score_se(const std::vector<double>& x) const;
};

inline constexpr double kRidge = 1e-8;

/// Maximum likelihood fit by IRLS on standardized inputs.
LogisticModel fit_logistic(const PerceptionDataset& data);

/// Log-likelihood of the data and its gradient with respect to
/// (weights..., intercept), both in raw units and without the ridge term.
double log_likelihood(const LogisticModel& m, const PerceptionDataset& data);
std::vector<double> log_likelihood_gradient(const LogisticModel& m, const PerceptionDataset& data);

/// Exact (min, max) of the fitted probability over the box.
std::pair<double, double> logistic_range_over_box(const LogisticModel& m, const Box& b);

/// Range of sigmoid(score -/+ z * se(score)) over the box. Both ends are
/// attained at box corners.
std::pair<double, double> logistic_band_over_box(const LogisticModel& m, const Box& b, double z);

double sigmoid(double t);

}  // namespace percabs::stats
