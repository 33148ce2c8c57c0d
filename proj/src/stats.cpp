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

#include "percabs/stats.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "percabs/error.hpp"

namespace percabs::stats {

namespace {

double log_beta(double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); }

// Lentz evaluation of the continued fraction for I_x(a, b).
double beta_continued_fraction(double x, double a, double b) {
  constexpr double tiny = 1e-300;
  constexpr double eps = 1e-16;
  double c = 1.0;
  double d = 1.0 - (a + b) * x / (a + 1.0);
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 100000; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((a + m2 - 1.0) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (a + b + m) * x / ((a + m2) * (a + m2 + 1.0));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < eps) return h;
  }
  fail(ErrorCode::NonConvergence, "incomplete beta continued fraction did not converge");
}

double beta_log_density(double x, double a, double b) {
  return (a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x) - log_beta(a, b);
}

void check_shape(double a, double b) {
  if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b)) {
    fail(ErrorCode::Domain, "beta shape parameters must be positive and finite");
  }
}

}  // namespace

double beta_cdf(double x, double a, double b) {
  check_shape(a, b);
  if (!(x >= 0.0 && x <= 1.0)) fail(ErrorCode::Domain, "beta_cdf argument outside [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double front = std::exp(a * std::log(x) + b * std::log1p(-x) - log_beta(a, b));
  if (x < a / (a + b)) return front * beta_continued_fraction(x, a, b) / a;
  return 1.0 - front * beta_continued_fraction(1.0 - x, b, a) / b;
}

double beta_quantile(double p, double a, double b) {
  check_shape(a, b);
  if (!(p >= 0.0 && p <= 1.0)) fail(ErrorCode::Domain, "beta_quantile probability outside [0, 1]");
  if (p == 0.0) return 0.0;
  if (p == 1.0) return 1.0;

  // Safeguarded Newton: the bracket always shrinks, Newton only accelerates.
  double lo = 0.0;
  double hi = 1.0;
  double x = std::clamp(a / (a + b), 1e-12, 1.0 - 1e-12);
  for (int it = 0; it < 400; ++it) {
    const double f = beta_cdf(x, a, b) - p;
    if (f == 0.0) return x;
    if (f < 0.0) {
      lo = x;
    } else {
      hi = x;
    }
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(hi, 1e-300)) break;
    double next = x - f / std::exp(beta_log_density(x, a, b));
    if (!(next > lo && next < hi) || !std::isfinite(next)) next = 0.5 * (lo + hi);
    if (next == x) break;
    x = next;
  }
  return x;
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) fail(ErrorCode::Domain, "normal_quantile probability outside (0, 1)");
  // Acklam's rational approximation, then Halley steps against erfc.
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                 1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                 6.680131188771972e+01,  -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                 -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                 3.754408661907416e+00};
  double x;
  if (p < 0.02425) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p > 1.0 - 0.02425) {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  }
  for (int i = 0; i < 2; ++i) {
    const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
    const double u = e * std::sqrt(2.0 * M_PI) * std::exp(x * x / 2.0);
    x = x - u / (1.0 + x * u / 2.0);
  }
  return x;
}

ConfidenceInterval clopper_pearson(BinomialSample s, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) fail(ErrorCode::Domain, "alpha must lie in (0, 1)");
  if (s.n == 0 || s.k > s.n) fail(ErrorCode::Domain, "binomial sample needs n > 0 and k <= n");
  const double k = static_cast<double>(s.k);
  const double n = static_cast<double>(s.n);
  ConfidenceInterval ci;
  ci.level = 1.0 - alpha;
  ci.lo = s.k == 0 ? 0.0 : beta_quantile(alpha / 2.0, k, n - k + 1.0);
  ci.hi = s.k == s.n ? 1.0 : beta_quantile(1.0 - alpha / 2.0, k + 1.0, n - k);
  return ci;
}

bool Box::contains(const std::vector<double>& x) const {
  if (x.size() != lower.size()) return false;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] < lower[i] || x[i] > upper[i]) return false;
  }
  return true;
}

double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

double LogisticModel::score(const std::vector<double>& x) const {
  if (x.size() != weights.size()) fail(ErrorCode::DimensionMismatch, "point and model dimensions differ");
  double t = intercept;
  for (std::size_t i = 0; i < x.size(); ++i) t += weights[i] * x[i];
  return t;
}

double LogisticModel::predict(const std::vector<double>& x) const { return sigmoid(score(x)); }

double LogisticModel::score_se(const std::vector<double>& x) const {
  const std::size_t p = weights.size() + 1;
  if (covariance.size() != p * p) fail(ErrorCode::Domain, "model carries no covariance");
  std::vector<double> g(x);
  g.push_back(1.0);
  double v = 0.0;
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = 0; j < p; ++j) v += g[i] * covariance[i * p + j] * g[j];
  }
  return std::sqrt(std::max(v, 0.0));
}

LogisticModel fit_logistic(const PerceptionDataset& data) {
  const std::size_t n = data.size();
  const std::size_t d = data.dim;
  if (n < 2) fail(ErrorCode::DegenerateData, "logistic fit needs at least two points");
  const std::size_t k = data.positives();
  if (k == 0 || k == n) fail(ErrorCode::DegenerateData, "logistic fit needs both labels present");

  Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd sd = Eigen::VectorXd::Zero(d);
  for (const auto& x : data.x) {
    for (std::size_t j = 0; j < d; ++j) mean[j] += x[j];
  }
  mean /= static_cast<double>(n);
  for (const auto& x : data.x) {
    for (std::size_t j = 0; j < d; ++j) sd[j] += (x[j] - mean[j]) * (x[j] - mean[j]);
  }
  for (std::size_t j = 0; j < d; ++j) {
    sd[j] = std::sqrt(sd[j] / static_cast<double>(n));
    if (!(sd[j] > 0.0)) sd[j] = 1.0;
  }

  // Design matrix in standardized units, intercept column last.
  const std::size_t p = d + 1;
  Eigen::MatrixXd X(n, p);
  Eigen::VectorXd y(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) X(i, j) = (data.x[i][j] - mean[j]) / sd[j];
    X(i, d) = 1.0;
    y[i] = data.z[i];
  }

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(p);
  const double rate = static_cast<double>(k) / static_cast<double>(n);
  theta[d] = std::log(rate / (1.0 - rate));
  Eigen::MatrixXd info(p, p);
  LogisticModel out;
  out.converged = false;
  for (std::uint32_t it = 1; it <= 100; ++it) {
    const Eigen::VectorXd eta = X * theta;
    Eigen::VectorXd mu(n);
    Eigen::VectorXd w(n);
    for (std::size_t i = 0; i < n; ++i) {
      mu[i] = sigmoid(eta[i]);
      w[i] = mu[i] * (1.0 - mu[i]);
    }
    info = X.transpose() * w.asDiagonal() * X;
    info.diagonal().array() += kRidge;
    const Eigen::VectorXd grad = X.transpose() * (y - mu) - kRidge * theta;
    Eigen::LDLT<Eigen::MatrixXd> solver(info);
    if (solver.info() != Eigen::Success || !solver.isPositive()) {
      fail(ErrorCode::SingularInformation, "observed information is not positive definite");
    }
    const Eigen::VectorXd step = solver.solve(grad);
    theta += step;
    out.iterations = it;
    if (!step.allFinite()) fail(ErrorCode::SingularInformation, "IRLS step is not finite");
    if (step.cwiseAbs().maxCoeff() < 1e-10) {
      out.converged = true;
      break;
    }
  }

  // Final information at the returned parameters.
  {
    const Eigen::VectorXd eta = X * theta;
    Eigen::VectorXd w(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double m = sigmoid(eta[i]);
      w[i] = m * (1.0 - m);
    }
    info = X.transpose() * w.asDiagonal() * X;
    info.diagonal().array() += kRidge;
  }
  Eigen::LDLT<Eigen::MatrixXd> solver(info);
  if (solver.info() != Eigen::Success || !solver.isPositive()) {
    fail(ErrorCode::SingularInformation, "observed information is not positive definite");
  }
  const Eigen::MatrixXd cov_std = solver.solve(Eigen::MatrixXd::Identity(p, p));

  // theta_raw = A * theta_std.
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(p, p);
  for (std::size_t j = 0; j < d; ++j) {
    A(j, j) = 1.0 / sd[j];
    A(d, j) = -mean[j] / sd[j];
  }
  A(d, d) = 1.0;
  const Eigen::VectorXd raw = A * theta;
  const Eigen::MatrixXd cov = A * cov_std * A.transpose();

  out.weights.assign(raw.data(), raw.data() + d);
  out.intercept = raw[d];
  out.covariance.resize(p * p);
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = 0; j < p; ++j) out.covariance[i * p + j] = 0.5 * (cov(i, j) + cov(j, i));
  }
  return out;
}

double log_likelihood(const LogisticModel& m, const PerceptionDataset& data) {
  double ll = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double t = m.score(data.x[i]);
    // log sigmoid(t) = -log1p(exp(-t)), computed stably.
    const double log_p = t >= 0 ? -std::log1p(std::exp(-t)) : t - std::log1p(std::exp(t));
    const double log_q = log_p - t;
    ll += data.z[i] ? log_p : log_q;
  }
  return ll;
}

std::vector<double> log_likelihood_gradient(const LogisticModel& m, const PerceptionDataset& data) {
  std::vector<double> g(data.dim + 1, 0.0);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double r = data.z[i] - m.predict(data.x[i]);
    for (std::size_t j = 0; j < data.dim; ++j) g[j] += r * data.x[i][j];
    g[data.dim] += r;
  }
  return g;
}

std::pair<double, double> logistic_range_over_box(const LogisticModel& m, const Box& b) {
  if (b.lower.size() != m.weights.size() || b.upper.size() != m.weights.size()) {
    fail(ErrorCode::DimensionMismatch, "box and model dimensions differ");
  }
  double lo = m.intercept;
  double hi = m.intercept;
  for (std::size_t j = 0; j < m.weights.size(); ++j) {
    const double w = m.weights[j];
    lo += w * (w >= 0 ? b.lower[j] : b.upper[j]);
    hi += w * (w >= 0 ? b.upper[j] : b.lower[j]);
  }
  return {sigmoid(lo), sigmoid(hi)};
}

std::pair<double, double> logistic_band_over_box(const LogisticModel& m, const Box& b, double z) {
  const std::size_t d = m.weights.size();
  if (b.lower.size() != d || b.upper.size() != d) fail(ErrorCode::DimensionMismatch, "box and model dimensions differ");
  if (d > 20) fail(ErrorCode::DimensionUnsupported, "corner enumeration limited to 20 dimensions");
  // score - z*se is concave and score + z*se convex in x, so their extremes
  // over the box sit at corners.
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  std::vector<double> corner(d);
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << d); ++mask) {
    for (std::size_t j = 0; j < d; ++j) corner[j] = (mask >> j) & 1 ? b.upper[j] : b.lower[j];
    const double t = m.score(corner);
    const double se = m.score_se(corner);
    lo = std::min(lo, t - z * se);
    hi = std::max(hi, t + z * se);
  }
  return {sigmoid(lo), sigmoid(hi)};
}

}  // namespace percabs::stats
