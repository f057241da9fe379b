// Copyright 2026 The ranging-slam Authors
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

#include "rslam/stats.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <limits>
#include <stdexcept>

#include "rslam/pose2.hpp"

namespace rslam {
namespace {

// Regularized lower incomplete gamma P(a, x), series expansion (x < a + 1).
double gamma_p_series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  double ap = a;
  for (int n = 0; n < 500; ++n) {
    ap += 1.0;
    term *= x / ap;
    sum += term;
    if (std::abs(term) < std::abs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Regularized upper incomplete gamma Q(a, x), Lentz continued fraction (x >= a + 1).
double gamma_q_cf(double a, double x) {
  const double tiny = std::numeric_limits<double>::min() / 1e-30;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 500; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

double gamma_p(double a, double x) {
  if (x <= 0.0) return 0.0;
  if (x < a + 1.0) return gamma_p_series(a, x);
  return 1.0 - gamma_q_cf(a, x);
}

}  // namespace

bool is_valid_covariance(const Covariance3& cov) {
  if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-12) return false;
  Eigen::LLT<Covariance3> llt(cov);
  return llt.info() == Eigen::Success;
}

double mahalanobis_squared(const Eigen::Vector3d& residual, const Covariance3& cov) {
  if (!is_valid_covariance(cov)) {
    throw std::invalid_argument("mahalanobis: covariance is not symmetric positive-definite");
  }
  Eigen::Vector3d r = residual;
  r(2) = wrap_angle(r(2));
  const Eigen::LLT<Covariance3> llt(cov);
  return r.dot(llt.solve(r));
}

double mahalanobis(const Eigen::Vector3d& residual, const Covariance3& cov) {
  return std::sqrt(mahalanobis_squared(residual, cov));
}

double chi2_cdf(double x, int dof) {
  if (dof < 1) throw std::invalid_argument("chi2_cdf: dof must be >= 1");
  if (x <= 0.0) return 0.0;
  return gamma_p(0.5 * dof, 0.5 * x);
}

double chi2_quantile(double epsilon, int dof) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw std::invalid_argument("chi2_quantile: significance level must lie in (0, 1)");
  }
  if (dof < 1) throw std::invalid_argument("chi2_quantile: dof must be >= 1");
  const double target = 1.0 - epsilon;
  double lo = 0.0;
  double hi = dof + 16.0;
  while (chi2_cdf(hi, dof) < target) hi *= 2.0;
  for (int i = 0; i < 200 && (hi - lo) > 1e-13 * (1.0 + hi); ++i) {
    const double mid = 0.5 * (lo + hi);
    (chi2_cdf(mid, dof) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace rslam
