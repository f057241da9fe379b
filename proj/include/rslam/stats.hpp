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

#ifndef RSLAM_STATS_HPP_
#define RSLAM_STATS_HPP_

#include <Eigen/Core>

namespace rslam {

/// 3x3 covariance over (x, y, theta). Must be symmetric positive-definite.
using Covariance3 = Eigen::Matrix3d;

/// Checks symmetry (to 1e-12) and positive-definiteness (via Cholesky).
bool is_valid_covariance(const Covariance3& cov);

/// sqrt(r^T cov^-1 r). The theta component of r is wrapped to (-pi, pi]
/// before evaluation. Throws std::invalid_argument if cov is not
/// symmetric positive-definite.
double mahalanobis(const Eigen::Vector3d& residual, const Covariance3& cov);

/// Squared form, the quantity compared against chi-squared quantiles.
double mahalanobis_squared(const Eigen::Vector3d& residual, const Covariance3& cov);

/// CDF of the chi-squared distribution with dof degrees of freedom.
double chi2_cdf(double x, int dof);

/// The (1 - epsilon) quantile of the chi-squared distribution with dof
/// degrees of freedom: larger epsilon -> smaller (stricter) threshold.
/// Throws std::invalid_argument unless 0 < epsilon < 1 and dof >= 1.
double chi2_quantile(double epsilon, int dof);

}  // namespace rslam

#endif  // RSLAM_STATS_HPP_
