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

#ifndef RSLAM_POSE2_HPP_
#define RSLAM_POSE2_HPP_

#include <Eigen/Core>

#include <cmath>

namespace rslam {

/// Wraps an angle to the half-open interval (-pi, pi].
template <typename Scalar>
Scalar wrap_angle(Scalar theta) {
  const Scalar two_pi = Scalar(2) * Scalar(EIGEN_PI);
  Scalar t = std::remainder(theta, two_pi);
  if (t <= -Scalar(EIGEN_PI)) t += two_pi;
  return t;
}

/// An SE(2) element: planar translation plus heading, with the heading kept
/// in (-pi, pi] by every constructor and operation.
template <typename Scalar>
struct Pose2 {
  Scalar x = Scalar(0);
  Scalar y = Scalar(0);
  Scalar theta = Scalar(0);

  Pose2() = default;
  Pose2(Scalar x_, Scalar y_, Scalar theta_) : x(x_), y(y_), theta(wrap_angle(theta_)) {}

  static Pose2 identity() { return Pose2(); }

  Eigen::Matrix<Scalar, 2, 1> translation() const { return {x, y}; }

  Eigen::Matrix<Scalar, 2, 2> rotation() const {
    const Scalar c = std::cos(theta), s = std::sin(theta);
    Eigen::Matrix<Scalar, 2, 2> r;
    r << c, -s, s, c;
    return r;
  }

  /// (x, y, theta) as a dense vector, e.g. for residual algebra.
  Eigen::Matrix<Scalar, 3, 1> vector() const { return {x, y, theta}; }
};

/// Group composition a (+) b: b expressed after motion a.
template <typename Scalar>
Pose2<Scalar> compose(const Pose2<Scalar>& a, const Pose2<Scalar>& b) {
  const Scalar c = std::cos(a.theta), s = std::sin(a.theta);
  return Pose2<Scalar>(a.x + c * b.x - s * b.y, a.y + s * b.x + c * b.y,
                       wrap_angle(a.theta + b.theta));
}

template <typename Scalar>
Pose2<Scalar> inverse(const Pose2<Scalar>& a) {
  const Scalar c = std::cos(a.theta), s = std::sin(a.theta);
  return Pose2<Scalar>(-(c * a.x + s * a.y), -(-s * a.x + c * a.y), wrap_angle(-a.theta));
}

/// Relative pose from a to b: inverse(a) (+) b, so compose(a, between(a, b)) == b.
template <typename Scalar>
Pose2<Scalar> between(const Pose2<Scalar>& a, const Pose2<Scalar>& b) {
  return compose(inverse(a), b);
}

using Pose2d = Pose2<double>;

}  // namespace rslam

#endif  // RSLAM_POSE2_HPP_
