// Copyright 2026 The liepf Authors
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

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>

/// \file
/// SO(3) and so(3) primitives: hat/vee, exponential and logarithm, nearest
/// rotation projection, quaternion conversion and averaging.

namespace liepf {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Unit quaternion stored as (w, x, y, z); q and -q are the same rotation.
using UnitQuaternion = Eigen::Quaterniond;

/// Tolerance used when checking group membership and skew symmetry.
inline constexpr double kGroupTolerance = 1e-9;

/// An element of SO(3), a 3x3 orthogonal matrix with unit determinant.
class Rotation {
 public:
  Rotation() : m_{Mat3::Identity()} {}

  /// Wraps `m` after checking orthogonality and determinant.
  static Rotation from_matrix(const Mat3& m) {
    if (!is_rotation(m)) {
      throw std::invalid_argument("Rotation: matrix is not special orthogonal");
    }
    return Rotation{m};
  }

  /// Wraps `m` without checks. Callers guarantee `m` is in SO(3).
  static Rotation from_matrix_unchecked(const Mat3& m) { return Rotation{m}; }

  static Rotation identity() { return Rotation{}; }

  static bool is_rotation(const Mat3& m, double tol = kGroupTolerance) {
    return orthogonality_error(m) <= tol && std::abs(m.determinant() - 1.0) <= tol;
  }

  /// Frobenius norm of m^T m - I.
  static double orthogonality_error(const Mat3& m) {
    return (m.transpose() * m - Mat3::Identity()).norm();
  }

  const Mat3& matrix() const { return m_; }
  double operator()(int r, int c) const { return m_(r, c); }

  Rotation inverse() const { return Rotation{m_.transpose()}; }

  Rotation operator*(const Rotation& other) const { return Rotation{m_ * other.m_}; }
  Vec3 operator*(const Vec3& v) const { return m_ * v; }

  bool operator==(const Rotation& other) const { return m_ == other.m_; }

 private:
  explicit Rotation(const Mat3& m) : m_{m} {}

  Mat3 m_;
};

/// Skew-symmetric matrix such that hat(v) * u = v x u.
inline Mat3 hat(const Vec3& v) {
  Mat3 s;
  // clang-format off
  s <<   0.0, -v.z(),  v.y(),
       v.z(),    0.0, -v.x(),
      -v.y(),  v.x(),    0.0;
  // clang-format on
  return s;
}

/// Inverse of hat. Rejects matrices whose symmetric part exceeds 1e-9.
inline Vec3 vee(const Mat3& m) {
  const double asym = (m + m.transpose()).cwiseAbs().maxCoeff();
  if (asym > kGroupTolerance) {
    throw std::invalid_argument("vee: matrix is not skew-symmetric");
  }
  return Vec3{m(2, 1), m(0, 2), m(1, 0)};
}

/// Rodrigues formula; second-order Taylor expansion below |v| = 1e-6.
inline Rotation exp_so3(const Vec3& v) {
  const double theta2 = v.squaredNorm();
  const double theta = std::sqrt(theta2);
  const Mat3 k = hat(v);
  double a;
  double b;
  if (theta < 1e-6) {
    a = 1.0 - theta2 / 6.0;
    b = 0.5 - theta2 / 24.0;
  } else {
    a = std::sin(theta) / theta;
    b = (1.0 - std::cos(theta)) / theta2;
  }
  return Rotation::from_matrix_unchecked(Mat3::Identity() + a * k + b * k * k);
}

enum class LogBranch {
  kSmallAngle,  ///< Taylor expansion of theta / sin(theta)
  kGeneric,     ///< theta / (2 sin(theta)) * vee(R - R^T)
  kNearPi,      ///< axis recovered from the symmetric part R + R^T
};

struct LogResult {
  Vec3 v;
  LogBranch branch;
};

/// Logarithm with a report of which numerical branch produced it.
inline LogResult log_so3_with_branch(const Rotation& rot) {
  const Mat3& r = rot.matrix();
  // 2 sin(theta) * axis
  const Vec3 w{r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1)};
  const double sin_theta = 0.5 * w.norm();
  const double cos_theta = std::clamp(0.5 * (r.trace() - 1.0), -1.0, 1.0);
  const double theta = std::atan2(sin_theta, cos_theta);

  if (theta < 1e-6) {
    // theta / sin(theta) = 1 + theta^2 / 6 + O(theta^4)
    return {0.5 * (1.0 + theta * theta / 6.0) * w, LogBranch::kSmallAngle};
  }
  if (std::numbers::pi - theta > 1e-6) {
    return {theta / (2.0 * sin_theta) * w, LogBranch::kGeneric};
  }

  // R + R^T = 2 cos(theta) I + 2 (1 - cos(theta)) a a^T
  const Mat3 aat =
      (r + r.transpose() - 2.0 * cos_theta * Mat3::Identity()) / (2.0 * (1.0 - cos_theta));
  Eigen::Index col = 0;
  aat.diagonal().maxCoeff(&col);
  Vec3 axis = aat.col(col) / std::sqrt(std::max(aat(col, col), 1e-300));
  axis.normalize();
  if (axis.dot(w) < 0.0) {
    axis = -axis;
  }
  return {theta * axis, LogBranch::kNearPi};
}

/// Logarithm returning a vector with norm in [0, pi].
inline Vec3 log_so3(const Rotation& r) { return log_so3_with_branch(r).v; }

/// Nearest rotation in Frobenius norm, via the polar factor of the SVD.
inline Rotation project_so3(const Mat3& m) {
  const double det = m.determinant();
  if (!(det > 0.0)) {
    throw std::invalid_argument("project_so3: determinant is not positive");
  }
  const Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec3& s = svd.singularValues();
  if (s(2) <= 1e-12 * s(0)) {
    throw std::invalid_argument("project_so3: matrix is singular");
  }
  const Mat3& u = svd.matrixU();
  const Mat3& v = svd.matrixV();
  Mat3 d = Mat3::Identity();
  d(2, 2) = (u * v.transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  return Rotation::from_matrix_unchecked(u * d * v.transpose());
}

inline UnitQuaternion canonical(UnitQuaternion q) {
  q.normalize();
  if (q.w() < 0.0) {
    q.coeffs() = -q.coeffs();
  }
  return q;
}

/// Quaternion of `r` with non-negative scalar part.
inline UnitQuaternion to_quaternion(const Rotation& r) {
  return canonical(UnitQuaternion{r.matrix()});
}

inline Rotation to_rotation(const UnitQuaternion& q) {
  return Rotation::from_matrix_unchecked(q.normalized().toRotationMatrix());
}

/// Weighted rotation average: the dominant eigenvector of sum_i w_i q_i q_i^T.
/// Invariant to the sign of every input quaternion.
inline UnitQuaternion weighted_quaternion_mean(std::span<const UnitQuaternion> qs,
                                               std::span<const double> ws) {
  if (qs.empty() || qs.size() != ws.size()) {
    throw std::invalid_argument("weighted_quaternion_mean: size mismatch or empty input");
  }
  Eigen::Matrix4d acc = Eigen::Matrix4d::Zero();
  double total = 0.0;
  for (std::size_t i = 0; i < qs.size(); ++i) {
    if (ws[i] < 0.0 || !std::isfinite(ws[i])) {
      throw std::invalid_argument("weighted_quaternion_mean: negative or non-finite weight");
    }
    if (ws[i] == 0.0) {
      continue;
    }
    const Eigen::Vector4d q{qs[i].w(), qs[i].x(), qs[i].y(), qs[i].z()};
    acc.noalias() += ws[i] * q * q.transpose();
    total += ws[i];
  }
  if (total <= 0.0) {
    throw std::invalid_argument("weighted_quaternion_mean: all weights are zero");
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> eig(acc);
  // eigenvalues are sorted in increasing order
  const Eigen::Vector4d top = eig.eigenvectors().col(3);
  return canonical(UnitQuaternion{top(0), top(1), top(2), top(3)});
}

/// Rotation angle between two attitudes in degrees, 2 acos(|w of q_bar^-1 q_star|).
inline double rotation_angle_error(const UnitQuaternion& q_bar, const UnitQuaternion& q_star) {
  const double w = (q_bar.conjugate() * q_star).w();
  const double c = std::min(1.0, std::abs(w));
  return 2.0 * std::acos(c) * 180.0 / std::numbers::pi;
}

}  // namespace liepf
