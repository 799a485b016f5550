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

#include "liepf/rng.hpp"
#include "liepf/so3.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <vector>

/// \file
/// Stochastic rigid-body attitude dynamics on SO(3) x R^3, its exponential /
/// Euler-Maruyama discretization, and the accelerometer + magnetometer +
/// gyro observation model.

namespace liepf {

using Vec6 = Eigen::Matrix<double, 6, 1>;
using Vec9 = Eigen::Matrix<double, 9, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

struct BodyState {
  Rotation g;
  Vec3 xi = Vec3::Zero();  ///< body-fixed angular velocity, rad/s
};

struct ModelParams {
  Vec3 inertia{1.0, 1.11, 1.3};  ///< diagonal of the inertia tensor
  Mat3 control = Mat3::Identity();
  double sigma = 1.0;
  double sigma_obs = 0.1;
  Vec3 r_g{0.0, 0.0, 1.0};
  Vec3 r_b{1.0 / std::sqrt(2.0), 0.0, 1.0 / std::sqrt(2.0)};
  double dt = 0.005;
  int steps = 200;

  void validate() const {
    if ((inertia.array() <= 0.0).any()) {
      throw std::invalid_argument("ModelParams: inertia entries must be positive");
    }
    if (std::abs(r_g.norm() - 1.0) > 1e-9 || std::abs(r_b.norm() - 1.0) > 1e-9) {
      throw std::invalid_argument("ModelParams: r_g and r_b must be unit vectors");
    }
    if (!(dt > 0.0)) {
      throw std::invalid_argument("ModelParams: dt must be positive");
    }
    if (steps < 1) {
      throw std::invalid_argument("ModelParams: steps must be at least 1");
    }
    if (sigma < 0.0 || sigma_obs < 0.0) {
      throw std::invalid_argument("ModelParams: sigma and sigma_obs must be nonnegative");
    }
  }

  /// M^-1 H sigma, the map from control/noise to angular acceleration.
  Mat3 input_gain() const { return inertia.cwiseInverse().asDiagonal() * control * sigma; }
};

/// Gaussian N(0, Sigma) on (xi_0, log g_0) in R^6.
class InitialDistribution {
 public:
  InitialDistribution() : InitialDistribution(0.01 * Mat6::Identity()) {}

  explicit InitialDistribution(const Mat6& covariance) : covariance_{covariance} {
    if ((covariance - covariance.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
      throw std::invalid_argument("InitialDistribution: covariance is not symmetric");
    }
    const Eigen::SelfAdjointEigenSolver<Mat6> eig(covariance);
    if (eig.eigenvalues().minCoeff() < -1e-12) {
      throw std::invalid_argument("InitialDistribution: covariance is not PSD");
    }
    sqrt_ = eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  }

  const Mat6& covariance() const { return covariance_; }

  /// Maps a standard normal draw to a sample of x ~ N(0, Sigma).
  Vec6 transform(const Vec6& z) const { return sqrt_ * z; }

 private:
  Mat6 covariance_;
  Mat6 sqrt_;
};

/// Observation increments Y_{i+1} - Y_i, one per step.
struct ObservationPath {
  std::vector<Vec9> increments;

  int size() const { return static_cast<int>(increments.size()); }
  const Vec9& operator[](int i) const { return increments[static_cast<std::size_t>(i)]; }
};

/// M^-1 (M xi x xi + H sigma u)
inline Vec3 drift(const Vec3& xi, const Vec3& u, const ModelParams& p) {
  const Vec3 m_xi = p.inertia.cwiseProduct(xi);
  return (m_xi.cross(xi) + p.control * (p.sigma * u)).cwiseQuotient(p.inertia);
}

/// One step of the discretized controlled dynamics:
///   g' = g exp(dt xi),  xi' = xi + drift(xi, u) dt + M^-1 H sigma sqrt(dt) eps.
/// The rotation is reprojected onto SO(3) every step.
inline BodyState step_state(const BodyState& s, const Vec3& u, const Vec3& eps,
                            const ModelParams& p) {
  BodyState next;
  next.g = project_so3(s.g.matrix() * exp_so3(p.dt * s.xi).matrix());
  next.xi = s.xi + drift(s.xi, u, p) * p.dt +
            (p.control * (p.sigma * std::sqrt(p.dt) * eps)).cwiseQuotient(p.inertia);
  return next;
}

/// h(g, xi) = (-g^T r_g, g^T r_b, xi).
inline Vec9 observe(const BodyState& s, const ModelParams& p) {
  Vec9 h;
  h.segment<3>(0) = -(s.g.matrix().transpose() * p.r_g);
  h.segment<3>(3) = s.g.matrix().transpose() * p.r_b;
  h.segment<3>(6) = s.xi;
  return h;
}

/// Draws x ~ N(0, Sigma) with six normals from `rng`; xi = x[0:3], g = exp(x[3:6]).
inline BodyState sample_initial(const InitialDistribution& d0, Rng& rng) {
  Vec6 z;
  for (int i = 0; i < 6; ++i) {
    z(i) = rng.normal();
  }
  const Vec6 x = d0.transform(z);
  return BodyState{exp_so3(x.segment<3>(3)), x.segment<3>(0)};
}

struct TruthRecord {
  std::vector<BodyState> states;  ///< N + 1 states
  ObservationPath observations;   ///< N increments
};

/// Simulates the uncontrolled system and its observations from the truth
/// substream of `seed`. Per step, nine observation normals are drawn before
/// the three process normals.
inline TruthRecord simulate_truth(const ModelParams& p, const InitialDistribution& d0,
                                  std::uint64_t seed) {
  p.validate();
  Rng rng{seed, stream::kTruth};
  TruthRecord out;
  out.states.reserve(static_cast<std::size_t>(p.steps) + 1);
  out.observations.increments.reserve(static_cast<std::size_t>(p.steps));
  out.states.push_back(sample_initial(d0, rng));
  const double obs_scale = p.sigma_obs * std::sqrt(p.dt);
  for (int i = 0; i < p.steps; ++i) {
    const BodyState& s = out.states.back();
    Vec9 delta;
    for (int r = 0; r < 9; ++r) {
      delta(r) = rng.normal();
    }
    out.observations.increments.push_back(observe(s, p) * p.dt + obs_scale * delta);
    const Vec3 eps = rng.normal3();
    out.states.push_back(step_state(s, Vec3::Zero(), eps, p));
  }
  return out;
}

}  // namespace liepf
