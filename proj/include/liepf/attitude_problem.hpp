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

#include "liepf/ilqr.hpp"
#include "liepf/model.hpp"

#include <stdexcept>

namespace liepf {

/// Local coordinates (eta, delta_xi) of a state about a reference:
/// g = g_ref exp(eta), xi = xi_ref + delta_xi.
using LocalCoords = Vec6;

inline BodyState retract(const BodyState& s, const LocalCoords& d) {
  return BodyState{project_so3(s.g.matrix() * exp_so3(d.head<3>()).matrix()),
                   s.xi + d.tail<3>()};
}

/// Inverse of retract. Throws std::domain_error when the relative rotation is
/// within 1e-6 rad of a half turn, where the chart is not injective.
inline LocalCoords local_error(const BodyState& s, const BodyState& ref) {
  const LogResult lg = log_so3_with_branch(ref.g.inverse() * s.g);
  if (lg.branch == LogBranch::kNearPi) {
    throw std::domain_error("local_error: relative rotation at pi");
  }
  LocalCoords d;
  d.head<3>() = lg.v;
  d.tail<3>() = s.xi - ref.xi;
  return d;
}

/// The deterministic dual control problem over the observation window
/// [begin, end). Stage cost at index i:
///   |u|^2 / 2 + |h_i|^2 / (2 sigma_B^2) - h_i^T dY_i / (sigma_B^2 dt).
/// dt times the summed stage cost equals the discrete path cost along a
/// noiseless trajectory.
class AttitudeProblem {
 public:
  using State = BodyState;
  static constexpr int kStateDim = 6;
  static constexpr int kControlDim = 3;

  AttitudeProblem(const ModelParams& params, const ObservationPath& obs, int begin, int end,
                  double fd_step = 1e-5)
      : params_{params}, obs_{&obs}, begin_{begin}, end_{end}, fd_step_{fd_step} {
    if (begin < 0 || end > obs.size() || begin >= end) {
      throw std::out_of_range("AttitudeProblem: window outside observations");
    }
    if (!(params.sigma_obs > 0.0)) {
      throw std::invalid_argument("AttitudeProblem: sigma_obs must be positive");
    }
  }

  int begin() const { return begin_; }
  int end() const { return end_; }
  const ModelParams& params() const { return params_; }

  State step(const State& s, const Vec3& u, int /*i*/) const {
    return step_state(s, u, Vec3::Zero(), params_);
  }
  State retract(const State& s, const LocalCoords& d) const { return liepf::retract(s, d); }
  LocalCoords local_error(const State& s, const State& ref) const {
    return liepf::local_error(s, ref);
  }

  double state_cost(int i, const State& s) const {
    const double inv_var = 1.0 / (params_.sigma_obs * params_.sigma_obs);
    const Vec9 h = observe(s, params_);
    return 0.5 * inv_var * h.squaredNorm() - inv_var * h.dot((*obs_)[i]) / params_.dt;
  }

  double stage_cost(int i, const State& s, const Vec3& u) const {
    return 0.5 * u.squaredNorm() + state_cost(i, s);
  }

  /// Central-difference gradient of the state cost and a Gauss-Newton Hessian
  /// J^T J / sigma_B^2 + 1e-6 I built from the observation Jacobian J.
  ilqr::StageQuadratic<6, 3> quadratize(int i, const State& s, const Vec3& u) const {
    const double h = fd_step_;
    ilqr::StageQuadratic<6, 3> q;
    Eigen::Matrix<double, 9, 6> jac;
    for (int j = 0; j < 6; ++j) {
      LocalCoords d = LocalCoords::Zero();
      d(j) = h;
      const State plus = retract(s, d);
      const State minus = retract(s, -d);
      jac.col(j) = (observe(plus, params_) - observe(minus, params_)) / (2.0 * h);
      q.lx(j) = (state_cost(i, plus) - state_cost(i, minus)) / (2.0 * h);
    }
    q.lxx = jac.transpose() * jac / (params_.sigma_obs * params_.sigma_obs);
    q.lxx.diagonal().array() += 1e-6;
    q.lu = u;
    q.luu = Mat3::Identity();
    return q;
  }

 private:
  ModelParams params_;
  const ObservationPath* obs_;
  int begin_;
  int end_;
  double fd_step_;
};

static_assert(ilqr::ControlProblem<AttitudeProblem>);

using ControlPolicy = ilqr::Policy<AttitudeProblem>;

}  // namespace liepf
