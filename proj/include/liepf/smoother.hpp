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

#include "liepf/attitude_problem.hpp"
#include "liepf/ilqr.hpp"
#include "liepf/model.hpp"
#include "liepf/path_cost.hpp"
#include "liepf/rng.hpp"

#include <concepts>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

/// \file
/// Control-driven particle smoothing over a fixed window: sample K
/// trajectories of the controlled dynamics and weight each by exp(-S_u).

namespace liepf {

template <class L>
concept ControlLaw = requires(const L& law, const BodyState& s, int i) {
  { law(s, i) } -> std::convertible_to<Vec3>;
};

struct ZeroControl {
  Vec3 operator()(const BodyState& /*s*/, int /*i*/) const { return Vec3::Zero(); }
};

/// Deployed iLQR law u = ubar_i + k_i + K_i local_error(s, sbar_i).
inline Vec3 policy_eval(const ControlPolicy& policy, const BodyState& s, int i) {
  if (!policy.contains(i)) {
    throw std::out_of_range("policy_eval: index outside policy window");
  }
  const auto k = static_cast<std::size_t>(i - policy.begin);
  Vec3 u = policy.nominal_controls[k] + policy.feedforward[k];
  try {
    u += policy.feedback[k] * local_error(s, policy.nominal_states[k]);
  } catch (const std::domain_error&) {
    // feedforward only
  }
  return u;
}

struct FeedbackControl {
  const ControlPolicy* policy;
  Vec3 operator()(const BodyState& s, int i) const { return policy_eval(*policy, s, i); }
};

enum class Algorithm { kZero, kIlqr };

/// Rolls x0 over the steps [begin, end) with u_i = law(s_i, i) and
/// eps_i = rng.normal3(), recording everything S_u needs.
template <ControlLaw Law>
TrajectoryRecord simulate_trajectory(const BodyState& x0, int begin, int end, const Law& law,
                                     const ModelParams& p, Rng& rng) {
  TrajectoryRecord tr;
  tr.begin = begin;
  tr.end = end;
  const auto n = static_cast<std::size_t>(end - begin);
  tr.states.reserve(n + 1);
  tr.controls.reserve(n);
  tr.noises.reserve(n);
  tr.states.push_back(x0);
  for (int i = begin; i < end; ++i) {
    const Vec3 u = law(tr.states.back(), i);
    const Vec3 eps = rng.normal3();
    tr.controls.push_back(u);
    tr.noises.push_back(eps);
    tr.states.push_back(step_state(tr.states.back(), u, eps, p));
  }
  return tr;
}

/// Weighted mean of a particle cloud: quaternion eigen-average for the
/// rotation, arithmetic mean for the velocity.
inline BodyState weighted_mean_state(std::span<const BodyState> states,
                                     std::span<const double> weights) {
  std::vector<UnitQuaternion> qs;
  qs.reserve(states.size());
  Vec3 xi = Vec3::Zero();
  for (std::size_t k = 0; k < states.size(); ++k) {
    qs.push_back(to_quaternion(states[k].g));
    xi += weights[k] * states[k].xi;
  }
  return BodyState{to_rotation(weighted_quaternion_mean(qs, weights)), xi};
}

struct SmoothingResult {
  std::vector<TrajectoryRecord> particles;
  std::vector<double> costs;  ///< S_u^k over the window
  WeightVector weights;
  double effective_ratio = 1.0;
  std::optional<ilqr::Report> solver;
};

/// Simulates one trajectory per initial state under `law` and weights it by
/// prior_log_weight - S_u. Particle k draws its noise from `streams[k]`.
template <ControlLaw Law>
SmoothingResult smooth_particles(const ObservationPath& obs, int begin, int end,
                                 std::span<const BodyState> initial,
                                 std::span<const double> prior_log_weights, const Law& law,
                                 const ModelParams& p, std::span<Rng> streams) {
  const std::size_t k_count = initial.size();
  if (k_count == 0 || prior_log_weights.size() != k_count || streams.size() != k_count) {
    throw std::invalid_argument("smooth: particle, weight and stream counts differ");
  }
  if (begin < 0 || end > obs.size() || begin >= end) {
    throw std::out_of_range("smooth: window outside observations");
  }
  SmoothingResult out;
  out.particles.reserve(k_count);
  out.costs.reserve(k_count);
  std::vector<double> log_w(k_count);
  for (std::size_t k = 0; k < k_count; ++k) {
    out.particles.push_back(simulate_trajectory(initial[k], begin, end, law, p, streams[k]));
    out.costs.push_back(path_cost_Su(out.particles.back(), obs, p));
    log_w[k] = prior_log_weights[k] - out.costs.back();
  }
  out.weights = WeightVector::from_log(log_w);
  out.effective_ratio = effective_ratio(out.weights);
  return out;
}

/// Solves the dual control problem on [begin, end) from `nominal_start`.
inline ilqr::Solution<AttitudeProblem> solve_window(
    const ObservationPath& obs, int begin, int end, const BodyState& nominal_start,
    const ModelParams& p, const ilqr::Options& opts = {},
    const std::vector<Vec3>* warm_start = nullptr) {
  const AttitudeProblem problem{p, obs, begin, end, opts.fd_step};
  return ilqr::solve(problem, nominal_start, opts, warm_start);
}

/// Stand-alone smoothing over the window [0, window_end): K particles drawn
/// from the initial distribution using particle_stream(seed, k, window_end),
/// steered by zero control or by the iLQR policy of the window.
inline SmoothingResult smooth(const ObservationPath& obs, int window_end,
                              const InitialDistribution& d0, Algorithm algorithm, std::size_t k_count,
                              const ModelParams& p, std::uint64_t seed,
                              const ilqr::Options& opts = {}) {
  if (k_count < 1) {
    throw std::invalid_argument("smooth: need at least one particle");
  }
  std::vector<Rng> streams;
  std::vector<BodyState> initial;
  streams.reserve(k_count);
  initial.reserve(k_count);
  for (std::size_t k = 0; k < k_count; ++k) {
    streams.push_back(particle_stream(seed, k, window_end));
    initial.push_back(sample_initial(d0, streams.back()));
  }
  const std::vector<double> log_prior(k_count, 0.0);
  if (algorithm == Algorithm::kZero) {
    return smooth_particles(obs, 0, window_end, initial, log_prior, ZeroControl{}, p, streams);
  }
  const std::vector<double> uniform(k_count, 1.0 / static_cast<double>(k_count));
  const auto sol =
      solve_window(obs, 0, window_end, weighted_mean_state(initial, uniform), p, opts);
  SmoothingResult out = smooth_particles(obs, 0, window_end, initial, log_prior,
                                         FeedbackControl{&sol.policy}, p, streams);
  out.solver = sol.report;
  return out;
}

}  // namespace liepf
