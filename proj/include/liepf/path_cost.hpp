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

#include "liepf/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

namespace liepf {

/// A simulated trajectory over the step window [begin, end).
///
/// states[i - begin] is the state at index i for i in [begin, end];
/// controls and noises hold the u_i and eps_i consumed by step i -> i + 1.
struct TrajectoryRecord {
  int begin = 0;
  int end = 0;
  std::vector<BodyState> states;
  std::vector<Vec3> controls;
  std::vector<Vec3> noises;

  int length() const { return end - begin; }
  const BodyState& state_at(int i) const { return states[static_cast<std::size_t>(i - begin)]; }
  const BodyState& final_state() const { return states.back(); }
};

/// Contribution of one step to the discrete path cost:
///   [|u|^2 / 2 + |h|^2 / (2 sigma_B^2)] dt - h^T dY / sigma_B^2 + u^T sqrt(dt) eps.
inline double step_cost(const Vec9& h, const Vec3& u, const Vec3& eps, const Vec9& dy,
                        const ModelParams& p) {
  const double inv_var = 1.0 / (p.sigma_obs * p.sigma_obs);
  return (0.5 * u.squaredNorm() + 0.5 * inv_var * h.squaredNorm()) * p.dt -
         inv_var * h.dot(dy) + std::sqrt(p.dt) * u.dot(eps);
}

/// S_u over the absolute step range [from, to) of `tr`. Sums are taken in
/// increasing index order, so adjacent ranges add up to the joint range.
inline double path_cost_range(const TrajectoryRecord& tr, const ObservationPath& obs,
                              const ModelParams& p, int from, int to) {
  if (from < tr.begin || to > tr.end || from > to) {
    throw std::out_of_range("path_cost: range outside trajectory window");
  }
  if (!(p.sigma_obs > 0.0)) {
    throw std::invalid_argument("path_cost: sigma_obs must be positive");
  }
  if (tr.end > obs.size() || tr.states.size() != static_cast<std::size_t>(tr.length()) + 1 ||
      tr.controls.size() != static_cast<std::size_t>(tr.length()) ||
      tr.noises.size() != static_cast<std::size_t>(tr.length())) {
    throw std::invalid_argument("path_cost: window and observation length mismatch");
  }
  double total = 0.0;
  for (int i = from; i < to; ++i) {
    const auto k = static_cast<std::size_t>(i - tr.begin);
    total += step_cost(observe(tr.states[k], p), tr.controls[k], tr.noises[k], obs[i], p);
  }
  return total;
}

inline double path_cost_Su(const TrajectoryRecord& tr, const ObservationPath& obs,
                           const ModelParams& p) {
  return path_cost_range(tr, obs, p, tr.begin, tr.end);
}

/// Normalized nonnegative weights.
class WeightVector {
 public:
  WeightVector() = default;

  /// Uniform weights 1/k.
  static WeightVector uniform(std::size_t k) {
    return WeightVector{std::vector<double>(k, 1.0 / static_cast<double>(k))};
  }

  /// Normalizes exp(log_w) after subtracting the maximum. Entries of -inf
  /// receive zero weight.
  static WeightVector from_log(std::span<const double> log_w) {
    if (log_w.empty()) {
      throw std::invalid_argument("WeightVector: no weights");
    }
    const double top = *std::max_element(log_w.begin(), log_w.end());
    if (!std::isfinite(top)) {
      throw std::runtime_error("WeightVector: all log-weights are -inf or non-finite");
    }
    std::vector<double> w(log_w.size());
    double total = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      w[i] = std::exp(log_w[i] - top);
      total += w[i];
    }
    for (double& x : w) {
      x /= total;
    }
    return WeightVector{std::move(w)};
  }

  std::size_t size() const { return w_.size(); }
  double operator[](std::size_t i) const { return w_[i]; }
  const std::vector<double>& values() const { return w_; }
  std::span<const double> span() const { return w_; }

  double log(std::size_t i) const {
    return w_[i] > 0.0 ? std::log(w_[i]) : -std::numeric_limits<double>::infinity();
  }

 private:
  explicit WeightVector(std::vector<double> w) : w_{std::move(w)} {}

  std::vector<double> w_;
};

/// w_k proportional to ratio_k exp(-cost_k), evaluated in log space.
inline WeightVector weights_from_costs(std::span<const double> costs,
                                       std::span<const double> prior_ratios) {
  if (costs.empty() || costs.size() != prior_ratios.size()) {
    throw std::invalid_argument("weights_from_costs: size mismatch or empty input");
  }
  std::vector<double> log_w(costs.size());
  for (std::size_t k = 0; k < costs.size(); ++k) {
    if (!(prior_ratios[k] > 0.0)) {
      throw std::invalid_argument("weights_from_costs: prior ratios must be positive");
    }
    log_w[k] = std::log(prior_ratios[k]) - costs[k];
  }
  return WeightVector::from_log(log_w);
}

inline WeightVector weights_from_costs(std::span<const double> costs) {
  const std::vector<double> ones(costs.size(), 1.0);
  return weights_from_costs(costs, ones);
}

/// gamma = 1 / (K sum w_i^2), in [1/K, 1].
inline double effective_ratio(const WeightVector& w) {
  const double sq = std::inner_product(w.values().begin(), w.values().end(),
                                       w.values().begin(), 0.0);
  const double k = static_cast<double>(w.size());
  // rounding can push 1 / (K sum w^2) a few ulps outside its range
  return std::clamp(1.0 / (k * sq), 1.0 / k, 1.0);
}

}  // namespace liepf
