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

#include "liepf/smoother.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

/// \file
/// Sliding-window control-based particle filter.
///
/// At step j the window is [max(0, j - H), j). While j <= H the filter
/// smooths from the initial distribution over [0, j); afterwards it re-rolls
/// every particle from the prior cloud at j - H. Prior weights follow
///   w_p <- w_p exp(-S(j-H, j-H+1)),
/// and when the effective ratio of the posterior drops below gamma_bar the
/// prior cloud is resampled with probabilities w_p exp(-S(j-H+1, j)) and
/// reweighted by exp(+S(j-H+1, j)) of each chosen ancestor.

namespace liepf {

struct FilterOptions {
  int window = 20;          ///< H
  std::size_t particles = 100;
  double gamma_bar = 0.1;   ///< resampling threshold; 0 disables resampling
  Algorithm algorithm = Algorithm::kIlqr;
  ilqr::Options ilqr;
};

struct FilterEstimate {
  int time = 0;
  UnitQuaternion q = UnitQuaternion::Identity();
  Vec3 xi = Vec3::Zero();
  double gamma = 1.0;
  bool resampled = false;
};

/// Per-step bookkeeping checks and solver output.
struct StepDiagnostics {
  int time = 0;
  double additivity_error = 0.0;    ///< max_k |S(a,a+1) + S(a+1,j) - S(a,j)|
  double cancellation_error = 0.0;  ///< max_k |w_k - 1/K| right after resampling
  std::vector<std::size_t> ancestors;
  std::optional<ilqr::Report> solver;
};

/// Prior cloud at the window head.
struct FilterState {
  int head = 0;
  std::vector<BodyState> prior_particles;
  std::vector<double> prior_log_weights;  ///< normalized: logsumexp = 0
  std::vector<double> head_costs;         ///< S^k(head - 1, head) of the last step
  std::vector<double> tail_costs;         ///< S^k(head, j) of the last step
  std::vector<Vec3> warm_controls;        ///< last nominal controls, by absolute index
  int warm_begin = 0;

  WeightVector prior_weights() const { return WeightVector::from_log(prior_log_weights); }
};

struct FilterRun {
  std::vector<FilterEstimate> estimates;  ///< one per j = 1..N
  std::vector<StepDiagnostics> diagnostics;
  int resample_count = 0;
};

namespace detail {

inline std::vector<double> normalized_log(std::span<const double> log_w) {
  const double top = *std::max_element(log_w.begin(), log_w.end());
  if (!std::isfinite(top)) {
    throw std::runtime_error("filter: weight underflow, all log-weights are -inf");
  }
  double acc = 0.0;
  for (double x : log_w) {
    acc += std::exp(x - top);
  }
  const double lse = top + std::log(acc);
  std::vector<double> out(log_w.size());
  std::transform(log_w.begin(), log_w.end(), out.begin(), [lse](double x) { return x - lse; });
  return out;
}

}  // namespace detail

/// K independent categorical draws by inverse CDF on uniforms from `rng`.
/// Returns the ancestor index of each new slot.
inline std::vector<std::size_t> resample_multinomial(std::span<const double> probabilities,
                                                     std::size_t k_count, Rng& rng) {
  std::vector<double> cdf(probabilities.size());
  std::partial_sum(probabilities.begin(), probabilities.end(), cdf.begin());
  const double total = cdf.back();
  std::vector<std::size_t> ancestors(k_count);
  for (auto& a : ancestors) {
    const double u = rng.uniform() * total;
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    a = std::min(static_cast<std::size_t>(it - cdf.begin()), cdf.size() - 1);
  }
  return ancestors;
}

template <class T>
std::vector<T> gather(const std::vector<T>& src, std::span<const std::size_t> idx) {
  std::vector<T> out;
  out.reserve(idx.size());
  for (std::size_t a : idx) {
    out.push_back(src[a]);
  }
  return out;
}

/// One filter step producing the estimate at index j and the prior cloud at
/// max(0, j - H) + 1. For j <= H the prior in `fs` is ignored and particles
/// are drawn from `d0`.
inline std::pair<FilterEstimate, StepDiagnostics> filter_step(
    FilterState& fs, const ObservationPath& obs, int j, const ModelParams& p,
    const InitialDistribution& d0, const FilterOptions& opt, std::uint64_t seed) {
  const int h = opt.window;
  const std::size_t k_count = opt.particles;
  if (j < 1 || j > obs.size()) {
    throw std::out_of_range("filter_step: window exceeds available observations");
  }
  const int begin = std::max(0, j - h);

  std::vector<Rng> streams;
  streams.reserve(k_count);
  for (std::size_t k = 0; k < k_count; ++k) {
    streams.push_back(particle_stream(seed, k, j));
  }

  std::vector<BodyState> initial;
  std::vector<double> log_prior;
  if (j <= h) {
    initial.reserve(k_count);
    for (std::size_t k = 0; k < k_count; ++k) {
      initial.push_back(sample_initial(d0, streams[k]));
    }
    log_prior.assign(k_count, -std::log(static_cast<double>(k_count)));
  } else {
    if (fs.head != begin || fs.prior_particles.size() != k_count) {
      throw std::logic_error("filter_step: prior cloud is not at the window head");
    }
    initial = fs.prior_particles;
    log_prior = fs.prior_log_weights;
  }

  StepDiagnostics diag;
  diag.time = j;
  SmoothingResult sm;
  if (opt.algorithm == Algorithm::kZero) {
    sm = smooth_particles(obs, begin, j, initial, log_prior, ZeroControl{}, p, streams);
  } else {
    std::vector<double> prior_w(k_count);
    std::transform(log_prior.begin(), log_prior.end(), prior_w.begin(),
                   [](double x) { return std::exp(x); });
    std::vector<Vec3> warm(static_cast<std::size_t>(j - begin), Vec3::Zero());
    for (int i = begin; i < j; ++i) {
      const int r = i - fs.warm_begin;
      if (r >= 0 && r < static_cast<int>(fs.warm_controls.size())) {
        warm[static_cast<std::size_t>(i - begin)] = fs.warm_controls[static_cast<std::size_t>(r)];
      }
    }
    const auto sol = solve_window(obs, begin, j, weighted_mean_state(initial, prior_w), p,
                                  opt.ilqr, &warm);
    sm = smooth_particles(obs, begin, j, initial, log_prior, FeedbackControl{&sol.policy}, p,
                          streams);
    fs.warm_controls = sol.policy.nominal_controls;
    fs.warm_begin = begin;
    diag.solver = sol.report;
  }

  // Cached partial costs over the window head step and the remainder.
  fs.head_costs.resize(k_count);
  fs.tail_costs.resize(k_count);
  std::vector<double> next_log(k_count);
  for (std::size_t k = 0; k < k_count; ++k) {
    const auto& tr = sm.particles[k];
    fs.head_costs[k] = path_cost_range(tr, obs, p, begin, begin + 1);
    fs.tail_costs[k] = path_cost_range(tr, obs, p, begin + 1, j);
    diag.additivity_error = std::max(
        diag.additivity_error, std::abs(fs.head_costs[k] + fs.tail_costs[k] - sm.costs[k]));
    next_log[k] = log_prior[k] - fs.head_costs[k];
  }

  FilterEstimate est;
  est.time = j;
  est.gamma = sm.effective_ratio;
  std::vector<BodyState> finals;
  finals.reserve(k_count);
  for (const auto& tr : sm.particles) {
    finals.push_back(tr.final_state());
  }
  const BodyState mean = weighted_mean_state(finals, sm.weights.span());
  est.q = to_quaternion(mean.g);
  est.xi = mean.xi;

  // Prior cloud for the window that starts at begin + 1.
  std::vector<BodyState> next_particles;
  next_particles.reserve(k_count);
  for (const auto& tr : sm.particles) {
    next_particles.push_back(tr.state_at(begin + 1));
  }
  fs.prior_log_weights = detail::normalized_log(next_log);
  fs.prior_particles = std::move(next_particles);
  fs.head = begin + 1;

  if (j >= h && est.gamma < opt.gamma_bar) {
    std::vector<double> probs(k_count);
    for (std::size_t k = 0; k < k_count; ++k) {
      probs[k] = fs.prior_log_weights[k] - fs.tail_costs[k];
    }
    const WeightVector pw = WeightVector::from_log(probs);
    Rng rng = resampling_stream(seed, j);
    diag.ancestors = resample_multinomial(pw.span(), k_count, rng);
    fs.prior_particles = gather(fs.prior_particles, diag.ancestors);
    fs.tail_costs = gather(fs.tail_costs, diag.ancestors);
    fs.head_costs = gather(fs.head_costs, diag.ancestors);
    fs.prior_log_weights = detail::normalized_log(fs.tail_costs);

    // The resampled cloud, reweighted by the cached window costs, is uniform.
    std::vector<double> check(k_count);
    for (std::size_t k = 0; k < k_count; ++k) {
      check[k] = fs.prior_log_weights[k] - fs.tail_costs[k];
    }
    const WeightVector cw = WeightVector::from_log(check);
    for (std::size_t k = 0; k < k_count; ++k) {
      diag.cancellation_error = std::max(
          diag.cancellation_error, std::abs(cw[k] - 1.0 / static_cast<double>(k_count)));
    }
    est.resampled = true;
  }
  return {est, diag};
}

/// Runs the filter over every step of `obs`, emitting one estimate per
/// index j = 1..N.
inline FilterRun run_filter(const ObservationPath& obs, const ModelParams& p,
                            const InitialDistribution& d0, const FilterOptions& opt,
                            std::uint64_t seed) {
  if (opt.window < 1) {
    throw std::invalid_argument("run_filter: window H must be at least 1");
  }
  if (opt.particles < 2) {
    throw std::invalid_argument("run_filter: need at least two particles");
  }
  FilterRun run;
  FilterState fs;
  run.estimates.reserve(static_cast<std::size_t>(obs.size()));
  for (int j = 1; j <= obs.size(); ++j) {
    auto [est, diag] = filter_step(fs, obs, j, p, d0, opt, seed);
    run.resample_count += est.resampled ? 1 : 0;
    run.estimates.push_back(est);
    run.diagnostics.push_back(std::move(diag));
  }
  return run;
}

}  // namespace liepf
