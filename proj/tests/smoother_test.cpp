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

#include "liepf/smoother.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace liepf {
namespace {

/// Self-normalized estimate of f and its delta-method standard error.
struct Estimate {
  double mean = 0.0;
  double se = 0.0;
};

template <class F>
Estimate weighted_estimate(const SmoothingResult& r, F f) {
  Estimate e;
  for (std::size_t k = 0; k < r.particles.size(); ++k) {
    e.mean += r.weights[k] * f(r.particles[k].final_state());
  }
  double var = 0.0;
  for (std::size_t k = 0; k < r.particles.size(); ++k) {
    const double d = f(r.particles[k].final_state()) - e.mean;
    var += r.weights[k] * r.weights[k] * d * d;
  }
  e.se = std::sqrt(var);
  return e;
}

std::vector<Rng> make_streams(std::uint64_t seed, std::size_t k_count, int window_end) {
  std::vector<Rng> streams;
  for (std::size_t k = 0; k < k_count; ++k) {
    streams.push_back(particle_stream(seed, k, window_end));
  }
  return streams;
}

TEST(SimulateTrajectory, RecordsWhatItUsed) {
  const ModelParams p;
  Rng a{5, 9};
  Rng b{5, 9};
  const BodyState x0{exp_so3(Vec3{0.1, 0.2, 0.3}), Vec3{1, 0, -1}};
  const auto law = [](const BodyState& s, int i) { return Vec3{0.1 * i, -s.xi.x(), 0.0}; };
  const TrajectoryRecord tr = simulate_trajectory(x0, 3, 13, law, p, a);
  ASSERT_EQ(tr.length(), 10);
  BodyState s = x0;
  for (int i = 3; i < 13; ++i) {
    const Vec3 u = law(s, i);
    const Vec3 eps = b.normal3();
    EXPECT_EQ(tr.controls[i - 3], u);
    EXPECT_EQ(tr.noises[i - 3], eps);
    s = step_state(s, u, eps, p);
    EXPECT_EQ(tr.state_at(i + 1).xi, s.xi);
  }
}

TEST(Smooth, SingleParticleHasUnitWeight) {
  const ModelParams p;
  const TruthRecord truth = simulate_truth(p, InitialDistribution{}, 1);
  for (Algorithm alg : {Algorithm::kZero, Algorithm::kIlqr}) {
    const auto r = smooth(truth.observations, 30, InitialDistribution{}, alg, 1, p, 7);
    ASSERT_EQ(r.weights.size(), 1u);
    EXPECT_EQ(r.weights[0], 1.0);
    EXPECT_EQ(r.effective_ratio, 1.0);
  }
}

TEST(Smooth, UninformativeObservationsGiveUniformWeights) {
  ModelParams p;
  p.sigma_obs = 1e8;
  const TruthRecord truth = simulate_truth(p, InitialDistribution{}, 2);
  const auto r = smooth(truth.observations, 50, InitialDistribution{}, Algorithm::kZero, 200, p, 3);
  for (std::size_t k = 0; k < 200; ++k) {
    EXPECT_NEAR(r.weights[k], 1.0 / 200.0, 1e-6 / 200.0);
  }
  EXPECT_NEAR(r.effective_ratio, 1.0, 1e-6);
}

TEST(Smooth, WeightsAreSoftmaxOfNegativeCosts) {
  const ModelParams p;
  const TruthRecord truth = simulate_truth(p, InitialDistribution{}, 3);
  const auto r = smooth(truth.observations, 25, InitialDistribution{}, Algorithm::kIlqr, 50, p, 4);
  ASSERT_TRUE(r.solver.has_value());
  double lo = r.costs[0];
  for (double c : r.costs) {
    lo = std::min(lo, c);
  }
  double z = 0.0;
  for (double c : r.costs) {
    z += std::exp(lo - c);
  }
  double total = 0.0;
  double sq = 0.0;
  for (std::size_t k = 0; k < 50; ++k) {
    EXPECT_NEAR(r.weights[k], std::exp(lo - r.costs[k]) / z, 1e-14);
    EXPECT_NEAR(r.costs[k], path_cost_Su(r.particles[k], truth.observations, p), 1e-12);
    total += r.weights[k];
    sq += r.weights[k] * r.weights[k];
  }
  EXPECT_NEAR(total, 1.0, 1e-12);
  EXPECT_NEAR(r.effective_ratio, 1.0 / (50 * sq), 1e-12);
  EXPECT_GE(r.effective_ratio, 1.0 / 50);
  EXPECT_LE(r.effective_ratio, 1.0);
}

TEST(Smooth, Deterministic) {
  const ModelParams p;
  const TruthRecord truth = simulate_truth(p, InitialDistribution{}, 5);
  const auto a = smooth(truth.observations, 20, InitialDistribution{}, Algorithm::kIlqr, 30, p, 11);
  const auto b = smooth(truth.observations, 20, InitialDistribution{}, Algorithm::kIlqr, 30, p, 11);
  for (std::size_t k = 0; k < 30; ++k) {
    EXPECT_EQ(a.weights[k], b.weights[k]);
    EXPECT_EQ(a.particles[k].final_state().xi, b.particles[k].final_state().xi);
  }
}

TEST(Smooth, ParticleStreamsIndependentOfOrder) {
  // particle k depends only on its own stream, so rolling in reverse order
  // reproduces every trajectory bit for bit
  const ModelParams p;
  const TruthRecord truth = simulate_truth(p, InitialDistribution{}, 6);
  const std::size_t k_count = 8;
  auto fwd_streams = make_streams(3, k_count, 15);
  std::vector<BodyState> init;
  for (auto& s : fwd_streams) {
    init.push_back(sample_initial(InitialDistribution{}, s));
  }
  const std::vector<double> prior(k_count, 0.0);
  const auto fwd = smooth_particles(truth.observations, 0, 15, init, prior, ZeroControl{}, p,
                                    std::span<Rng>{fwd_streams});
  auto rev_streams = make_streams(3, k_count, 15);
  for (std::size_t k = k_count; k-- > 0;) {
    const BodyState x0 = sample_initial(InitialDistribution{}, rev_streams[k]);
    const auto tr = simulate_trajectory(x0, 0, 15, ZeroControl{}, p, rev_streams[k]);
    EXPECT_EQ(tr.final_state().xi, fwd.particles[k].final_state().xi);
    EXPECT_EQ(tr.final_state().g.matrix(), fwd.particles[k].final_state().g.matrix());
  }
}

TEST(Smooth, PriorLogWeightsShiftWeights) {
  const ModelParams p;
  const TruthRecord truth = simulate_truth(p, InitialDistribution{}, 7);
  const std::size_t k_count = 4;
  auto s1 = make_streams(1, k_count, 10);
  auto s2 = make_streams(1, k_count, 10);
  const std::vector<BodyState> init(k_count, truth.states[0]);
  const std::vector<double> flat(k_count, 0.0);
  const std::vector<double> tilted{0.0, -1.0, 2.0, 0.5};
  const auto a = smooth_particles(truth.observations, 0, 10, init, flat, ZeroControl{}, p,
                                  std::span<Rng>{s1});
  const auto b = smooth_particles(truth.observations, 0, 10, init, tilted, ZeroControl{}, p,
                                  std::span<Rng>{s2});
  double z = 0.0;
  for (std::size_t k = 0; k < k_count; ++k) {
    z += a.weights[k] * std::exp(tilted[k]);
  }
  for (std::size_t k = 0; k < k_count; ++k) {
    EXPECT_NEAR(b.weights[k], a.weights[k] * std::exp(tilted[k]) / z, 1e-14);
  }
}

TEST(Smooth, RejectsBadWindows) {
  const ModelParams p;
  const TruthRecord truth = simulate_truth(p, InitialDistribution{}, 1);
  EXPECT_THROW(smooth(truth.observations, 0, InitialDistribution{}, Algorithm::kZero, 5, p, 1),
               std::out_of_range);
  EXPECT_THROW(smooth(truth.observations, 201, InitialDistribution{}, Algorithm::kZero, 5, p, 1),
               std::out_of_range);
  EXPECT_THROW(smooth(truth.observations, 10, InitialDistribution{}, Algorithm::kZero, 0, p, 1),
               std::invalid_argument);
}

TEST(Smooth, ControlledProposalIsConsistent) {
  // the path weights undo the change of measure, so a steered proposal and
  // the uncontrolled one estimate the same posterior mean
  ModelParams p;
  p.steps = 20;
  const TruthRecord truth = simulate_truth(p, InitialDistribution{}, 12);
  const std::size_t k_count = 8000;
  const int n = 20;
  auto run = [&](auto law, std::uint64_t seed) {
    auto streams = make_streams(seed, k_count, n);
    std::vector<BodyState> init;
    for (auto& s : streams) {
      init.push_back(sample_initial(InitialDistribution{}, s));
    }
    const std::vector<double> prior(k_count, 0.0);
    return smooth_particles(truth.observations, 0, n, init, prior, law, p,
                            std::span<Rng>{streams});
  };
  const auto zero = run(ZeroControl{}, 100);
  const auto steered =
      run([](const BodyState& s, int) { return Vec3{0.8, -0.5, 0.3} - 0.5 * s.xi; }, 200);
  for (int c = 0; c < 3; ++c) {
    const auto f = [c](const BodyState& s) { return s.xi(c); };
    const Estimate a = weighted_estimate(zero, f);
    const Estimate b = weighted_estimate(steered, f);
    EXPECT_LT(std::abs(a.mean - b.mean), 3.0 * std::hypot(a.se, b.se))
        << "xi(" << c << ") " << a.mean << " vs " << b.mean;
  }
}

}  // namespace
}  // namespace liepf
