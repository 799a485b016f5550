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

#include "liepf/filter.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace liepf {
namespace {

FilterOptions options(int window, std::size_t particles, double gamma_bar, Algorithm alg) {
  FilterOptions o;
  o.window = window;
  o.particles = particles;
  o.gamma_bar = gamma_bar;
  o.algorithm = alg;
  return o;
}

TEST(Resample, DegenerateProbabilities) {
  Rng rng{1, 1};
  const std::vector<double> probs{1.0, 0.0, 0.0, 0.0};
  for (std::size_t a : resample_multinomial(probs, 50, rng)) {
    EXPECT_EQ(a, 0u);
  }
  const std::vector<double> last{0.0, 0.0, 0.0, 1.0};
  for (std::size_t a : resample_multinomial(last, 50, rng)) {
    EXPECT_EQ(a, 3u);
  }
}

TEST(Resample, UniformCountsConcentrate) {
  // K draws from K equally likely ancestors: each count is Binomial(K, 1/K)
  const std::size_t k_count = 100000;
  const std::vector<double> probs(k_count, 1.0 / static_cast<double>(k_count));
  Rng rng{2, 2};
  const auto anc = resample_multinomial(probs, k_count, rng);
  std::vector<int> counts(k_count, 0);
  for (std::size_t a : anc) {
    ASSERT_LT(a, k_count);
    ++counts[a];
  }
  // a single Binomial(K, 1/K) count is close to Poisson(1); over 1e5 of them a
  // 5 sigma excursion is expected, so the per-ancestor check is a tail bound:
  // P(count >= 14) < 1e-11 per ancestor
  for (int c : counts) {
    ASSERT_LT(c, 14);
  }
  // 5 sigma on a coarse partition, each bin Binomial(K, 1/10)
  const std::size_t bins = 10;
  std::vector<int> coarse(bins, 0);
  for (std::size_t a : anc) {
    ++coarse[a * bins / k_count];
  }
  const double mean = static_cast<double>(k_count) / bins;
  const double bin_sd = std::sqrt(mean * (1.0 - 1.0 / bins));
  for (int c : coarse) {
    EXPECT_LE(std::abs(c - mean), 5.0 * bin_sd);
  }
}

TEST(Resample, Deterministic) {
  const std::vector<double> probs{0.1, 0.2, 0.3, 0.4};
  Rng a{9, 4};
  Rng b{9, 4};
  EXPECT_EQ(resample_multinomial(probs, 1000, a), resample_multinomial(probs, 1000, b));
}

TEST(RunFilter, OneStepWindowMatchesTextbookSir) {
  const ModelParams p;
  const InitialDistribution d0;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const TruthRecord truth = simulate_truth(p, d0, seed);
    for (double gamma_bar : {0.0, 0.5}) {
      const auto run =
          run_filter(truth.observations, p, d0, options(1, 100, gamma_bar, Algorithm::kZero), seed);
      const auto oracle = testing::textbook_sir(truth.observations, p, d0, 100, gamma_bar, seed);
      ASSERT_EQ(run.estimates.size(), oracle.size());
      int resampled = 0;
      for (std::size_t j = 0; j < oracle.size(); ++j) {
        const auto& e = run.estimates[j];
        ASSERT_EQ(e.resampled, oracle[j].resampled) << "step " << j + 1;
        // both quaternions are canonical (w >= 0)
        EXPECT_LT((e.q.coeffs() - oracle[j].q.coeffs()).cwiseAbs().maxCoeff(), 1e-10)
            << "step " << j + 1;
        EXPECT_LT((e.xi - oracle[j].xi).cwiseAbs().maxCoeff(), 1e-10) << "step " << j + 1;
        EXPECT_NEAR(e.gamma, oracle[j].gamma, 1e-10);
        resampled += e.resampled ? 1 : 0;
      }
      if (gamma_bar > 0.0) {
        EXPECT_GT(resampled, 0);
      }
    }
  }
}

TEST(RunFilter, ZeroThresholdNeverResamples) {
  const ModelParams p;
  const TruthRecord truth = simulate_truth(p, InitialDistribution{}, 4);
  const auto run = run_filter(truth.observations, p, InitialDistribution{},
                              options(5, 50, 0.0, Algorithm::kZero), 4);
  EXPECT_EQ(run.resample_count, 0);
  for (const auto& d : run.diagnostics) {
    EXPECT_TRUE(d.ancestors.empty());
  }
}

TEST(FilterStep, PriorRecursionWithoutResampling) {
  // w_p(j + 1) is proportional to w_p(j) exp(-S(head, head + 1)) for every particle
  const ModelParams p;
  const TruthRecord truth = simulate_truth(p, InitialDistribution{}, 5);
  const FilterOptions opt = options(4, 20, 0.0, Algorithm::kIlqr);
  FilterState fs;
  for (int j = 1; j <= 12; ++j) {
    const std::vector<double> before = fs.prior_log_weights;
    filter_step(fs, truth.observations, j, p, InitialDistribution{}, opt, 5);
    if (j > opt.window) {
      std::vector<double> expected(20);
      for (std::size_t k = 0; k < 20; ++k) {
        expected[k] = before[k] - fs.head_costs[k];
      }
      const WeightVector want = WeightVector::from_log(expected);
      const WeightVector got = fs.prior_weights();
      for (std::size_t k = 0; k < 20; ++k) {
        EXPECT_NEAR(got[k], want[k], 1e-12);
      }
    }
    EXPECT_EQ(fs.head, std::max(0, j - opt.window) + 1);
  }
}

TEST(FilterStep, UninformativeStepKeepsUniformWeights) {
  ModelParams p;
  p.sigma_obs = 1e9;
  const TruthRecord truth = simulate_truth(p, InitialDistribution{}, 6);
  const auto run = run_filter(truth.observations, p, InitialDistribution{},
                              options(3, 40, 0.1, Algorithm::kZero), 6);
  for (const auto& e : run.estimates) {
    EXPECT_NEAR(e.gamma, 1.0, 1e-9);
    EXPECT_FALSE(e.resampled);
  }
}

TEST(RunFilter, FullWindowEqualsSmoother) {
  ModelParams p;
  p.steps = 40;
  const InitialDistribution d0;
  const TruthRecord truth = simulate_truth(p, d0, 7);
  const auto run =
      run_filter(truth.observations, p, d0, options(40, 60, 0.1, Algorithm::kZero), 7);
  const auto sm = smooth(truth.observations, 40, d0, Algorithm::kZero, 60, p, 7);
  std::vector<BodyState> finals;
  for (const auto& tr : sm.particles) {
    finals.push_back(tr.final_state());
  }
  const BodyState mean = weighted_mean_state(finals, sm.weights.span());
  const auto& last = run.estimates.back();
  EXPECT_EQ(last.xi, mean.xi);
  EXPECT_EQ(last.q.coeffs(), to_quaternion(mean.g).coeffs());
  EXPECT_EQ(last.gamma, sm.effective_ratio);
}

TEST(RunFilter, BookkeepingHoldsWithFrequentResampling) {
  const ModelParams p;
  const TruthRecord truth = simulate_truth(p, InitialDistribution{}, 8);
  for (Algorithm alg : {Algorithm::kZero, Algorithm::kIlqr}) {
    const auto run =
        run_filter(truth.observations, p, InitialDistribution{}, options(10, 50, 0.6, alg), 8);
    EXPECT_GT(run.resample_count, 0);
    for (std::size_t j = 0; j < run.estimates.size(); ++j) {
      const auto& d = run.diagnostics[j];
      EXPECT_LE(d.additivity_error, 1e-10);
      EXPECT_LE(d.cancellation_error, 1e-9);
      EXPECT_GE(run.estimates[j].gamma, 1.0 / 50);
      EXPECT_LE(run.estimates[j].gamma, 1.0);
      EXPECT_NEAR(run.estimates[j].q.norm(), 1.0, 1e-12);
      EXPECT_EQ(d.ancestors.empty(), !run.estimates[j].resampled);
    }
  }
}

TEST(RunFilter, Deterministic) {
  const ModelParams p;
  const TruthRecord truth = simulate_truth(p, InitialDistribution{}, 9);
  const auto opt = options(8, 30, 0.3, Algorithm::kIlqr);
  const auto a = run_filter(truth.observations, p, InitialDistribution{}, opt, 9);
  const auto b = run_filter(truth.observations, p, InitialDistribution{}, opt, 9);
  for (std::size_t j = 0; j < a.estimates.size(); ++j) {
    EXPECT_EQ(a.estimates[j].xi, b.estimates[j].xi);
    EXPECT_EQ(a.estimates[j].q.coeffs(), b.estimates[j].q.coeffs());
    EXPECT_EQ(a.estimates[j].resampled, b.estimates[j].resampled);
  }
}

TEST(RunFilter, FrozenSystemErrorShrinksWithParticles) {
  // no process noise and a tight sensor: the posterior concentrates on the
  // true initial attitude, and more particles land closer to it
  ModelParams p;
  p.sigma = 0.0;
  p.sigma_obs = 0.01;
  p.steps = 40;
  const InitialDistribution d0;
  std::vector<double> errors;
  for (std::size_t k_count : {10u, 100u, 1000u}) {
    double err = 0.0;
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
      const TruthRecord truth = simulate_truth(p, d0, seed);
      const auto run = run_filter(truth.observations, p, d0,
                                  options(40, k_count, 0.0, Algorithm::kZero), seed + 100);
      err += rotation_angle_error(run.estimates.back().q, to_quaternion(truth.states.back().g));
    }
    errors.push_back(err / 4.0);
  }
  EXPECT_GT(errors[0], errors[1]);
  EXPECT_GT(errors[1], errors[2]);
}

TEST(RunFilter, RejectsBadOptions) {
  const ModelParams p;
  const TruthRecord truth = simulate_truth(p, InitialDistribution{}, 1);
  EXPECT_THROW(run_filter(truth.observations, p, InitialDistribution{},
                          options(0, 10, 0.1, Algorithm::kZero), 1),
               std::invalid_argument);
  EXPECT_THROW(run_filter(truth.observations, p, InitialDistribution{},
                          options(5, 1, 0.1, Algorithm::kZero), 1),
               std::invalid_argument);
  FilterState fs;
  EXPECT_THROW(filter_step(fs, truth.observations, 201, p, InitialDistribution{},
                           options(5, 10, 0.1, Algorithm::kZero), 1),
               std::out_of_range);
}

}  // namespace
}  // namespace liepf
