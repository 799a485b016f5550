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

#include "liepf/config.hpp"
#include "liepf/filter.hpp"
#include "liepf/model.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

/// \file
/// Experiment harness: per-trial truth generation, filtering, error metrics
/// and their CSV / JSON persistence.

namespace liepf {

/// One row of the per-step trial CSV.
struct StepMetrics {
  int time = 0;
  double gamma = 1.0;
  double angle_error_deg = 0.0;
  double xi_sq_error = 0.0;
  bool resampled = false;
};

struct TrialMetrics {
  int trial = 0;
  std::uint64_t seed = 0;
  double xi_mse = 0.0;           ///< time average of |xi_hat - xi|^2, rad^2/s^2
  double angle_error_deg = 0.0;  ///< time average of the rotation angle error
  double mean_gamma = 0.0;
  int resample_count = 0;
  double min_gamma = 1.0;
  double max_gamma = 0.0;
  double max_additivity_error = 0.0;    ///< worst cached-cost split over all steps
  double max_cancellation_error = 0.0;  ///< worst post-resampling weight deviation
  std::vector<StepMetrics> steps;
};

struct Aggregate {
  double mean = 0.0;
  double se = 0.0;  ///< standard error of the mean across trials
};

inline Aggregate aggregate(std::span<const double> xs) {
  Aggregate a;
  if (xs.empty()) {
    return a;
  }
  const double n = static_cast<double>(xs.size());
  for (double x : xs) {
    a.mean += x;
  }
  a.mean /= n;
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) {
      ss += (x - a.mean) * (x - a.mean);
    }
    a.se = std::sqrt(ss / (n - 1.0) / n);
  }
  return a;
}

struct ExperimentResult {
  int window = 0;
  std::vector<TrialMetrics> trials;
  Aggregate xi_mse;
  Aggregate angle_error_deg;
  Aggregate mean_gamma;
  Aggregate resample_count;
};

/// Compares filter estimates at j = 1..N against the truth states. Errors are
/// averaged over every estimate, warm-up steps included.
inline TrialMetrics score_trial(const FilterRun& run, const TruthRecord& truth) {
  TrialMetrics m;
  const auto n = run.estimates.size();
  m.steps.reserve(n);
  for (const auto& est : run.estimates) {
    const BodyState& ref = truth.states[static_cast<std::size_t>(est.time)];
    StepMetrics row;
    row.time = est.time;
    row.gamma = est.gamma;
    row.resampled = est.resampled;
    row.xi_sq_error = (est.xi - ref.xi).squaredNorm();
    row.angle_error_deg = rotation_angle_error(est.q, to_quaternion(ref.g));
    m.xi_mse += row.xi_sq_error;
    m.angle_error_deg += row.angle_error_deg;
    m.mean_gamma += row.gamma;
    m.resample_count += row.resampled ? 1 : 0;
    m.min_gamma = std::min(m.min_gamma, row.gamma);
    m.max_gamma = std::max(m.max_gamma, row.gamma);
    m.steps.push_back(row);
  }
  for (const auto& d : run.diagnostics) {
    m.max_additivity_error = std::max(m.max_additivity_error, d.additivity_error);
    m.max_cancellation_error = std::max(m.max_cancellation_error, d.cancellation_error);
  }
  if (n > 0) {
    m.xi_mse /= static_cast<double>(n);
    m.angle_error_deg /= static_cast<double>(n);
    m.mean_gamma /= static_cast<double>(n);
  }
  return m;
}

/// Runs `cfg.trials` independent trials of the filter with window `window`.
/// Trial t regenerates truth from trial_seed(cfg.seed, t), so every
/// algorithm and window sees the same truth for the same trial.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg, int window) {
  cfg.validate();
  const InitialDistribution d0{cfg.initial_covariance};
  const FilterOptions opt = cfg.filter_options(window);
  ExperimentResult out;
  out.window = window;
  std::vector<double> mse;
  std::vector<double> ang;
  std::vector<double> gam;
  std::vector<double> res;
  for (int t = 0; t < cfg.trials; ++t) {
    const std::uint64_t seed = trial_seed(cfg.seed, static_cast<std::size_t>(t));
    const TruthRecord truth = simulate_truth(cfg.model, d0, seed);
    const FilterRun run = run_filter(truth.observations, cfg.model, d0, opt, seed);
    TrialMetrics m = score_trial(run, truth);
    m.trial = t;
    m.seed = seed;
    mse.push_back(m.xi_mse);
    ang.push_back(m.angle_error_deg);
    gam.push_back(m.mean_gamma);
    res.push_back(m.resample_count);
    out.trials.push_back(std::move(m));
  }
  out.xi_mse = aggregate(mse);
  out.angle_error_deg = aggregate(ang);
  out.mean_gamma = aggregate(gam);
  out.resample_count = aggregate(res);
  return out;
}

namespace detail {

inline std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  }
  out << std::setprecision(17);
  return out;
}

inline void finish_output(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) {
    throw std::runtime_error("write to '" + path.string() + "' failed");
  }
}

}  // namespace detail

inline constexpr const char* kTrialCsvHeader = "time,t,gamma,delta_theta_deg,xi_sq_err,resampled";

inline void write_trial_csv(const std::filesystem::path& path, std::span<const StepMetrics> rows,
                            double dt) {
  auto out = detail::open_output(path);
  out << kTrialCsvHeader << '\n';
  for (const auto& r : rows) {
    out << r.time << ',' << r.time * dt << ',' << r.gamma << ',' << r.angle_error_deg << ','
        << r.xi_sq_error << ',' << (r.resampled ? 1 : 0) << '\n';
  }
  detail::finish_output(out, path);
}

inline nlohmann::json to_json(const Aggregate& a) { return {{"mean", a.mean}, {"se", a.se}}; }

inline nlohmann::json summary_json(const ExperimentResult& r, const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["config"] = to_json(cfg);
  j["seed"] = cfg.seed;
  j["window"] = r.window;
  j["algorithm"] = to_string(cfg.algorithm);
  j["resampling"] = cfg.resampling;
  j["trials"] = nlohmann::json::array();
  for (const auto& t : r.trials) {
    j["trials"].push_back({{"trial", t.trial},
                           {"seed", t.seed},
                           {"xi_mse", t.xi_mse},
                           {"angle_error_deg", t.angle_error_deg},
                           {"mean_gamma", t.mean_gamma},
                           {"resample_count", t.resample_count},
                           {"max_additivity_error", t.max_additivity_error},
                           {"max_cancellation_error", t.max_cancellation_error}});
  }
  j["aggregate"] = {{"xi_mse", to_json(r.xi_mse)},
                    {"angle_error_deg", to_json(r.angle_error_deg)},
                    {"mean_gamma", to_json(r.mean_gamma)},
                    {"resample_count", to_json(r.resample_count)}};
  return j;
}

/// Writes trial_NNN.csv for every trial and one summary.json into `dir`.
inline void emit_results(const ExperimentResult& r, const ExperimentConfig& cfg,
                         const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw std::runtime_error("cannot create '" + dir.string() + "': " + ec.message());
  }
  for (const auto& t : r.trials) {
    char name[32];
    std::snprintf(name, sizeof(name), "trial_%03d.csv", t.trial);
    write_trial_csv(dir / name, t.steps, cfg.model.dt);
  }
  const auto path = dir / "summary.json";
  auto out = detail::open_output(path);
  out << summary_json(r, cfg).dump(2) << '\n';
  detail::finish_output(out, path);
}

/// truth.csv: i,t,g00..g22 (row-major),xi1,xi2,xi3,qw,qx,qy,qz for i = 0..N.
inline void write_truth_csv(const std::filesystem::path& path, const TruthRecord& truth,
                            double dt) {
  auto out = detail::open_output(path);
  out << "i,t,g00,g01,g02,g10,g11,g12,g20,g21,g22,xi1,xi2,xi3,qw,qx,qy,qz\n";
  for (std::size_t i = 0; i < truth.states.size(); ++i) {
    const auto& s = truth.states[i];
    out << i << ',' << static_cast<double>(i) * dt;
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) {
        out << ',' << s.g(r, c);
      }
    }
    const UnitQuaternion q = to_quaternion(s.g);
    out << ',' << s.xi(0) << ',' << s.xi(1) << ',' << s.xi(2) << ',' << q.w() << ',' << q.x()
        << ',' << q.y() << ',' << q.z() << '\n';
  }
  detail::finish_output(out, path);
}

/// observations.csv: i,t,dy1..dy9 with dy = Y_{i+1} - Y_i for i = 0..N-1.
inline void write_observations_csv(const std::filesystem::path& path, const ObservationPath& obs,
                                   double dt) {
  auto out = detail::open_output(path);
  out << "i,t,dy1,dy2,dy3,dy4,dy5,dy6,dy7,dy8,dy9\n";
  for (int i = 0; i < obs.size(); ++i) {
    out << i << ',' << i * dt;
    for (int r = 0; r < 9; ++r) {
      out << ',' << obs[i](r);
    }
    out << '\n';
  }
  detail::finish_output(out, path);
}

inline ObservationPath read_observations_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open '" + path.string() + "'");
  }
  std::string line;
  std::getline(in, line);  // header
  ObservationPath obs;
  int row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) {
      continue;
    }
    const auto v = detail::parse_numbers(path.string(), line);
    if (v.size() != 11 || static_cast<int>(v[0]) != row) {
      throw std::runtime_error("'" + path.string() + "': malformed row " + std::to_string(row));
    }
    obs.increments.push_back(Eigen::Map<const Vec9>(v.data() + 2));
    ++row;
  }
  return obs;
}

}  // namespace liepf
