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

// liepf command line: simulate, smooth, filter and bench.

#include "liepf/liepf.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;

namespace {

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> algorithm;
  std::optional<int> window;
  std::optional<std::size_t> particles;
  std::optional<std::string> resampling;
  std::optional<int> trials;
  std::string obs;
  std::string out = "out";
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "INI config file")->check(CLI::ExistingFile);
  cmd->add_option("--seed", f.seed, "master seed");
  cmd->add_option("--out", f.out, "output directory");
}

void add_filter_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--algorithm", f.algorithm, "zero|ilqr");
  cmd->add_option("--window", f.window, "window length H");
  cmd->add_option("--particles", f.particles, "particle count K");
}

liepf::ExperimentConfig load(const Flags& f) {
  liepf::ExperimentConfig cfg;
  if (!f.config.empty()) {
    std::ifstream in(f.config);
    if (!in) {
      throw std::runtime_error("cannot open config '" + f.config + "'");
    }
    cfg = liepf::parse_config(in);
  }
  if (f.seed) cfg.seed = *f.seed;
  if (f.algorithm) cfg.algorithm = liepf::parse_algorithm(*f.algorithm);
  if (f.window) cfg.windows = {*f.window};
  if (f.particles) cfg.particles = *f.particles;
  if (f.resampling) cfg.resampling = liepf::parse_switch(*f.resampling);
  if (f.trials) cfg.trials = *f.trials;
  cfg.validate();
  return cfg;
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw std::runtime_error("cannot create '" + dir.string() + "': " + ec.message());
  }
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  out << j.dump(2) << '\n';
  if (!out) {
    throw std::runtime_error("write to '" + path.string() + "' failed");
  }
}

nlohmann::json solver_json(const liepf::ilqr::Report& r) {
  return {{"iterations", r.iterations},       {"converged", r.converged},
          {"zero_control_cost", r.zero_control_cost}, {"initial_cost", r.initial_cost},
          {"final_cost", r.final_cost},       {"lambda_history", r.lambda_history}};
}

/// Observations from --obs, or a fresh truth generated from the seed.
struct Input {
  std::optional<liepf::TruthRecord> truth;
  liepf::ObservationPath obs;
};

Input input(const Flags& f, const liepf::ExperimentConfig& cfg) {
  Input in;
  if (!f.obs.empty()) {
    in.obs = liepf::read_observations_csv(f.obs);
    if (in.obs.size() != cfg.model.steps) {
      throw std::runtime_error("'" + f.obs + "' has " + std::to_string(in.obs.size()) +
                               " rows, config expects steps = " +
                               std::to_string(cfg.model.steps));
    }
  } else {
    in.truth = liepf::simulate_truth(cfg.model, liepf::InitialDistribution{cfg.initial_covariance},
                                     cfg.seed);
    in.obs = in.truth->observations;
  }
  return in;
}

int cmd_simulate(const Flags& f) {
  const auto cfg = load(f);
  const auto truth =
      liepf::simulate_truth(cfg.model, liepf::InitialDistribution{cfg.initial_covariance}, cfg.seed);
  const fs::path dir{f.out};
  make_dir(dir);
  liepf::write_truth_csv(dir / "truth.csv", truth, cfg.model.dt);
  liepf::write_observations_csv(dir / "observations.csv", truth.observations, cfg.model.dt);
  write_json(dir / "summary.json", {{"command", "simulate"},
                                    {"config", liepf::to_json(cfg)},
                                    {"seed", cfg.seed},
                                    {"steps", cfg.model.steps}});
  return 0;
}

int cmd_smooth(const Flags& f) {
  const auto cfg = load(f);
  const Input in = input(f, cfg);
  // --window is the window end here; the whole horizon when absent
  const int end = f.window ? *f.window : cfg.model.steps;
  const auto r = liepf::smooth(in.obs, end, liepf::InitialDistribution{cfg.initial_covariance},
                               cfg.algorithm, cfg.particles, cfg.model, cfg.seed, cfg.ilqr);
  const fs::path dir{f.out};
  make_dir(dir);
  {
    std::ofstream csv(dir / "particles.csv");
    csv << std::setprecision(17) << "k,weight,cost,qw,qx,qy,qz,xi1,xi2,xi3\n";
    for (std::size_t k = 0; k < r.particles.size(); ++k) {
      const auto s = r.particles[k].final_state();
      const auto q = liepf::to_quaternion(s.g);
      csv << k << ',' << r.weights[k] << ',' << r.costs[k] << ',' << q.w() << ',' << q.x() << ','
          << q.y() << ',' << q.z() << ',' << s.xi(0) << ',' << s.xi(1) << ',' << s.xi(2) << '\n';
    }
    if (!csv) {
      throw std::runtime_error("write to particles.csv failed");
    }
  }
  std::vector<liepf::BodyState> finals;
  for (const auto& tr : r.particles) {
    finals.push_back(tr.final_state());
  }
  const auto mean = liepf::weighted_mean_state(finals, r.weights.span());
  const auto q = liepf::to_quaternion(mean.g);
  nlohmann::json j{{"command", "smooth"},
                   {"config", liepf::to_json(cfg)},
                   {"seed", cfg.seed},
                   {"window_end", end},
                   {"algorithm", liepf::to_string(cfg.algorithm)},
                   {"effective_ratio", r.effective_ratio},
                   {"mean", {{"q", {q.w(), q.x(), q.y(), q.z()}},
                             {"xi", {mean.xi(0), mean.xi(1), mean.xi(2)}}}}};
  if (r.solver) {
    j["solver"] = solver_json(*r.solver);
  }
  if (in.truth) {
    const auto& ref = in.truth->states[static_cast<std::size_t>(end)];
    j["errors"] = {{"xi_sq_err", (mean.xi - ref.xi).squaredNorm()},
                   {"delta_theta_deg",
                    liepf::rotation_angle_error(q, liepf::to_quaternion(ref.g))}};
  }
  write_json(dir / "summary.json", j);
  return 0;
}

int cmd_filter(const Flags& f) {
  const auto cfg = load(f);
  const Input in = input(f, cfg);
  const int h = cfg.windows.front();
  const auto run = liepf::run_filter(in.obs, cfg.model,
                                     liepf::InitialDistribution{cfg.initial_covariance},
                                     cfg.filter_options(h), cfg.seed);
  const fs::path dir{f.out};
  make_dir(dir);
  {
    std::ofstream csv(dir / "estimates.csv");
    csv << std::setprecision(17) << "time,t,qw,qx,qy,qz,xi1,xi2,xi3,gamma,resampled\n";
    for (const auto& e : run.estimates) {
      csv << e.time << ',' << e.time * cfg.model.dt << ',' << e.q.w() << ',' << e.q.x() << ','
          << e.q.y() << ',' << e.q.z() << ',' << e.xi(0) << ',' << e.xi(1) << ',' << e.xi(2)
          << ',' << e.gamma << ',' << (e.resampled ? 1 : 0) << '\n';
    }
    if (!csv) {
      throw std::runtime_error("write to estimates.csv failed");
    }
  }
  double worst_add = 0.0;
  double worst_cancel = 0.0;
  for (const auto& d : run.diagnostics) {
    worst_add = std::max(worst_add, d.additivity_error);
    worst_cancel = std::max(worst_cancel, d.cancellation_error);
  }
  nlohmann::json j{{"command", "filter"},
                   {"config", liepf::to_json(cfg)},
                   {"seed", cfg.seed},
                   {"window", h},
                   {"algorithm", liepf::to_string(cfg.algorithm)},
                   {"resample_count", run.resample_count},
                   {"max_additivity_error", worst_add},
                   {"max_cancellation_error", worst_cancel}};
  if (in.truth) {
    const auto m = liepf::score_trial(run, *in.truth);
    liepf::write_trial_csv(dir / "trial.csv", m.steps, cfg.model.dt);
    j["xi_mse"] = m.xi_mse;
    j["angle_error_deg"] = m.angle_error_deg;
    j["mean_gamma"] = m.mean_gamma;
  }
  write_json(dir / "summary.json", j);
  return 0;
}

int cmd_bench(const Flags& f) {
  const auto cfg = load(f);
  const fs::path dir{f.out};
  for (int h : cfg.windows) {
    const auto r = liepf::run_experiment(cfg, h);
    const fs::path sub = cfg.windows.size() == 1 ? dir : dir / ("H" + std::to_string(h));
    liepf::emit_results(r, cfg, sub);
    std::printf("%s H=%d K=%zu resampling=%s trials=%d: xi_mse %.4f +- %.4f, angle %.4f +- %.4f "
                "deg, gamma %.4f\n",
                liepf::to_string(cfg.algorithm).c_str(), h, cfg.particles,
                cfg.resampling ? "on" : "off", cfg.trials, r.xi_mse.mean, r.xi_mse.se,
                r.angle_error_deg.mean, r.angle_error_deg.se, r.mean_gamma.mean);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Path-integral particle filtering and smoothing on SO(3)"};
  app.require_subcommand(1);
  Flags f;

  auto* sim = app.add_subcommand("simulate", "generate truth and observations");
  add_common(sim, f);

  auto* smo = app.add_subcommand("smooth", "smooth one window [0, H) of observations");
  add_common(smo, f);
  add_filter_flags(smo, f);
  smo->add_option("--obs", f.obs, "observations.csv (default: simulate from the seed)")
      ->check(CLI::ExistingFile);

  auto* fil = app.add_subcommand("filter", "run the sliding-window filter");
  add_common(fil, f);
  add_filter_flags(fil, f);
  fil->add_option("--resampling", f.resampling, "on|off");
  fil->add_option("--obs", f.obs, "observations.csv (default: simulate from the seed)")
      ->check(CLI::ExistingFile);

  auto* ben = app.add_subcommand("bench", "repeated trials with error metrics");
  add_common(ben, f);
  add_filter_flags(ben, f);
  ben->add_option("--resampling", f.resampling, "on|off");
  ben->add_option("--trials", f.trials, "number of trials");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "liepf: %s\n", e.what());
    return 2;
  }

  try {
    if (sim->parsed()) return cmd_simulate(f);
    if (smo->parsed()) return cmd_smooth(f);
    if (fil->parsed()) return cmd_filter(f);
    return cmd_bench(f);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "liepf: %s\n", e.what());
    return 1;
  }
}
