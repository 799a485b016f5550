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

#include "liepf/filter.hpp"
#include "liepf/model.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdint>
#include <istream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace liepf {

/// Everything one experiment run depends on.
struct ExperimentConfig {
  ModelParams model;
  Mat6 initial_covariance = 0.01 * Mat6::Identity();
  std::size_t particles = 100;
  std::vector<int> windows{20};
  double gamma_bar = 0.1;
  bool resampling = true;
  Algorithm algorithm = Algorithm::kIlqr;
  int trials = 20;
  std::uint64_t seed = 1;
  ilqr::Options ilqr;

  void validate() const {
    model.validate();
    InitialDistribution{initial_covariance};
    if (trials < 1) {
      throw std::invalid_argument("config: trials must be at least 1");
    }
    if (particles < 2) {
      throw std::invalid_argument("config: particles must be at least 2");
    }
    if (windows.empty()) {
      throw std::invalid_argument("config: at least one window H is required");
    }
    for (int h : windows) {
      if (h < 1 || h > model.steps) {
        throw std::invalid_argument("config: window H must lie in [1, steps]");
      }
    }
    if (gamma_bar < 0.0 || gamma_bar > 1.0) {
      throw std::invalid_argument("config: gamma_bar must lie in [0, 1]");
    }
  }

  /// Filter settings for window `h`. Disabling resampling sets gamma_bar to 0.
  FilterOptions filter_options(int h) const {
    FilterOptions opt;
    opt.window = h;
    opt.particles = particles;
    opt.gamma_bar = resampling ? gamma_bar : 0.0;
    opt.algorithm = algorithm;
    opt.ilqr = ilqr;
    return opt;
  }

  bool operator==(const ExperimentConfig& o) const {
    return model.inertia == o.model.inertia && model.control == o.model.control &&
           model.sigma == o.model.sigma && model.sigma_obs == o.model.sigma_obs &&
           model.r_g == o.model.r_g && model.r_b == o.model.r_b && model.dt == o.model.dt &&
           model.steps == o.model.steps && initial_covariance == o.initial_covariance &&
           particles == o.particles && windows == o.windows && gamma_bar == o.gamma_bar &&
           resampling == o.resampling && algorithm == o.algorithm && trials == o.trials &&
           seed == o.seed && ilqr.max_iter == o.ilqr.max_iter && ilqr.tol == o.ilqr.tol;
  }
};

inline std::string to_string(Algorithm a) { return a == Algorithm::kZero ? "zero" : "ilqr"; }

inline Algorithm parse_algorithm(const std::string& s) {
  if (s == "zero") {
    return Algorithm::kZero;
  }
  if (s == "ilqr") {
    return Algorithm::kIlqr;
  }
  throw std::invalid_argument("unknown algorithm '" + s + "' (expected zero|ilqr)");
}

inline bool parse_switch(const std::string& s) {
  if (s == "on" || s == "true" || s == "1") {
    return true;
  }
  if (s == "off" || s == "false" || s == "0") {
    return false;
  }
  throw std::invalid_argument("expected on|off, got '" + s + "'");
}

namespace detail {

/// Numbers separated by commas and/or whitespace.
inline std::vector<double> parse_numbers(const std::string& key, std::string text) {
  for (char& c : text) {
    if (c == ',') {
      c = ' ';
    }
  }
  std::istringstream in(text);
  std::vector<double> out;
  std::string tok;
  while (in >> tok) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != tok.size()) {
      throw std::invalid_argument("config: '" + key + "' has a non-numeric entry '" + tok + "'");
    }
    out.push_back(v);
  }
  return out;
}

template <int N>
Eigen::Matrix<double, N, 1> parse_vector(const std::string& key, const std::string& text) {
  const auto v = parse_numbers(key, text);
  if (static_cast<int>(v.size()) != N) {
    throw std::invalid_argument("config: '" + key + "' needs " + std::to_string(N) + " values");
  }
  return Eigen::Map<const Eigen::Matrix<double, N, 1>>(v.data());
}

inline double parse_scalar(const std::string& key, const std::string& text) {
  return parse_vector<1>(key, text)(0);
}

inline long long parse_integer(const std::string& key, const std::string& text) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) {
    throw std::invalid_argument("config: '" + key + "' must be an integer");
  }
  return v;
}

}  // namespace detail

/// Reads an INI-style config: `key = value` lines grouped under [model],
/// [initial], [filter] and [ilqr]. Vectors are comma or space separated.
/// Unknown sections or keys are errors; absent keys keep their defaults.
inline ExperimentConfig parse_config(std::istream& in) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  ExperimentConfig cfg;
  for (const auto& [section, body] : tree) {
    for (const auto& [key, node] : body) {
      const std::string full = section + "." + key;
      const std::string v = node.get_value<std::string>();
      if (section == "model") {
        if (key == "inertia") cfg.model.inertia = detail::parse_vector<3>(full, v);
        else if (key == "control") {
          const auto c = detail::parse_vector<9>(full, v);
          cfg.model.control = Eigen::Map<const Eigen::Matrix<double, 3, 3, Eigen::RowMajor>>(c.data());
        }
        else if (key == "sigma") cfg.model.sigma = detail::parse_scalar(full, v);
        else if (key == "sigma_obs") cfg.model.sigma_obs = detail::parse_scalar(full, v);
        else if (key == "r_g") cfg.model.r_g = detail::parse_vector<3>(full, v);
        else if (key == "r_b") cfg.model.r_b = detail::parse_vector<3>(full, v);
        else if (key == "dt") cfg.model.dt = detail::parse_scalar(full, v);
        else if (key == "steps") cfg.model.steps = static_cast<int>(detail::parse_integer(full, v));
        else throw std::invalid_argument("config: unknown key '" + full + "'");
      } else if (section == "initial") {
        if (key == "covariance_diag") {
          cfg.initial_covariance = detail::parse_vector<6>(full, v).asDiagonal();
        } else if (key == "covariance") {
          const auto c = detail::parse_vector<36>(full, v);
          cfg.initial_covariance = Eigen::Map<const Eigen::Matrix<double, 6, 6, Eigen::RowMajor>>(c.data());
        } else {
          throw std::invalid_argument("config: unknown key '" + full + "'");
        }
      } else if (section == "filter") {
        if (key == "particles") cfg.particles = static_cast<std::size_t>(detail::parse_integer(full, v));
        else if (key == "windows") {
          cfg.windows.clear();
          for (double h : detail::parse_numbers(full, v)) {
            if (h != std::floor(h)) throw std::invalid_argument("config: windows must be integers");
            cfg.windows.push_back(static_cast<int>(h));
          }
        }
        else if (key == "gamma_bar") cfg.gamma_bar = detail::parse_scalar(full, v);
        else if (key == "resampling") cfg.resampling = parse_switch(v);
        else if (key == "algorithm") cfg.algorithm = parse_algorithm(v);
        else if (key == "trials") cfg.trials = static_cast<int>(detail::parse_integer(full, v));
        else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(detail::parse_integer(full, v));
        else throw std::invalid_argument("config: unknown key '" + full + "'");
      } else if (section == "ilqr") {
        if (key == "max_iter") cfg.ilqr.max_iter = static_cast<int>(detail::parse_integer(full, v));
        else if (key == "tol") cfg.ilqr.tol = detail::parse_scalar(full, v);
        else throw std::invalid_argument("config: unknown key '" + full + "'");
      } else {
        throw std::invalid_argument("config: unknown section '" + section + "'");
      }
    }
  }
  cfg.validate();
  return cfg;
}

inline ExperimentConfig parse_config_string(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

namespace detail {

template <class Derived>
nlohmann::json to_array(const Eigen::MatrixBase<Derived>& m) {
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      a.push_back(m(r, c));
    }
  }
  return a;
}

template <int R, int C>
Eigen::Matrix<double, R, C> from_array(const nlohmann::json& a) {
  if (!a.is_array() || a.size() != static_cast<std::size_t>(R * C)) {
    throw std::invalid_argument("config json: wrong array size");
  }
  Eigen::Matrix<double, R, C> m;
  for (int r = 0; r < R; ++r) {
    for (int c = 0; c < C; ++c) {
      m(r, c) = a.at(static_cast<std::size_t>(r * C + c)).get<double>();
    }
  }
  return m;
}

}  // namespace detail

/// Full echo of every effective setting, defaults included. Matrices are row-major.
inline nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["model"] = {{"inertia", detail::to_array(c.model.inertia)},
                {"control", detail::to_array(c.model.control)},
                {"sigma", c.model.sigma},
                {"sigma_obs", c.model.sigma_obs},
                {"r_g", detail::to_array(c.model.r_g)},
                {"r_b", detail::to_array(c.model.r_b)},
                {"dt", c.model.dt},
                {"steps", c.model.steps}};
  j["initial"] = {{"covariance", detail::to_array(c.initial_covariance)}};
  j["filter"] = {{"particles", c.particles},     {"windows", c.windows},
                 {"gamma_bar", c.gamma_bar},     {"resampling", c.resampling},
                 {"algorithm", to_string(c.algorithm)}, {"trials", c.trials},
                 {"seed", c.seed}};
  j["ilqr"] = {{"max_iter", c.ilqr.max_iter}, {"tol", c.ilqr.tol}};
  return j;
}

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  const auto& m = j.at("model");
  c.model.inertia = detail::from_array<3, 1>(m.at("inertia"));
  c.model.control = detail::from_array<3, 3>(m.at("control"));
  c.model.sigma = m.at("sigma").get<double>();
  c.model.sigma_obs = m.at("sigma_obs").get<double>();
  c.model.r_g = detail::from_array<3, 1>(m.at("r_g"));
  c.model.r_b = detail::from_array<3, 1>(m.at("r_b"));
  c.model.dt = m.at("dt").get<double>();
  c.model.steps = m.at("steps").get<int>();
  c.initial_covariance = detail::from_array<6, 6>(j.at("initial").at("covariance"));
  const auto& f = j.at("filter");
  c.particles = f.at("particles").get<std::size_t>();
  c.windows = f.at("windows").get<std::vector<int>>();
  c.gamma_bar = f.at("gamma_bar").get<double>();
  c.resampling = f.at("resampling").get<bool>();
  c.algorithm = parse_algorithm(f.at("algorithm").get<std::string>());
  c.trials = f.at("trials").get<int>();
  c.seed = f.at("seed").get<std::uint64_t>();
  c.ilqr.max_iter = j.at("ilqr").at("max_iter").get<int>();
  c.ilqr.tol = j.at("ilqr").at("tol").get<double>();
  return c;
}

}  // namespace liepf
