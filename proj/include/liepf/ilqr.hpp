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

#include <Eigen/Dense>

#include <cmath>
#include <concepts>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

/// \file
/// Iterative LQR over a window of steps for problems whose state lives on a
/// manifold. The problem supplies the noiseless transition, a retraction and
/// its local inverse (the chart used for linearization), the stage cost and a
/// local quadratic model of it. Dynamics Jacobians are taken by central
/// finite differences in the local chart.

namespace liepf::ilqr {

template <int Rows, int Cols>
using Matrix = Eigen::Matrix<double, Rows, Cols>;
template <int Rows>
using Vector = Eigen::Matrix<double, Rows, 1>;

/// Second-order model of a stage cost around (state, control), in local
/// coordinates for the state.
template <int Nx, int Nu>
struct StageQuadratic {
  Vector<Nx> lx = Vector<Nx>::Zero();
  Vector<Nu> lu = Vector<Nu>::Zero();
  Matrix<Nx, Nx> lxx = Matrix<Nx, Nx>::Zero();
  Matrix<Nu, Nu> luu = Matrix<Nu, Nu>::Zero();
  Matrix<Nu, Nx> lux = Matrix<Nu, Nx>::Zero();
};

template <int Nx, int Nu>
struct Linearization {
  Matrix<Nx, Nx> a;
  Matrix<Nx, Nu> b;
};

// clang-format off
template <class P>
concept ControlProblem = requires(const P& p, const typename P::State& s,
                                  const Vector<P::kStateDim>& dx,
                                  const Vector<P::kControlDim>& u, int i) {
  { p.begin() } -> std::convertible_to<int>;
  { p.end() } -> std::convertible_to<int>;
  { p.step(s, u, i) } -> std::convertible_to<typename P::State>;
  { p.retract(s, dx) } -> std::convertible_to<typename P::State>;
  { p.local_error(s, s) } -> std::convertible_to<Vector<P::kStateDim>>;
  { p.stage_cost(i, s, u) } -> std::convertible_to<double>;
  { p.quadratize(i, s, u) }
      -> std::convertible_to<StageQuadratic<P::kStateDim, P::kControlDim>>;
};
// clang-format on

struct Options {
  int max_iter = 50;
  double tol = 1e-6;           ///< relative cost improvement that ends the iteration
  double fd_step = 1e-5;       ///< finite-difference step for dynamics Jacobians
  double lambda_init = 1e-6;   ///< Levenberg term added to Quu
  double lambda_factor = 10.0;
  int max_escalations = 8;
  int line_search_steps = 7;   ///< alpha in {1, 1/2, ..., 1/64}
};

/// Time-varying affine feedback law over the window [begin, begin + n):
///   u_i = ubar_i + k_i + K_i local_error(s, sbar_i).
template <ControlProblem P>
struct Policy {
  using State = typename P::State;
  using Control = Vector<P::kControlDim>;
  using Gain = Matrix<P::kControlDim, P::kStateDim>;

  int begin = 0;
  std::vector<State> nominal_states;  ///< n + 1 states
  std::vector<Control> nominal_controls;
  std::vector<Control> feedforward;
  std::vector<Gain> feedback;

  int end() const { return begin + static_cast<int>(nominal_controls.size()); }
  bool contains(int i) const { return i >= begin && i < end(); }
};

struct Report {
  int iterations = 0;
  double zero_control_cost = 0.0;
  double initial_cost = 0.0;  ///< cost of the starting nominal (zero or warm start)
  double final_cost = 0.0;
  bool converged = false;
  std::vector<double> cost_history;  ///< cost after each accepted iteration, starting with initial_cost
  std::vector<double> lambda_history;
};

template <ControlProblem P>
struct Solution {
  Policy<P> policy;
  Report report;
};

/// Deployed control at index i (alpha = 1). If the local error is undefined
/// (e.g. a relative rotation of pi) the feedback term is dropped.
template <ControlProblem P>
typename Policy<P>::Control policy_eval(const P& problem, const Policy<P>& policy,
                                        const typename P::State& s, int i) {
  if (!policy.contains(i)) {
    throw std::out_of_range("policy_eval: index outside policy window");
  }
  const auto k = static_cast<std::size_t>(i - policy.begin);
  typename Policy<P>::Control u = policy.nominal_controls[k] + policy.feedforward[k];
  try {
    u += policy.feedback[k] * problem.local_error(s, policy.nominal_states[k]);
  } catch (const std::domain_error&) {
  }
  return u;
}

/// Central-difference Jacobians of the noiseless transition in the local chart.
template <ControlProblem P>
Linearization<P::kStateDim, P::kControlDim> linearize_dynamics(
    const P& problem, const typename P::State& s, const Vector<P::kControlDim>& u, int i,
    double h) {
  constexpr int nx = P::kStateDim;
  constexpr int nu = P::kControlDim;
  const typename P::State f0 = problem.step(s, u, i);
  Linearization<nx, nu> lin;
  for (int j = 0; j < nx; ++j) {
    Vector<nx> d = Vector<nx>::Zero();
    d(j) = h;
    const auto plus = problem.local_error(problem.step(problem.retract(s, d), u, i), f0);
    const auto minus = problem.local_error(problem.step(problem.retract(s, -d), u, i), f0);
    lin.a.col(j) = (plus - minus) / (2.0 * h);
  }
  for (int j = 0; j < nu; ++j) {
    Vector<nu> d = Vector<nu>::Zero();
    d(j) = h;
    const auto plus = problem.local_error(problem.step(s, u + d, i), f0);
    const auto minus = problem.local_error(problem.step(s, u - d, i), f0);
    lin.b.col(j) = (plus - minus) / (2.0 * h);
  }
  return lin;
}

template <int Nx, int Nu>
struct Gains {
  std::vector<Vector<Nu>> k;
  std::vector<Matrix<Nu, Nx>> gain;
};

/// Riccati recursion for the affine policy. Returns nullopt when some
/// Quu + lambda I is not positive definite.
template <int Nx, int Nu>
std::optional<Gains<Nx, Nu>> backward_pass(const std::vector<Linearization<Nx, Nu>>& lins,
                                            const std::vector<StageQuadratic<Nx, Nu>>& quads,
                                            double lambda) {
  const std::size_t n = lins.size();
  Gains<Nx, Nu> out;
  out.k.resize(n);
  out.gain.resize(n);
  Vector<Nx> vx = Vector<Nx>::Zero();
  Matrix<Nx, Nx> vxx = Matrix<Nx, Nx>::Zero();
  for (std::size_t r = n; r-- > 0;) {
    const auto& a = lins[r].a;
    const auto& b = lins[r].b;
    const auto& q = quads[r];
    const Vector<Nx> qx = q.lx + a.transpose() * vx;
    const Vector<Nu> qu = q.lu + b.transpose() * vx;
    const Matrix<Nx, Nx> qxx = q.lxx + a.transpose() * vxx * a;
    Matrix<Nu, Nu> quu = q.luu + b.transpose() * vxx * b;
    quu = 0.5 * (quu + quu.transpose()).eval();
    quu.diagonal().array() += lambda;
    const Matrix<Nu, Nx> qux = q.lux + b.transpose() * vxx * a;

    const Eigen::LLT<Matrix<Nu, Nu>> llt(quu);
    if (llt.info() != Eigen::Success) {
      return std::nullopt;
    }
    const Vector<Nu> k = -llt.solve(qu);
    const Matrix<Nu, Nx> gain = -llt.solve(qux);
    out.k[r] = k;
    out.gain[r] = gain;

    vx = qx + gain.transpose() * quu * k + gain.transpose() * qu + qux.transpose() * k;
    vxx = qxx + gain.transpose() * quu * gain + gain.transpose() * qux + qux.transpose() * gain;
    vxx = 0.5 * (vxx + vxx.transpose()).eval();
  }
  return out;
}

template <ControlProblem P>
struct Rollout {
  std::vector<typename P::State> states;
  std::vector<Vector<P::kControlDim>> controls;
  double cost = 0.0;
};

/// Noiseless rollout of fixed controls from s0.
template <ControlProblem P>
Rollout<P> rollout(const P& problem, const typename P::State& s0,
                   const std::vector<Vector<P::kControlDim>>& controls) {
  Rollout<P> out;
  out.states.reserve(controls.size() + 1);
  out.states.push_back(s0);
  out.controls = controls;
  for (std::size_t r = 0; r < controls.size(); ++r) {
    const int i = problem.begin() + static_cast<int>(r);
    out.cost += problem.stage_cost(i, out.states.back(), controls[r]);
    out.states.push_back(problem.step(out.states.back(), controls[r], i));
  }
  return out;
}

/// Rolls u_i = ubar_i + alpha k_i + K_i local_error(s_i, sbar_i) from the
/// nominal's initial state.
template <ControlProblem P>
Rollout<P> forward_pass(const P& problem, const Rollout<P>& nominal,
                        const Gains<P::kStateDim, P::kControlDim>& gains, double alpha) {
  Rollout<P> out;
  const std::size_t n = nominal.controls.size();
  out.states.reserve(n + 1);
  out.controls.reserve(n);
  out.states.push_back(nominal.states.front());
  for (std::size_t r = 0; r < n; ++r) {
    const int i = problem.begin() + static_cast<int>(r);
    const auto& s = out.states.back();
    const Vector<P::kControlDim> u = nominal.controls[r] + alpha * gains.k[r] +
                                     gains.gain[r] * problem.local_error(s, nominal.states[r]);
    out.cost += problem.stage_cost(i, s, u);
    out.controls.push_back(u);
    out.states.push_back(problem.step(s, u, i));
  }
  return out;
}

/// Minimizes sum_i stage_cost(i, s_i, u_i) over the problem window subject to
/// the noiseless transition, starting from `s0`. Iterates from zero control,
/// or from `warm_start` when it is cheaper. Always returns the best iterate.
template <ControlProblem P>
Solution<P> solve(const P& problem, const typename P::State& s0, const Options& opts = {},
                  const std::vector<Vector<P::kControlDim>>* warm_start = nullptr) {
  constexpr int nx = P::kStateDim;
  constexpr int nu = P::kControlDim;
  using Control = Vector<nu>;
  const int n = problem.end() - problem.begin();
  if (n <= 0) {
    throw std::invalid_argument("ilqr::solve: empty window");
  }

  Report report;
  Rollout<P> nominal = rollout(problem, s0, std::vector<Control>(n, Control::Zero()));
  report.zero_control_cost = nominal.cost;
  if (warm_start != nullptr && static_cast<int>(warm_start->size()) == n) {
    Rollout<P> warm = rollout(problem, s0, *warm_start);
    if (warm.cost < nominal.cost) {
      nominal = std::move(warm);
    }
  }
  report.initial_cost = nominal.cost;
  report.cost_history.push_back(nominal.cost);

  std::vector<Linearization<nx, nu>> lins(n);
  std::vector<StageQuadratic<nx, nu>> quads(n);
  double lambda = opts.lambda_init;

  for (int iter = 0; iter < opts.max_iter; ++iter) {
    for (int r = 0; r < n; ++r) {
      const int i = problem.begin() + r;
      lins[r] = linearize_dynamics(problem, nominal.states[r], nominal.controls[r], i,
                                   opts.fd_step);
      quads[r] = problem.quadratize(i, nominal.states[r], nominal.controls[r]);
    }

    std::optional<Gains<nx, nu>> pass;
    for (int esc = 0; esc <= opts.max_escalations; ++esc) {
      pass = backward_pass(lins, quads, lambda);
      if (pass) {
        break;
      }
      lambda *= opts.lambda_factor;
    }
    report.lambda_history.push_back(lambda);
    if (!pass) {
      break;
    }
    const Gains<nx, nu>& gains = *pass;

    std::optional<Rollout<P>> accepted;
    double alpha = 1.0;
    for (int ls = 0; ls < opts.line_search_steps; ++ls, alpha *= 0.5) {
      Rollout<P> trial = forward_pass(problem, nominal, gains, alpha);
      if (std::isfinite(trial.cost) && trial.cost < nominal.cost) {
        accepted = std::move(trial);
        break;
      }
    }
    report.iterations = iter + 1;
    if (!accepted) {
      report.converged = true;
      break;
    }
    const double improvement = nominal.cost - accepted->cost;
    nominal = std::move(*accepted);
    report.cost_history.push_back(nominal.cost);
    lambda = std::max(opts.lambda_init, lambda / opts.lambda_factor);
    if (improvement <= opts.tol * std::max(1.0, std::abs(nominal.cost))) {
      report.converged = true;
      break;
    }
  }

  // Feedback gains about the returned nominal, feedforward zero: the deployed
  // law reproduces the nominal exactly and stabilizes deviations from it.
  for (int r = 0; r < n; ++r) {
    const int i = problem.begin() + r;
    lins[r] = linearize_dynamics(problem, nominal.states[r], nominal.controls[r], i,
                                 opts.fd_step);
    quads[r] = problem.quadratize(i, nominal.states[r], nominal.controls[r]);
  }
  // undamped first so the gains are the exact Riccati gains when Quu allows it
  std::optional<Gains<nx, nu>> final_pass = backward_pass(lins, quads, 0.0);
  lambda = opts.lambda_init;
  for (int esc = 0; esc <= opts.max_escalations && !final_pass; ++esc) {
    final_pass = backward_pass(lins, quads, lambda);
    if (!final_pass) {
      lambda *= opts.lambda_factor;
    }
  }

  Solution<P> sol;
  sol.policy.begin = problem.begin();
  sol.policy.nominal_states = nominal.states;
  sol.policy.nominal_controls = nominal.controls;
  sol.policy.feedforward.assign(n, Control::Zero());
  if (final_pass) {
    sol.policy.feedback = std::move(final_pass->gain);
  } else {
    sol.policy.feedback.assign(n, Matrix<nu, nx>::Zero());
  }
  report.final_cost = nominal.cost;
  sol.report = std::move(report);
  return sol;
}

}  // namespace liepf::ilqr
