// Copyright 2026 The mecopt Authors
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

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "mecopt/errors.hpp"
#include "mecopt/inner_solver.hpp"
#include "mecopt/model.hpp"
#include "mecopt/numerics.hpp"
#include "mecopt/parallel.hpp"

namespace mecopt::admm {

/// Consensus ADMM over the joint placement/allocation problem. Every
/// user holds a binary placement bit plus local copies (x, y, z) of
/// the shared bandwidth fraction, edge CPU share and broadcast time;
/// the global step projects the copies back onto the coupling budgets.
///
/// Edge CPU quantities (y, f_c and their multiplier phi) are carried
/// as fractions of the edge budget F_c so all consensus variables are
/// O(1) and one absolute stopping threshold applies to each group.

struct Locals {
  std::vector<std::uint8_t> b;     ///< 1 = compute locally
  std::vector<double> local_freq;  ///< f_l [cycles/s]
  std::vector<double> x;           ///< copy of a
  std::vector<double> y;           ///< copy of f_c (budget fraction)
  std::vector<double> z;           ///< copy of tau_0 [s]
};

struct Globals {
  std::vector<double> a;
  std::vector<double> f_c;  ///< budget fraction
  double tau_0 = 0.0;
};

struct Multipliers {
  std::vector<double> rho;     ///< for x = a
  std::vector<double> phi;     ///< for y = f_c
  std::vector<double> varphi;  ///< for z = tau_0
};

struct State {
  Locals locals;
  Globals globals;
  Multipliers multipliers;
  double step_c = 2.0;
  long iteration = 0;
};

struct Options {
  double step_c = 2.0;
  long max_iterations = 2000;
  double sigma1_per_user = 0.0005;  ///< sigma_1 = this * K
  double scalar_tol = 1e-12;        ///< bracket width for 1-D subproblems
  bool parallel_local = false;
};

struct Diagnostics {
  std::vector<double> absolute_residual;
  std::vector<double> relative_residual;
  std::vector<double> objective;  ///< sum of local objectives q_k
  long iterations = 0;
  bool converged = false;
  double wall_seconds = 0.0;
};

struct Result {
  TecReport report;
  Diagnostics diagnostics;
  State state;
};

/// Multipliers at zero, everyone marked local, equal bandwidth split,
/// and the broadcast time of the worst downlink channel over all users.
inline State initial_state(const ProblemInstance& instance,
                           const Options& opts = {}) {
  const int K = instance.user_count();
  State s;
  s.step_c = opts.step_c;
  s.locals.b.assign(static_cast<std::size_t>(K), 1);
  s.locals.local_freq.assign(static_cast<std::size_t>(K), 0.0);
  s.locals.x.assign(static_cast<std::size_t>(K), 0.0);
  s.locals.y.assign(static_cast<std::size_t>(K), 0.0);
  s.locals.z.assign(static_cast<std::size_t>(K), 0.0);
  s.globals.a.assign(static_cast<std::size_t>(K), 1.0 / K);
  s.globals.f_c.assign(static_cast<std::size_t>(K), 1.0 / K);
  double h_min = std::numeric_limits<double>::infinity();
  for (const UserParams& u : instance.users) {
    h_min = std::min(h_min, u.downlink_gain);
  }
  s.globals.tau_0 =
      instance.config.program_size /
      downlink_rate(instance.config.downlink_bandwidth, h_min, instance.config);
  s.multipliers.rho.assign(static_cast<std::size_t>(K), 0.0);
  s.multipliers.phi.assign(static_cast<std::size_t>(K), 0.0);
  s.multipliers.varphi.assign(static_cast<std::size_t>(K), 0.0);
  return s;
}

namespace detail {

/// Smallest admissible local copy of the broadcast time for a user
/// that keeps the program: the time to deliver it over that user's own
/// downlink channel.
inline double min_broadcast_time(const UserParams& u,
                                 const SystemConfig& cfg) {
  return cfg.program_size /
         downlink_rate(cfg.downlink_bandwidth, u.downlink_gain, cfg);
}

/// Expands `hi` until the non-decreasing derivative turns positive,
/// then bisects.
template <class F>
double solve_scalar(F&& derivative, double lo, double hi, double tol,
                    int user) {
  for (int i = 0; i < 200 && derivative(hi) <= 0.0; ++i) {
    hi *= 2.0;
    if (i == 199) {
      throw SolverFailure("local subproblem for user " + std::to_string(user) +
                          ": derivative stays negative");
    }
  }
  return minimize_scalar_convex(derivative, {lo, hi, tol});
}

}  // namespace detail

/// Step 1: for every user solve the keep-the-program (b=1) and the
/// offload (b=0) proximal subproblems and keep the cheaper branch.
/// The b=1 minimizers are closed-form; the b=0 bandwidth-copy and
/// CPU-copy updates are 1-D convex solves on monotone derivatives.
inline Locals local_step(const State& state, const ProblemInstance& instance,
                         const Options& opts = {}) {
  const int K = instance.user_count();
  const SystemConfig& cfg = instance.config;
  const double c = state.step_c;
  const double Fc = cfg.edge_cpu_budget;
  Locals next;
  next.b.assign(static_cast<std::size_t>(K), 0);
  next.local_freq.assign(static_cast<std::size_t>(K), 0.0);
  next.x.assign(static_cast<std::size_t>(K), 0.0);
  next.y.assign(static_cast<std::size_t>(K), 0.0);
  next.z.assign(static_cast<std::size_t>(K), 0.0);

  mecopt::detail::parallel_for(
      K,
      [&](long kk) {
        const auto k = static_cast<std::size_t>(kk);
        const UserParams& u = instance.users[k];
        const double rho = state.multipliers.rho[k];
        const double phi = state.multipliers.phi[k];
        const double varphi = state.multipliers.varphi[k];
        const double a_i = state.globals.a[k];
        const double fc_i = state.globals.f_c[k];
        const double tau0_i = state.globals.tau_0;

        auto penalty = [&](double x, double y, double z) {
          return rho * x + phi * y + varphi * z +
                 0.5 * c *
                     ((x - a_i) * (x - a_i) + (y - fc_i) * (y - fc_i) +
                      (z - tau0_i) * (z - tau0_i));
        };

        // b = 1: local computing.
        const double fl = optimal_local_frequency(u);
        const double x1 = std::max(0.0, a_i - rho / c);
        const double y1 = std::max(0.0, fc_i - phi / c);
        const double z_min = detail::min_broadcast_time(u, cfg);
        const double z1 = std::max(
            z_min, tau0_i - (u.weight_time + u.weight_energy * u.rx_power +
                             varphi) /
                               c);
        const double obj1 =
            weighted_tec(u.weight_time, u.weight_energy,
                         z1 + mecopt::detail::compute_time(u.workload, fl),
                         u.rx_power * z1 +
                             u.energy_coeff * fl * fl * u.workload) +
            penalty(x1, y1, z1);

        // b = 0: offloading.
        const double z0 = std::max(0.0, tau0_i - varphi / c);
        double y0;
        if (u.weight_time * u.workload > 0.0) {
          const double load = u.weight_time * u.workload / Fc;
          y0 = detail::solve_scalar(
              [&](double y) { return -load / (y * y) + phi + c * (y - fc_i); },
              1e-3 / Fc, 10.0, opts.scalar_tol, static_cast<int>(k));
        } else {
          y0 = std::max(0.0, fc_i - phi / c);
        }
        double x0;
        const double tx_weight = u.weight_time + u.weight_energy * u.tx_power;
        if (u.task_bits > 0.0) {
          x0 = detail::solve_scalar(
              [&](double x) {
                const double r = uplink_rate(x, u, cfg);
                return -tx_weight * u.task_bits *
                           uplink_rate_slope(x, u, cfg) / (r * r) +
                       rho + c * (x - a_i);
              },
              1e-9, std::max(1.0, 2.0 * (a_i + std::abs(rho) / c)),
              opts.scalar_tol, static_cast<int>(k));
        } else {
          x0 = std::max(0.0, a_i - rho / c);
        }
        double obj0 = penalty(x0, y0, z0);
        if (u.task_bits > 0.0) {
          obj0 += tx_weight * u.task_bits / uplink_rate(x0, u, cfg);
        }
        if (u.weight_time * u.workload > 0.0) {
          obj0 += u.weight_time * u.workload / (y0 * Fc);
        }

        next.local_freq[k] = fl;
        if (obj1 < obj0) {
          next.b[k] = 1;
          next.x[k] = x1;
          next.y[k] = y1;
          next.z[k] = z1;
        } else {
          next.b[k] = 0;
          next.x[k] = x0;
          next.y[k] = y0;
          next.z[k] = z0;
        }
      },
      opts.parallel_local);
  return next;
}

/// Step 2: project the fresh local copies onto the coupled budgets.
/// Each budget price is found by bisection on the monotone residual of
/// the water-filling form (x + (rho - psi)/c)^+.
inline Globals global_step(const State& state,
                           const ProblemInstance& instance) {
  const int K = instance.user_count();
  const double c = state.step_c;
  Globals next;
  next.a.resize(static_cast<std::size_t>(K));
  next.f_c.resize(static_cast<std::size_t>(K));

  auto project = [&](const std::vector<double>& copies,
                     const std::vector<double>& mults, double budget,
                     std::vector<double>& out) {
    auto shares = [&](double price) {
      double total = 0.0;
      for (std::size_t k = 0; k < copies.size(); ++k) {
        total += std::max(0.0, copies[k] + (mults[k] - price) / c);
      }
      return total;
    };
    double price = 0.0;
    if (shares(0.0) > budget) {
      double cap = 0.0;
      for (std::size_t k = 0; k < copies.size(); ++k) {
        cap = std::max(cap, c * copies[k] + std::abs(mults[k]));
      }
      while (shares(cap) > budget) cap *= 2.0;
      price = minimize_scalar_convex(
          [&](double p) { return budget - shares(p); },
          {0.0, cap, 1e-12 * std::max(1.0, cap)});
    }
    for (std::size_t k = 0; k < copies.size(); ++k) {
      out[k] = std::max(0.0, copies[k] + (mults[k] - price) / c);
    }
  };

  project(state.locals.x, state.multipliers.rho, 1.0, next.a);
  project(state.locals.y, state.multipliers.phi, 1.0, next.f_c);

  double z_sum = 0.0, varphi_sum = 0.0;
  for (int k = 0; k < K; ++k) {
    z_sum += state.locals.z[static_cast<std::size_t>(k)];
    varphi_sum += state.multipliers.varphi[static_cast<std::size_t>(k)];
  }
  next.tau_0 = std::max(0.0, z_sum / K + varphi_sum / (c * K));
  return next;
}

/// Step 3: dual ascent on the consensus gaps.
inline Multipliers multiplier_step(const State& state) {
  const std::size_t K = state.locals.x.size();
  const double c = state.step_c;
  Multipliers next = state.multipliers;
  for (std::size_t k = 0; k < K; ++k) {
    next.rho[k] += c * (state.locals.x[k] - state.globals.a[k]);
    next.phi[k] += c * (state.locals.y[k] - state.globals.f_c[k]);
    next.varphi[k] += c * (state.locals.z[k] - state.globals.tau_0);
  }
  return next;
}

namespace detail {

inline double local_objective(const Locals& locals,
                              const ProblemInstance& instance) {
  double total = 0.0;
  const double Fc = instance.config.edge_cpu_budget;
  for (std::size_t k = 0; k < locals.b.size(); ++k) {
    const UserParams& u = instance.users[k];
    if (locals.b[k]) {
      const double fl = locals.local_freq[k];
      total += weighted_tec(
          u.weight_time, u.weight_energy,
          locals.z[k] + mecopt::detail::compute_time(u.workload, fl),
          u.rx_power * locals.z[k] + u.energy_coeff * fl * fl * u.workload);
    } else {
      if (u.task_bits > 0.0) {
        total += (u.weight_time + u.weight_energy * u.tx_power) * u.task_bits /
                 uplink_rate(locals.x[k], u, instance.config);
      }
      if (u.weight_time * u.workload > 0.0) {
        total += u.weight_time * u.workload / (locals.y[k] * Fc);
      }
    }
  }
  return total;
}

}  // namespace detail

/// Full ADMM run with the two-threshold stopping rule
/// (absolute < 3 sigma_1 and successive-change < 2 sigma_1,
/// sigma_1 = 0.0005 K), followed by rounding: the final placement is
/// read off the b bits and re-solved exactly, which guarantees a
/// feasible report and can only improve the objective. A run that
/// exhausts max_iterations is flagged via diagnostics.converged;
/// the rounded report is still produced.
inline Result solve(const ProblemInstance& instance, const Options& opts = {},
                    const InnerSolverOptions& inner_opts = {}) {
  const auto t_start = std::chrono::steady_clock::now();
  const int K = instance.user_count();
  const double sigma1 = opts.sigma1_per_user * K;

  Result result;
  State& s = result.state;
  s = initial_state(instance, opts);
  Diagnostics& diag = result.diagnostics;

  for (long i = 1; i <= opts.max_iterations; ++i) {
    const Globals prev = s.globals;
    s.locals = local_step(s, instance, opts);
    s.globals = global_step(s, instance);
    s.multipliers = multiplier_step(s);
    s.iteration = i;

    double abs_res = 0.0;
    double rel_res = std::abs(s.globals.tau_0 - prev.tau_0);
    for (std::size_t k = 0; k < static_cast<std::size_t>(K); ++k) {
      abs_res += std::abs(s.locals.x[k] - s.globals.a[k]) +
                 std::abs(s.locals.y[k] - s.globals.f_c[k]) +
                 std::abs(s.locals.z[k] - s.globals.tau_0);
      rel_res += std::abs(s.globals.a[k] - prev.a[k]) +
                 std::abs(s.globals.f_c[k] - prev.f_c[k]);
    }
    diag.absolute_residual.push_back(abs_res);
    diag.relative_residual.push_back(rel_res);
    diag.objective.push_back(detail::local_objective(s.locals, instance));
    if (abs_res < 3.0 * sigma1 && rel_res < 2.0 * sigma1) {
      diag.converged = true;
      break;
    }
  }
  diag.iterations = s.iteration;

  std::vector<int> k1;
  for (int k = 0; k < K; ++k) {
    if (s.locals.b[static_cast<std::size_t>(k)]) k1.push_back(k);
  }
  result.report =
      solve_given_placement(instance, Placement(std::move(k1)), inner_opts);
  result.report.diagnostics.admm_iterations = diag.iterations;
  result.report.diagnostics.converged =
      result.report.diagnostics.converged && diag.converged;
  diag.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  result.report.diagnostics.wall_seconds = diag.wall_seconds;
  return result;
}

}  // namespace mecopt::admm

namespace mecopt {

/// Consensus-ADMM front door; see admm::solve.
inline admm::Result solve_admm(const ProblemInstance& instance,
                               const admm::Options& opts = {}) {
  return admm::solve(instance, opts);
}

}  // namespace mecopt
