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
#include <numbers>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "mecopt/errors.hpp"
#include "mecopt/model.hpp"
#include "mecopt/numerics.hpp"

namespace mecopt {

/// Multipliers of the fixed-placement resource allocation problem:
/// lambda_k for each offloader's rate constraint, mu for the uplink
/// bandwidth budget, nu for the edge CPU budget.
struct DualState {
  std::unordered_map<int, double> lambda;
  double mu = 0.0;
  double nu = 0.0;
};

/// Best local CPU frequency for a user computing locally:
/// min{F_k, cbrt(beta_T / (2 beta_E kappa))}. A pure time weighting
/// clamps to F_k; a pure energy weighting idles the CPU.
inline double optimal_local_frequency(const UserParams& u) {
  if (u.weight_time <= 0.0) return 0.0;
  if (u.weight_energy <= 0.0) return u.max_local_freq;
  return std::min(u.max_local_freq,
                  std::cbrt(u.weight_time /
                            (2.0 * u.weight_energy * u.energy_coeff)));
}

namespace detail {

/// Lagrangian-stationary offloading time: sqrt(lambda I / (bT + bE p)).
inline double offload_time_from_lambda(double lambda, const UserParams& u) {
  const double alpha = u.weight_time + u.weight_energy * u.tx_power;
  return std::sqrt(lambda * u.task_bits / alpha);
}

/// Lagrangian-stationary bandwidth fraction,
///   a = (p g / (W_U N0)) / (-1/W(-exp(-(mu ln2/(lambda W_U) + 1))) - 1).
/// Unbounded as mu/lambda -> 0 (the budget price vanishes) and -> 0 as
/// mu/lambda grows; both limits are resolved without overflow.
inline double bandwidth_from_duals(double lambda, double mu,
                                   const UserParams& u,
                                   const SystemConfig& cfg) {
  const double q =
      u.tx_power * u.uplink_gain / (cfg.uplink_bandwidth * cfg.noise_psd);
  const double t = mu * std::numbers::ln2 / (lambda * cfg.uplink_bandwidth);
  if (t >= 700.0) return 0.0;  // exp(-(t+1)) underflows; W -> 0-
  const double w = lambert_w0(-std::exp(-(t + 1.0)));
  if (w >= -1e-300) return 0.0;
  const double denom = std::max(-1.0 / w - 1.0, 1e-300);
  return q / denom;
}

/// Lagrangian-stationary edge frequency: sqrt(beta_T L / nu).
inline double edge_freq_from_nu(double nu, const UserParams& u) {
  return std::sqrt(u.weight_time * u.workload / nu);
}

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace detail

/// The closed-form primal maps evaluated at a dual point, covering the
/// listed K0 users. Components are projected to >= 1e-12 before use,
/// so the maps stay defined on the whole nonnegative orthant.
struct K0Primal {
  std::unordered_map<int, double> offload_time;
  std::unordered_map<int, double> bandwidth_frac;
  std::unordered_map<int, double> edge_freq;
};

inline K0Primal primal_from_dual(const DualState& duals,
                                 const std::vector<int>& k0,
                                 const ProblemInstance& instance) {
  constexpr double kFloor = 1e-12;
  K0Primal out;
  const double mu = std::max(duals.mu, kFloor);
  const double nu = std::max(duals.nu, kFloor);
  for (int k : k0) {
    const UserParams& u = instance.users[static_cast<std::size_t>(k)];
    auto it = duals.lambda.find(k);
    const double lambda = std::max(it == duals.lambda.end() ? 0.0 : it->second,
                                   kFloor);
    out.offload_time[k] = detail::offload_time_from_lambda(lambda, u);
    out.bandwidth_frac[k] =
        detail::bandwidth_from_duals(lambda, mu, u, instance.config);
    out.edge_freq[k] = detail::edge_freq_from_nu(nu, u);
  }
  return out;
}

struct InnerSolverOptions {
  double stop_tol = 1e-7;     ///< ellipsoid cut-norm target
  double init_radius = 1e4;   ///< in scaled dual units
  double dual_floor = 1e-12;  ///< projection floor for the primal maps
  long max_iter_per_m2 = 500;
};

/// A solved fixed-placement problem with the dual state exposed.
struct InnerSolution {
  TecReport report;
  DualState duals;
};

namespace detail {

/// Everything the dual ascent needs about the offloading side,
/// precomputed once per solve.
struct K0Setup {
  std::vector<int> k0;
  std::vector<int> offload;  ///< members of k0 with task bits to send
  bool nu_active = false;    ///< some k0 user has beta_T * L > 0
  int m = 0;                 ///< dual dimension: |offload| + 1 + nu_active
  std::vector<double> ref;   ///< per-coordinate dual scale guesses

  K0Setup(const ProblemInstance& instance, std::vector<int> k0_in)
      : k0(std::move(k0_in)) {
    const SystemConfig& cfg = instance.config;
    double nu_mass = 0.0;
    for (int k : k0) {
      const UserParams& u = instance.users[static_cast<std::size_t>(k)];
      if (u.task_bits > 0.0) offload.push_back(k);
      nu_mass += u.weight_time * u.workload;
    }
    nu_active = nu_mass > 0.0;
    if (offload.empty()) return;
    const int n = static_cast<int>(offload.size());
    m = n + 1 + (nu_active ? 1 : 0);
    ref.resize(static_cast<std::size_t>(m));

    // Scale each dual coordinate by its value at the equal-split
    // allocation, so the optimum sits near the all-ones point.
    std::vector<double> mu_guesses;
    for (int i = 0; i < n; ++i) {
      const UserParams& u = instance.users[static_cast<std::size_t>(offload[static_cast<std::size_t>(i)])];
      const double alpha = u.weight_time + u.weight_energy * u.tx_power;
      const double r0 = uplink_rate(1.0 / n, u, cfg);
      ref[static_cast<std::size_t>(i)] =
          std::max(alpha * u.task_bits / (r0 * r0), 1e-30);
      const double q =
          u.tx_power * u.uplink_gain / (cfg.uplink_bandwidth * cfg.noise_psd);
      const double s = q * n;
      mu_guesses.push_back(ref[static_cast<std::size_t>(i)] * cfg.uplink_bandwidth /
                           std::numbers::ln2 *
                           (std::log1p(s) - s / (1.0 + s)));
    }
    ref[static_cast<std::size_t>(n)] = std::max(median(std::move(mu_guesses)), 1e-30);
    if (nu_active) {
      std::vector<double> nu_guesses;
      int active_users = 0;
      for (int k : k0) {
        const UserParams& u = instance.users[static_cast<std::size_t>(k)];
        if (u.weight_time * u.workload > 0.0) ++active_users;
      }
      const double f0 = cfg.edge_cpu_budget / active_users;
      for (int k : k0) {
        const UserParams& u = instance.users[static_cast<std::size_t>(k)];
        if (u.weight_time * u.workload > 0.0) {
          nu_guesses.push_back(u.weight_time * u.workload / (f0 * f0));
        }
      }
      ref[static_cast<std::size_t>(m - 1)] = std::max(median(std::move(nu_guesses)), 1e-30);
    }
  }
};

}  // namespace detail

/// Optimal resource allocation for a fixed placement.
///
/// Local users get the closed-form CPU frequency; offloading users are
/// solved through the Lagrange dual, maximized by the ellipsoid method
/// with the constraint residuals as (negated) supergradients. The
/// near-optimal primal is then restored to exact feasibility: both
/// budgets are rescaled to equality (they bind at any optimum, since
/// every multiplier is strictly positive there) and offload times are
/// set by rate equality.
inline InnerSolution solve_given_placement_detailed(
    const ProblemInstance& instance, const Placement& placement,
    const InnerSolverOptions& opts = {}) {
  const auto t_start = std::chrono::steady_clock::now();
  const SystemConfig& cfg = instance.config;
  const int K = instance.user_count();

  InnerSolution solution;
  Allocation alloc;
  for (int k : placement.local_users()) {
    alloc.local_freq[k] =
        optimal_local_frequency(instance.users[static_cast<std::size_t>(k)]);
  }
  alloc.broadcast_time = broadcast_time(cfg, placement, instance.users);

  detail::K0Setup setup(instance, placement.offload_users(K));
  SolverDiagnostics diag;

  if (!setup.k0.empty() && setup.offload.empty()) {
    // No uplink traffic: the CPU budget splits in closed form,
    // proportionally to sqrt(beta_T L).
    for (int k : setup.k0) {
      alloc.bandwidth_frac[k] = 0.0;
      alloc.offload_time[k] = 0.0;
    }
    if (setup.nu_active) {
      double wsum = 0.0;
      for (int k : setup.k0) {
        const UserParams& u = instance.users[static_cast<std::size_t>(k)];
        wsum += std::sqrt(u.weight_time * u.workload);
      }
      for (int k : setup.k0) {
        const UserParams& u = instance.users[static_cast<std::size_t>(k)];
        alloc.edge_freq[k] =
            cfg.edge_cpu_budget * std::sqrt(u.weight_time * u.workload) / wsum;
      }
    } else {
      for (int k : setup.k0) {
        alloc.edge_freq[k] = cfg.edge_cpu_budget / setup.k0.size();
      }
    }
  } else if (!setup.offload.empty()) {
    const int n = static_cast<int>(setup.offload.size());
    const int m = setup.m;
    const int mu_idx = n;
    const int nu_idx = setup.nu_active ? m - 1 : -1;

    double best_value = -std::numeric_limits<double>::infinity();
    std::vector<double> best_raw(static_cast<std::size_t>(m), 1e-6);

    auto oracle = [&](std::span<const double> scaled) {
      std::vector<double> cut(static_cast<std::size_t>(m), 0.0);
      for (int j = 0; j < m; ++j) {
        if (scaled[static_cast<std::size_t>(j)] < 0.0) {
          cut[static_cast<std::size_t>(j)] = -1.0;  // keep the half-space x_j >= center_j
          return cut;
        }
      }
      const double mu = std::max(
          scaled[static_cast<std::size_t>(mu_idx)] * setup.ref[static_cast<std::size_t>(mu_idx)],
          opts.dual_floor);
      const double nu =
          setup.nu_active
              ? std::max(scaled[static_cast<std::size_t>(nu_idx)] *
                             setup.ref[static_cast<std::size_t>(nu_idx)],
                         opts.dual_floor)
              : 0.0;
      double value = -mu;
      double sum_a = 0.0;
      for (int i = 0; i < n; ++i) {
        const UserParams& u =
            instance.users[static_cast<std::size_t>(setup.offload[static_cast<std::size_t>(i)])];
        const double lambda =
            std::max(scaled[static_cast<std::size_t>(i)] * setup.ref[static_cast<std::size_t>(i)],
                     opts.dual_floor);
        const double alpha = u.weight_time + u.weight_energy * u.tx_power;
        const double tau = detail::offload_time_from_lambda(lambda, u);
        const double a = detail::bandwidth_from_duals(lambda, mu, u, cfg);
        const double rate = uplink_rate(a, u, cfg);
        value += 2.0 * std::sqrt(alpha * lambda * u.task_bits);
        value += mu * a - lambda * rate;
        sum_a += a;
        cut[static_cast<std::size_t>(i)] =
            -setup.ref[static_cast<std::size_t>(i)] * (u.task_bits / tau - rate);
      }
      cut[static_cast<std::size_t>(mu_idx)] =
          -setup.ref[static_cast<std::size_t>(mu_idx)] * (sum_a - 1.0);
      if (setup.nu_active) {
        double sum_fc = 0.0;
        for (int k : setup.k0) {
          const UserParams& u = instance.users[static_cast<std::size_t>(k)];
          sum_fc += detail::edge_freq_from_nu(nu, u);
          value += 2.0 * std::sqrt(u.weight_time * u.workload * nu);
        }
        value -= nu * cfg.edge_cpu_budget;
        cut[static_cast<std::size_t>(nu_idx)] =
            -setup.ref[static_cast<std::size_t>(nu_idx)] * (sum_fc - cfg.edge_cpu_budget);
      }
      if (value > best_value) {
        best_value = value;
        for (int j = 0; j < m; ++j) {
          best_raw[static_cast<std::size_t>(j)] = std::max(
              scaled[static_cast<std::size_t>(j)] * setup.ref[static_cast<std::size_t>(j)],
              opts.dual_floor);
        }
      }
      return cut;
    };

    const std::vector<double> ones(static_cast<std::size_t>(m), 1.0);
    const long max_iter = opts.max_iter_per_m2 * m * m;
    double radius = opts.init_radius;
    EllipsoidResult res;
    for (int attempt = 0;; ++attempt) {
      bool degenerate = false;
      try {
        res = ellipsoid_maximize(oracle, ones, radius, opts.stop_tol, max_iter);
      } catch (const DegenerateCut&) {
        degenerate = true;
      }
      diag.ellipsoid_iterations += degenerate ? max_iter : res.iterations;
      bool boundary_hit = false;
      for (double c : res.center) {
        if (std::abs(c - 1.0) > 0.5 * radius) boundary_hit = true;
      }
      if (!degenerate && !boundary_hit) break;
      if (attempt >= 1) break;  // one automatic restart
      radius *= 100.0;
      ++diag.restarts;
    }
    diag.dual_gap_bound = res.final_cut_norm;
    diag.dual_value = best_value;
    diag.converged = res.converged;
    if (!res.converged && res.final_cut_norm > 10.0 * opts.stop_tol) {
      throw SolverFailure(
          "dual ascent stalled: cut norm " + std::to_string(res.final_cut_norm) +
          " after " + std::to_string(diag.ellipsoid_iterations) +
          " iterations (" + std::to_string(diag.restarts) + " restarts)");
    }

    for (int i = 0; i < n; ++i) {
      solution.duals.lambda[setup.offload[static_cast<std::size_t>(i)]] =
          best_raw[static_cast<std::size_t>(i)];
    }
    solution.duals.mu = best_raw[static_cast<std::size_t>(mu_idx)];
    solution.duals.nu = setup.nu_active ? best_raw[static_cast<std::size_t>(nu_idx)] : 0.0;

    // Primal restoration: normalize both budgets to equality and make
    // every rate constraint tight.
    double sum_a = 0.0;
    for (int i = 0; i < n; ++i) {
      const int k = setup.offload[static_cast<std::size_t>(i)];
      const UserParams& u = instance.users[static_cast<std::size_t>(k)];
      alloc.bandwidth_frac[k] = detail::bandwidth_from_duals(
          solution.duals.lambda[k], solution.duals.mu, u, cfg);
      sum_a += alloc.bandwidth_frac[k];
    }
    for (int k : setup.offload) {
      const UserParams& u = instance.users[static_cast<std::size_t>(k)];
      alloc.bandwidth_frac[k] =
          sum_a > 0.0 ? alloc.bandwidth_frac[k] / sum_a : 1.0 / n;
      alloc.offload_time[k] =
          u.task_bits / uplink_rate(alloc.bandwidth_frac[k], u, cfg);
    }
    for (int k : setup.k0) {
      if (!alloc.bandwidth_frac.count(k)) {
        alloc.bandwidth_frac[k] = 0.0;
        alloc.offload_time[k] = 0.0;
      }
    }
    if (setup.nu_active) {
      double sum_fc = 0.0;
      for (int k : setup.k0) {
        const UserParams& u = instance.users[static_cast<std::size_t>(k)];
        alloc.edge_freq[k] = detail::edge_freq_from_nu(solution.duals.nu, u);
        sum_fc += alloc.edge_freq[k];
      }
      for (int k : setup.k0) {
        alloc.edge_freq[k] *= cfg.edge_cpu_budget / sum_fc;
      }
    } else {
      // Zero time weight everywhere: edge speed has no cost impact,
      // split the budget evenly to keep the report finite.
      for (int k : setup.k0) {
        alloc.edge_freq[k] = cfg.edge_cpu_budget / setup.k0.size();
      }
    }
  }

  solution.report = evaluate(instance, placement, alloc);
  solution.report.diagnostics = diag;
  solution.report.diagnostics.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  return solution;
}

inline TecReport solve_given_placement(const ProblemInstance& instance,
                                       const Placement& placement,
                                       const InnerSolverOptions& opts = {}) {
  return solve_given_placement_detailed(instance, placement, opts).report;
}

}  // namespace mecopt
