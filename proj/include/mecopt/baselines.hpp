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

#include <vector>

#include "mecopt/inner_solver.hpp"
#include "mecopt/model.hpp"

namespace mecopt {

/// Benchmark: nobody receives the program, everyone offloads, and the
/// shared resources are still allocated optimally. Independent of the
/// program size by construction.
inline TecReport all_edge(const ProblemInstance& instance,
                          const InnerSolverOptions& opts = {}) {
  return solve_given_placement(instance, Placement{}, opts);
}

/// Benchmark: static equal splits and selfish choices. Each user is
/// assigned W_U/K uplink, W_D/K downlink (unicast program delivery)
/// and F_c/K edge CPU up front, then privately picks the cheaper of
/// local and edge computing. No user can violate a budget: the shares
/// sum to the budgets by construction.
inline TecReport independent_optimization(const ProblemInstance& instance) {
  const int K = instance.user_count();
  const SystemConfig& cfg = instance.config;
  TecReport report;
  report.time_s.assign(static_cast<std::size_t>(K), 0.0);
  report.energy_j.assign(static_cast<std::size_t>(K), 0.0);
  report.tec.assign(static_cast<std::size_t>(K), 0.0);

  std::vector<int> local;
  for (int k = 0; k < K; ++k) {
    const UserParams& u = instance.users[static_cast<std::size_t>(k)];

    const double unicast =
        downlink_rate(cfg.downlink_bandwidth / K, u.downlink_gain, cfg);
    const double t_dl = cfg.program_size / unicast;
    const double fl = optimal_local_frequency(u);
    const double t_local = t_dl + detail::compute_time(u.workload, fl);
    const double e_local =
        u.rx_power * t_dl + u.energy_coeff * fl * fl * u.workload;
    const double tec_local =
        weighted_tec(u.weight_time, u.weight_energy, t_local, e_local);

    const double share = 1.0 / K;
    const double rate = uplink_rate(share, u, cfg);
    const double tau_u =
        u.task_bits > 0.0 ? u.task_bits / rate : 0.0;
    const double t_edge =
        tau_u + detail::compute_time(u.workload, cfg.edge_cpu_budget / K);
    const double e_edge = u.tx_power * tau_u;
    const double tec_edge =
        weighted_tec(u.weight_time, u.weight_energy, t_edge, e_edge);

    const auto idx = static_cast<std::size_t>(k);
    if (tec_local < tec_edge) {
      local.push_back(k);
      report.allocation.local_freq[k] = fl;
      report.time_s[idx] = t_local;
      report.energy_j[idx] = e_local;
      report.tec[idx] = tec_local;
    } else {
      report.allocation.bandwidth_frac[k] = share;
      report.allocation.offload_time[k] = tau_u;
      report.allocation.edge_freq[k] = cfg.edge_cpu_budget / K;
      report.time_s[idx] = t_edge;
      report.energy_j[idx] = e_edge;
      report.tec[idx] = tec_edge;
    }
    report.objective += report.tec[idx];
  }
  // Downloads here are per-user unicasts, so there is no shared
  // broadcast time; each local user's delivery time lives in time_s.
  report.allocation.broadcast_time = 0.0;
  report.placement = Placement(std::move(local));
  return report;
}

}  // namespace mecopt
