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
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <unordered_map>
#include <vector>

#include "mecopt/errors.hpp"

namespace mecopt {

/// Shared system constants of the access point / edge server.
///
/// Units are SI throughout: Hz, W, W/Hz, bits, CPU cycles/s.
struct SystemConfig {
  double uplink_bandwidth = 2e6;    ///< W_U, FDMA band shared by offloaders
  double downlink_bandwidth = 2e6;  ///< W_D, broadcast band
  double noise_psd = 3.9810717055349694e-21;  ///< N0 (-174 dBm/Hz)
  double ap_power = 1.0;            ///< p0, downlink transmit power
  double program_size = 32e6;       ///< S, service program size in bits
  double edge_cpu_budget = 20e9;    ///< F_c, total edge CPU frequency
};

/// Per-user task, hardware and channel parameters.
struct UserParams {
  double task_bits = 8e6;        ///< I_k, input data to process
  double workload = 8e9;         ///< L_k, CPU cycles to complete the task
  double max_local_freq = 1e9;   ///< F_k, local CPU frequency cap
  double energy_coeff = 1e-28;   ///< kappa_k, J*s^2/cycles^3
  double tx_power = 0.1;         ///< p_k, uplink transmit power
  double rx_power = 0.01;        ///< p_k^r, receiver circuit power
  double weight_time = 0.1;      ///< beta_T
  double weight_energy = 0.9;    ///< beta_E = 1 - beta_T
  double uplink_gain = 1e-12;    ///< g_k, power gain to the AP
  double downlink_gain = 1e-12;  ///< h_k, power gain from the AP
};

/// A full problem input: one config plus an ordered user list.
/// User indices 0..K-1 are stable identifiers.
struct ProblemInstance {
  SystemConfig config;
  std::vector<UserParams> users;

  int user_count() const { return static_cast<int>(users.size()); }
};

/// The subset of users that receive the service program and compute
/// locally. The complement offloads to the edge server.
class Placement {
 public:
  Placement() = default;

  /// Builds from arbitrary indices; sorts and deduplicates.
  explicit Placement(std::vector<int> local) : local_(std::move(local)) {
    std::sort(local_.begin(), local_.end());
    local_.erase(std::unique(local_.begin(), local_.end()), local_.end());
  }

  /// Bit k of `mask` set means user k computes locally.
  static Placement from_mask(std::uint64_t mask, int user_count) {
    std::vector<int> local;
    for (int k = 0; k < user_count; ++k) {
      if (mask >> k & 1) local.push_back(k);
    }
    return Placement(std::move(local));
  }

  bool contains(int user) const {
    return std::binary_search(local_.begin(), local_.end(), user);
  }

  /// K1, ascending.
  const std::vector<int>& local_users() const { return local_; }

  /// K0 = complement of K1 within {0..user_count-1}, ascending.
  std::vector<int> offload_users(int user_count) const {
    std::vector<int> out;
    out.reserve(user_count - local_.size());
    for (int k = 0; k < user_count; ++k) {
      if (!contains(k)) out.push_back(k);
    }
    return out;
  }

  std::uint64_t mask() const {
    std::uint64_t m = 0;
    for (int k : local_) m |= std::uint64_t{1} << k;
    return m;
  }

  int size() const { return static_cast<int>(local_.size()); }
  bool empty() const { return local_.empty(); }

  friend bool operator==(const Placement& a, const Placement& b) {
    return a.local_ == b.local_;
  }

 private:
  std::vector<int> local_;
};

/// A complete resource assignment for a given placement.
///
/// `local_freq` covers K1; `bandwidth_frac`, `offload_time` and
/// `edge_freq` cover K0. `broadcast_time` is the shared program
/// delivery time tau_0.
struct Allocation {
  std::unordered_map<int, double> local_freq;      ///< f_k^l [cycles/s]
  std::unordered_map<int, double> bandwidth_frac;  ///< a_k in [0,1]
  std::unordered_map<int, double> offload_time;    ///< tau_k^u [s]
  std::unordered_map<int, double> edge_freq;       ///< f_k^c [cycles/s]
  double broadcast_time = 0.0;                     ///< tau_0 [s]
};

/// One violated feasibility condition, in relative magnitude.
struct ConstraintViolation {
  std::string what;
  double magnitude = 0.0;
};

/// Counters and residuals attached to a solver's report.
struct SolverDiagnostics {
  long ellipsoid_iterations = 0;
  int restarts = 0;
  double dual_gap_bound = 0.0;  ///< cut norm at the last ellipsoid step
  double dual_value = 0.0;
  long admm_iterations = 0;
  long inner_solves = 0;  ///< candidate evaluations in a placement search
  double wall_seconds = 0.0;
  bool converged = true;
};

/// Per-user time/energy breakdown plus the total weighted objective.
struct TecReport {
  std::vector<double> time_s;    ///< T_k
  std::vector<double> energy_j;  ///< E_k
  std::vector<double> tec;       ///< beta_T*T_k + beta_E*E_k
  double objective = 0.0;        ///< V = sum of tec
  Placement placement;
  Allocation allocation;
  std::vector<ConstraintViolation> violations;
  bool feasible = true;
  SolverDiagnostics diagnostics;

  double total_time() const {
    double s = 0;
    for (double t : time_s) s += t;
    return s;
  }
  double total_energy() const {
    double s = 0;
    for (double e : energy_j) s += e;
    return s;
  }
};

/// Relative tolerance used when flagging budget/rate violations.
inline constexpr double kFeasibilityTol = 1e-6;

/// Shannon rate of a band of width `bandwidth` from the AP at power
/// gain `h`: bandwidth * log2(1 + p0*h/(bandwidth*N0)).
inline double downlink_rate(double bandwidth, double h,
                            const SystemConfig& cfg) {
  return bandwidth *
         std::log1p(cfg.ap_power * h / (bandwidth * cfg.noise_psd)) /
         std::numbers::ln2;
}

/// Program broadcast time tau_0. The AP adapts its rate to the worst
/// downlink gain in K1; an empty K1 needs no broadcast and returns 0.
inline double broadcast_time(const SystemConfig& cfg, const Placement& k1,
                             const std::vector<UserParams>& users) {
  if (k1.empty()) return 0.0;
  double h_min = std::numeric_limits<double>::infinity();
  for (int k : k1.local_users()) {
    h_min = std::min(h_min, users[static_cast<std::size_t>(k)].downlink_gain);
  }
  return cfg.program_size / downlink_rate(cfg.downlink_bandwidth, h_min, cfg);
}

/// Uplink data rate of a user occupying the bandwidth fraction `a`:
/// a*W_U*log2(1 + p_k*g_k/(a*W_U*N0)). Defined as the continuous
/// limit 0 at a = 0. Strictly increasing and concave in a.
inline double uplink_rate(double a, const UserParams& user,
                          const SystemConfig& cfg) {
  if (a <= 0.0) return 0.0;
  const double q = user.tx_power * user.uplink_gain /
                   (cfg.uplink_bandwidth * cfg.noise_psd);
  return a * cfg.uplink_bandwidth * std::log1p(q / a) / std::numbers::ln2;
}

/// d(uplink_rate)/da for a > 0. Positive and decreasing in a.
inline double uplink_rate_slope(double a, const UserParams& user,
                                const SystemConfig& cfg) {
  const double q = user.tx_power * user.uplink_gain /
                   (cfg.uplink_bandwidth * cfg.noise_psd);
  const double s = q / a;
  return cfg.uplink_bandwidth / std::numbers::ln2 *
         (std::log1p(s) - s / (1.0 + s));
}

/// Weighted per-user cost. A zero weight annihilates its term even
/// when the partner value is infinite (the weight-0 limit).
inline double weighted_tec(double weight_time, double weight_energy,
                           double time_s, double energy_j) {
  double v = 0.0;
  if (weight_time > 0.0) v += weight_time * time_s;
  if (weight_energy > 0.0) v += weight_energy * energy_j;
  return v;
}

namespace detail {

inline double fetch(const std::unordered_map<int, double>& m, int key,
                    const char* field) {
  auto it = m.find(key);
  if (it == m.end()) {
    throw MissingAllocationEntry("allocation lacks " + std::string(field) +
                                 " for user " + std::to_string(key));
  }
  return it->second;
}

/// cycles / frequency with the 0-cycle and 0-frequency corners pinned:
/// no work takes no time; positive work at zero frequency never ends.
inline double compute_time(double cycles, double freq) {
  if (cycles <= 0.0) return 0.0;
  if (freq <= 0.0) return std::numeric_limits<double>::infinity();
  return cycles / freq;
}

}  // namespace detail

/// Scores a (placement, allocation) pair: per-user times and energies,
/// the weighted objective V, and any constraint violations beyond
/// kFeasibilityTol. Infeasibility is reported, never thrown, so search
/// code can still rank slightly infeasible iterates. Throws
/// MissingAllocationEntry only when a required field is absent.
inline TecReport evaluate(const ProblemInstance& instance,
                          const Placement& placement,
                          const Allocation& alloc) {
  const int K = instance.user_count();
  const SystemConfig& cfg = instance.config;
  TecReport report;
  report.placement = placement;
  report.allocation = alloc;
  report.time_s.assign(K, 0.0);
  report.energy_j.assign(K, 0.0);
  report.tec.assign(K, 0.0);

  auto flag = [&report](const std::string& what, double magnitude) {
    report.violations.push_back({what, magnitude});
    report.feasible = false;
  };

  const double tau0 = alloc.broadcast_time;
  const double tau0_needed = broadcast_time(cfg, placement, instance.users);
  if (tau0 < tau0_needed * (1.0 - kFeasibilityTol)) {
    flag("broadcast_time below the rate set by the worst K1 downlink",
         (tau0_needed - tau0) / tau0_needed);
  }

  double sum_a = 0.0;
  double sum_fc = 0.0;
  for (int k = 0; k < K; ++k) {
    const UserParams& u = instance.users[static_cast<std::size_t>(k)];
    double T, E;
    if (placement.contains(k)) {
      const double fl = detail::fetch(alloc.local_freq, k, "local_freq");
      if (fl < -kFeasibilityTol * u.max_local_freq ||
          fl > u.max_local_freq * (1.0 + kFeasibilityTol)) {
        flag("local_freq outside [0, F] for user " + std::to_string(k),
             std::abs(fl - std::clamp(fl, 0.0, u.max_local_freq)) /
                 u.max_local_freq);
      }
      T = tau0 + detail::compute_time(u.workload, fl);
      E = u.rx_power * tau0 + u.energy_coeff * fl * fl * u.workload;
    } else {
      const double a = detail::fetch(alloc.bandwidth_frac, k, "bandwidth_frac");
      const double tu = detail::fetch(alloc.offload_time, k, "offload_time");
      const double fc = detail::fetch(alloc.edge_freq, k, "edge_freq");
      if (a < -kFeasibilityTol) flag("negative bandwidth_frac", -a);
      if (tu < -kFeasibilityTol) flag("negative offload_time", -tu);
      if (fc < -kFeasibilityTol) flag("negative edge_freq", -fc);
      const double deficit = u.task_bits - tu * uplink_rate(a, u, cfg);
      if (deficit > kFeasibilityTol * std::max(1.0, u.task_bits)) {
        flag("offload_time*rate below task_bits for user " + std::to_string(k),
             deficit / std::max(1.0, u.task_bits));
      }
      sum_a += a;
      sum_fc += fc;
      T = tu + detail::compute_time(u.workload, fc);
      E = u.tx_power * tu;
    }
    report.time_s[static_cast<std::size_t>(k)] = T;
    report.energy_j[static_cast<std::size_t>(k)] = E;
    report.tec[static_cast<std::size_t>(k)] =
        weighted_tec(u.weight_time, u.weight_energy, T, E);
    report.objective += report.tec[static_cast<std::size_t>(k)];
  }

  if (sum_a > 1.0 + kFeasibilityTol) flag("bandwidth budget", sum_a - 1.0);
  if (sum_fc > cfg.edge_cpu_budget * (1.0 + kFeasibilityTol)) {
    flag("edge CPU budget",
         (sum_fc - cfg.edge_cpu_budget) / cfg.edge_cpu_budget);
  }
  return report;
}

}  // namespace mecopt
