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

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "mecopt/errors.hpp"
#include "mecopt/model.hpp"

namespace mecopt {

/// Task-size model: every user gets the same fixed size, or an
/// independent uniform draw per user.
struct TaskBitsSpec {
  enum class Kind { kFixed, kUniform };
  Kind kind = Kind::kFixed;
  double fixed = 8e6;
  double lo = 1e6;
  double hi = 12e6;

  /// Compares only the fields the active kind reads.
  friend bool operator==(const TaskBitsSpec& a, const TaskBitsSpec& b) {
    if (a.kind != b.kind) return false;
    return a.kind == Kind::kFixed ? a.fixed == b.fixed
                                  : a.lo == b.lo && a.hi == b.hi;
  }
};

/// Optional replacements for individual system / user constants.
struct ScenarioOverrides {
  std::optional<double> W_U, W_D, N0, p0, F_c;     // SystemConfig
  std::optional<double> F_k, kappa, p, p_r;        // UserParams

  friend bool operator==(const ScenarioOverrides&,
                         const ScenarioOverrides&) = default;
};

/// A reproducible instance recipe: channel geometry, task model and
/// parameter overrides. The same seed always generates the same
/// instance, and user k's draws depend only on (seed, k), so sweeping
/// the user count leaves earlier users untouched.
struct ScenarioSpec {
  int user_count = 10;
  std::vector<double> distance_m;  ///< empty = 150 m for everyone
  double program_size = 32e6;      ///< bits
  TaskBitsSpec task_bits;
  double cycles_per_bit = 1000.0;  ///< L_k = C * I_k
  double beta_T = 0.1;
  double correlation = 0.75;  ///< uplink/downlink power-gain correlation
  bool homogeneous = false;   ///< require users identical except gains
  std::uint64_t rng_seed = 1;
  ScenarioOverrides overrides;

  friend bool operator==(const ScenarioSpec&, const ScenarioSpec&) = default;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Uniform draw on the open interval (0, 1) from pinned mt19937_64
/// output bits.
inline double uniform_open(std::mt19937_64& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

/// Standard normal pair via Box-Muller (explicit transform; the
/// distributions in <random> are not bit-stable across libraries).
inline std::pair<double, double> normal_pair(std::mt19937_64& rng) {
  const double u1 = uniform_open(rng);
  const double u2 = uniform_open(rng);
  const double r = std::sqrt(-2.0 * std::log(u1));
  return {r * std::cos(2.0 * std::numbers::pi * u2),
          r * std::sin(2.0 * std::numbers::pi * u2)};
}

/// Unit-mean exponential from a standard normal score:
/// -ln(1 - Phi(z)) with the tail evaluated as erfc for accuracy.
inline double exponential_from_normal(double z) {
  return -std::log(0.5 * std::erfc(z / std::numbers::sqrt2));
}

/// Gaussian-copula calibration: the normal-score correlation that
/// produces a given Pearson correlation between the two unit-mean
/// exponential gains. Calibrated by Gauss-Hermite quadrature; the 0.75
/// default maps to 0.7823066401735143. Monotone interpolation between
/// the table nodes.
inline double copula_normal_correlation(double target) {
  static constexpr std::array<std::pair<double, double>, 13> kTable{{
      {0.00, 0.0},
      {0.10, 0.11946670818146365},
      {0.20, 0.2332349314438758},
      {0.30, 0.3419899715012388},
      {0.40, 0.44629041939928094},
      {0.50, 0.5465986497197025},
      {0.60, 0.6433024841143228},
      {0.70, 0.736730961471328},
      {0.75, 0.7823066401735143},
      {0.80, 0.8271660626801418},
      {0.90, 0.9148515897734701},
      {0.95, 0.9577307260249424},
      {1.00, 1.0},
  }};
  for (std::size_t i = 1; i < kTable.size(); ++i) {
    if (target <= kTable[i].first) {
      const auto [t0, r0] = kTable[i - 1];
      const auto [t1, r1] = kTable[i];
      return r0 + (r1 - r0) * (target - t0) / (t1 - t0);
    }
  }
  return 1.0;
}

/// Free-space path loss: G (c / (4 pi f0 d))^{d_e} with antenna gain
/// 4.11, carrier 915 MHz and exponent 3.4. About 6.78e-13 at 150 m.
inline double mean_path_gain(double distance_m) {
  constexpr double kAntennaGain = 4.11;
  constexpr double kCarrierHz = 915e6;
  constexpr double kExponent = 3.4;
  return kAntennaGain *
         std::pow(3e8 / (4.0 * std::numbers::pi * kCarrierHz * distance_m),
                  kExponent);
}

}  // namespace detail

inline void validate(const ScenarioSpec& spec) {
  if (spec.user_count < 1) throw InvalidSpec("user_count must be >= 1");
  if (!spec.distance_m.empty() &&
      spec.distance_m.size() != 1 &&
      spec.distance_m.size() != static_cast<std::size_t>(spec.user_count)) {
    throw InvalidSpec("distance_m needs 1 value or one per user");
  }
  for (double d : spec.distance_m) {
    if (!(d > 0.0)) throw InvalidSpec("distances must be positive");
  }
  if (!(spec.program_size > 0.0)) throw InvalidSpec("program_size must be positive");
  if (spec.cycles_per_bit < 0.0) throw InvalidSpec("cycles_per_bit must be >= 0");
  if (!(spec.beta_T >= 0.0 && spec.beta_T <= 1.0)) {
    throw InvalidSpec("beta_T must lie in [0, 1]");
  }
  if (!(spec.correlation >= 0.0 && spec.correlation <= 1.0)) {
    throw InvalidSpec("correlation must lie in [0, 1]");
  }
  if (spec.task_bits.kind == TaskBitsSpec::Kind::kUniform &&
      !(spec.task_bits.lo >= 0.0 && spec.task_bits.hi >= spec.task_bits.lo)) {
    throw InvalidSpec("uniform task_bits needs 0 <= lo <= hi");
  }
  if (spec.homogeneous && spec.task_bits.kind != TaskBitsSpec::Kind::kFixed) {
    throw InvalidSpec("homogeneous scenarios need a fixed task size");
  }
}

/// Draws a ProblemInstance: free-space mean gains, Rayleigh
/// (exponential power) uplink fading, and downlink fading coupled to
/// the uplink through a Gaussian copula at the requested correlation.
inline ProblemInstance generate(const ScenarioSpec& spec) {
  validate(spec);
  const int K = spec.user_count;

  ProblemInstance instance;
  SystemConfig& cfg = instance.config;
  cfg.program_size = spec.program_size;
  if (spec.overrides.W_U) cfg.uplink_bandwidth = *spec.overrides.W_U;
  if (spec.overrides.W_D) cfg.downlink_bandwidth = *spec.overrides.W_D;
  if (spec.overrides.N0) cfg.noise_psd = *spec.overrides.N0;
  if (spec.overrides.p0) cfg.ap_power = *spec.overrides.p0;
  if (spec.overrides.F_c) cfg.edge_cpu_budget = *spec.overrides.F_c;

  const double rz = detail::copula_normal_correlation(spec.correlation);
  instance.users.reserve(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k) {
    std::mt19937_64 rng(detail::splitmix64(
        spec.rng_seed ^ detail::splitmix64(static_cast<std::uint64_t>(k) + 1)));
    const auto [z_g, z_aux] = detail::normal_pair(rng);
    const double z_h = rz * z_g + std::sqrt(1.0 - rz * rz) * z_aux;

    const double d = spec.distance_m.empty()
                         ? 150.0
                         : spec.distance_m[spec.distance_m.size() == 1
                                               ? 0
                                               : static_cast<std::size_t>(k)];
    const double mean_gain = detail::mean_path_gain(d);

    UserParams u;
    u.uplink_gain = mean_gain * detail::exponential_from_normal(z_g);
    u.downlink_gain = mean_gain * detail::exponential_from_normal(z_h);
    u.task_bits =
        spec.task_bits.kind == TaskBitsSpec::Kind::kFixed
            ? spec.task_bits.fixed
            : spec.task_bits.lo + detail::uniform_open(rng) *
                                      (spec.task_bits.hi - spec.task_bits.lo);
    u.workload = spec.cycles_per_bit * u.task_bits;
    u.weight_time = spec.beta_T;
    u.weight_energy = 1.0 - spec.beta_T;
    if (spec.overrides.F_k) u.max_local_freq = *spec.overrides.F_k;
    if (spec.overrides.kappa) u.energy_coeff = *spec.overrides.kappa;
    if (spec.overrides.p) u.tx_power = *spec.overrides.p;
    if (spec.overrides.p_r) u.rx_power = *spec.overrides.p_r;
    instance.users.push_back(u);
  }
  return instance;
}

namespace detail {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

inline double parse_double(std::string_view token, std::string_view key) {
  try {
    std::size_t used = 0;
    const std::string str(token);
    const double v = std::stod(str, &used);
    if (used != str.size()) throw std::invalid_argument(str);
    return v;
  } catch (const std::exception&) {
    throw InvalidSpec("bad numeric value '" + std::string(token) + "' for " +
                      std::string(key));
  }
}

inline std::vector<std::string> split_tokens(std::string_view s) {
  std::vector<std::string> out;
  std::string token;
  for (char ch : s) {
    if (ch == ' ' || ch == '\t' || ch == ',') {
      if (!token.empty()) out.push_back(std::move(token));
      token.clear();
    } else {
      token.push_back(ch);
    }
  }
  if (!token.empty()) out.push_back(std::move(token));
  return out;
}

}  // namespace detail

/// Reads a flat key=value scenario document. Keys are the ScenarioSpec
/// field names (override.* for parameter overrides); '#' starts a
/// comment. Unknown keys are rejected.
inline ScenarioSpec parse_scenario(std::string_view text) {
  ScenarioSpec spec;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    std::string_view line(raw);
    if (auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw InvalidSpec("expected 'key = value': " + std::string(line));
    }
    const std::string key{detail::trim(line.substr(0, eq))};
    const std::string_view value = detail::trim(line.substr(eq + 1));
    const auto tokens = detail::split_tokens(value);
    if (tokens.empty()) throw InvalidSpec("missing value for " + key);

    auto one = [&]() -> double {
      if (tokens.size() != 1) {
        throw InvalidSpec(key + " takes a single value");
      }
      return detail::parse_double(tokens[0], key);
    };

    if (key == "user_count") {
      spec.user_count = static_cast<int>(one());
    } else if (key == "distance_m") {
      spec.distance_m.clear();
      for (const auto& t : tokens) {
        spec.distance_m.push_back(detail::parse_double(t, key));
      }
    } else if (key == "program_size") {
      spec.program_size = one();
    } else if (key == "task_bits") {
      if (tokens[0] == "fixed" && tokens.size() == 2) {
        spec.task_bits = {TaskBitsSpec::Kind::kFixed,
                          detail::parse_double(tokens[1], key), 0, 0};
      } else if (tokens[0] == "uniform" && tokens.size() == 3) {
        spec.task_bits = {TaskBitsSpec::Kind::kUniform, 0,
                          detail::parse_double(tokens[1], key),
                          detail::parse_double(tokens[2], key)};
      } else {
        throw InvalidSpec("task_bits wants 'fixed <bits>' or 'uniform <lo> <hi>'");
      }
    } else if (key == "cycles_per_bit") {
      spec.cycles_per_bit = one();
    } else if (key == "beta_T") {
      spec.beta_T = one();
    } else if (key == "correlation") {
      spec.correlation = one();
    } else if (key == "homogeneous") {
      if (tokens.size() != 1 || (tokens[0] != "true" && tokens[0] != "false")) {
        throw InvalidSpec("homogeneous wants true or false");
      }
      spec.homogeneous = tokens[0] == "true";
    } else if (key == "rng_seed") {
      if (tokens.size() != 1) throw InvalidSpec("rng_seed takes a single value");
      try {
        spec.rng_seed = std::stoull(tokens[0]);
      } catch (const std::exception&) {
        throw InvalidSpec("bad rng_seed '" + tokens[0] + "'");
      }
    } else if (key.rfind("override.", 0) == 0) {
      const std::string name = key.substr(9);
      const double v = one();
      auto& o = spec.overrides;
      if (name == "W_U") o.W_U = v;
      else if (name == "W_D") o.W_D = v;
      else if (name == "N0") o.N0 = v;
      else if (name == "p0") o.p0 = v;
      else if (name == "F_c") o.F_c = v;
      else if (name == "F_k") o.F_k = v;
      else if (name == "kappa") o.kappa = v;
      else if (name == "p") o.p = v;
      else if (name == "p_r") o.p_r = v;
      else throw InvalidSpec("unknown override '" + name + "'");
    } else {
      throw InvalidSpec("unknown key '" + key + "'");
    }
  }
  validate(spec);
  return spec;
}

inline std::string serialize_scenario(const ScenarioSpec& spec) {
  std::ostringstream out;
  out << "user_count = " << spec.user_count << "\n";
  if (!spec.distance_m.empty()) {
    out << "distance_m =";
    for (double d : spec.distance_m) out << " " << detail::format_double(d);
    out << "\n";
  }
  out << "program_size = " << detail::format_double(spec.program_size) << "\n";
  if (spec.task_bits.kind == TaskBitsSpec::Kind::kFixed) {
    out << "task_bits = fixed " << detail::format_double(spec.task_bits.fixed)
        << "\n";
  } else {
    out << "task_bits = uniform " << detail::format_double(spec.task_bits.lo)
        << " " << detail::format_double(spec.task_bits.hi) << "\n";
  }
  out << "cycles_per_bit = " << detail::format_double(spec.cycles_per_bit)
      << "\n";
  out << "beta_T = " << detail::format_double(spec.beta_T) << "\n";
  out << "correlation = " << detail::format_double(spec.correlation) << "\n";
  out << "homogeneous = " << (spec.homogeneous ? "true" : "false") << "\n";
  out << "rng_seed = " << spec.rng_seed << "\n";
  const auto& o = spec.overrides;
  auto emit = [&](const char* name, const std::optional<double>& v) {
    if (v) out << "override." << name << " = " << detail::format_double(*v)
               << "\n";
  };
  emit("W_U", o.W_U);
  emit("W_D", o.W_D);
  emit("N0", o.N0);
  emit("p0", o.p0);
  emit("F_c", o.F_c);
  emit("F_k", o.F_k);
  emit("kappa", o.kappa);
  emit("p", o.p);
  emit("p_r", o.p_r);
  return out.str();
}

}  // namespace mecopt
