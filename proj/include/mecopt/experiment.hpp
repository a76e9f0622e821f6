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

#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mecopt/admm.hpp"
#include "mecopt/baselines.hpp"
#include "mecopt/errors.hpp"
#include "mecopt/parallel.hpp"
#include "mecopt/placement_search.hpp"
#include "mecopt/scenario.hpp"

namespace mecopt {

enum class Method {
  kExhaustive,
  kGreedy,
  kHeuristic,
  kAdmm,
  kAllEdge,
  kIndependent,
};

inline const char* method_name(Method m) {
  switch (m) {
    case Method::kExhaustive: return "exhaustive";
    case Method::kGreedy: return "greedy";
    case Method::kHeuristic: return "heuristic";
    case Method::kAdmm: return "admm";
    case Method::kAllEdge: return "all-edge";
    case Method::kIndependent: return "independent";
  }
  return "?";
}

inline Method parse_method(std::string_view name) {
  if (name == "exhaustive") return Method::kExhaustive;
  if (name == "greedy") return Method::kGreedy;
  if (name == "heuristic") return Method::kHeuristic;
  if (name == "admm") return Method::kAdmm;
  if (name == "all-edge") return Method::kAllEdge;
  if (name == "independent") return Method::kIndependent;
  throw UnknownMethod("unknown method '" + std::string(name) + "'");
}

/// One emitted row. `row` distinguishes per-repetition records,
/// per-method aggregates of a run, and sweep-table cells. Optional
/// fields serialize as empty CSV cells / absent JSON members.
struct RunRecord {
  int schema_version = 1;
  std::string row = "record";  // record | aggregate | sweep
  std::string method;
  std::uint64_t seed = 0;
  std::optional<long> reps;
  int user_count = 0;
  double program_size = 0.0;
  double task_bits_mean = 0.0;
  double cycles_per_bit = 0.0;
  double beta_T = 0.0;
  std::optional<std::string> parameter;  // sweep rows
  std::optional<double> value;           // sweep rows
  double objective = 0.0;
  double time_s = 0.0;
  double energy_j = 0.0;
  std::optional<double> objective_stddev;
  std::optional<double> time_stddev;
  std::optional<double> energy_stddev;
  std::optional<std::uint64_t> placement;  // record rows
  std::optional<long> iterations;          // record rows
  double wall_s = 0.0;
};

inline constexpr const char* kCsvHeader =
    "schema_version,row,method,seed,reps,K,S_bits,I_mean_bits,C,beta_T,"
    "parameter,value,V,time_s,energy_J,V_stddev,time_stddev,energy_stddev,"
    "placement,iterations,wall_s";

struct RunOptions {
  SearchOptions search;
  admm::Options admm;
  InnerSolverOptions inner;
  bool parallel = true;
};

/// Runs one method on one instance, returning its report. Exhaustive
/// search propagates InstanceTooLarge past the cap.
inline TecReport solve_with(Method method, const ProblemInstance& instance,
                            const RunOptions& opts = {}) {
  SearchOptions search = opts.search;
  search.inner = opts.inner;
  switch (method) {
    case Method::kExhaustive: return exhaustive_search(instance, search);
    case Method::kGreedy: return greedy_search(instance, search);
    case Method::kHeuristic: return uplink_heuristic(instance, search);
    case Method::kAdmm: return admm::solve(instance, opts.admm, opts.inner).report;
    case Method::kAllEdge: return all_edge(instance, opts.inner);
    case Method::kIndependent: return independent_optimization(instance);
  }
  throw UnknownMethod("bad method enum");
}

inline long headline_iterations(Method method, const TecReport& report) {
  switch (method) {
    case Method::kExhaustive:
    case Method::kGreedy:
    case Method::kHeuristic: return report.diagnostics.inner_solves;
    case Method::kAdmm: return report.diagnostics.admm_iterations;
    case Method::kAllEdge: return report.diagnostics.ellipsoid_iterations;
    case Method::kIndependent: return 0;
  }
  return 0;
}

namespace detail {

inline double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

/// Population standard deviation.
inline double stddev_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  const double mu = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - mu) * (x - mu);
  return std::sqrt(s / static_cast<double>(v.size()));
}

inline double instance_task_bits_mean(const ProblemInstance& instance) {
  double s = 0.0;
  for (const UserParams& u : instance.users) s += u.task_bits;
  return s / static_cast<double>(instance.users.size());
}

}  // namespace detail

/// Runs every method on `reps` seed-derived instances (repetition r
/// uses seed + r) and returns one record per (repetition, method),
/// ordered by (seed, method), followed by one aggregate row per
/// method with the mean and population stddev of V, time and energy.
inline std::vector<RunRecord> run(const ScenarioSpec& base,
                                  const std::vector<Method>& methods,
                                  std::uint64_t seed, int reps,
                                  const RunOptions& opts = {}) {
  if (base.user_count > 64) {
    throw InvalidSpec("placement bitmask output supports at most 64 users");
  }
  std::vector<RunRecord> records(
      static_cast<std::size_t>(reps) * methods.size());
  detail::parallel_for(
      reps,
      [&](long r) {
        ScenarioSpec spec = base;
        spec.rng_seed = seed + static_cast<std::uint64_t>(r);
        const ProblemInstance instance = generate(spec);
        for (std::size_t mi = 0; mi < methods.size(); ++mi) {
          const auto t0 = std::chrono::steady_clock::now();
          const TecReport report = solve_with(methods[mi], instance, opts);
          RunRecord& rec =
              records[static_cast<std::size_t>(r) * methods.size() + mi];
          rec.method = method_name(methods[mi]);
          rec.seed = spec.rng_seed;
          rec.user_count = instance.user_count();
          rec.program_size = spec.program_size;
          rec.task_bits_mean = detail::instance_task_bits_mean(instance);
          rec.cycles_per_bit = spec.cycles_per_bit;
          rec.beta_T = spec.beta_T;
          rec.objective = report.objective;
          rec.time_s = report.total_time();
          rec.energy_j = report.total_energy();
          rec.placement = report.placement.mask();
          rec.iterations = headline_iterations(methods[mi], report);
          rec.wall_s = std::chrono::duration<double>(
                           std::chrono::steady_clock::now() - t0)
                           .count();
        }
      },
      opts.parallel);

  std::sort(records.begin(), records.end(),
            [](const RunRecord& a, const RunRecord& b) {
              return std::tie(a.seed, a.method) < std::tie(b.seed, b.method);
            });

  std::vector<RunRecord> out = records;
  std::map<std::string, std::vector<const RunRecord*>> by_method;
  for (const RunRecord& r : records) by_method[r.method].push_back(&r);
  for (const auto& [name, group] : by_method) {
    std::vector<double> vs, ts, es, ws;
    for (const RunRecord* r : group) {
      vs.push_back(r->objective);
      ts.push_back(r->time_s);
      es.push_back(r->energy_j);
      ws.push_back(r->wall_s);
    }
    RunRecord agg;
    agg.row = "aggregate";
    agg.method = name;
    agg.seed = seed;
    agg.reps = static_cast<long>(group.size());
    agg.user_count = group.front()->user_count;
    agg.program_size = group.front()->program_size;
    agg.task_bits_mean = group.front()->task_bits_mean;
    agg.cycles_per_bit = group.front()->cycles_per_bit;
    agg.beta_T = group.front()->beta_T;
    agg.objective = detail::mean_of(vs);
    agg.time_s = detail::mean_of(ts);
    agg.energy_j = detail::mean_of(es);
    agg.objective_stddev = detail::stddev_of(vs);
    agg.time_stddev = detail::stddev_of(ts);
    agg.energy_stddev = detail::stddev_of(es);
    agg.wall_s = detail::mean_of(ws);
    out.push_back(std::move(agg));
  }
  return out;
}

/// Applies one sweep parameter to a spec copy. Legal names:
/// S (program size), I (fixed task bits), C (cycles per bit),
/// K (user count), beta_T.
inline ScenarioSpec apply_parameter(ScenarioSpec spec,
                                    const std::string& parameter,
                                    double value) {
  if (parameter == "S") {
    spec.program_size = value;
  } else if (parameter == "I") {
    spec.task_bits = {TaskBitsSpec::Kind::kFixed, value, 0, 0};
  } else if (parameter == "C") {
    spec.cycles_per_bit = value;
  } else if (parameter == "K") {
    spec.user_count = static_cast<int>(std::llround(value));
  } else if (parameter == "beta_T") {
    spec.beta_T = value;
  } else {
    throw UnknownParameter("unknown sweep parameter '" + parameter + "'");
  }
  return spec;
}

/// Seed-matched sweep: for every (value, method) cell, runs `reps`
/// repetitions (repetition r uses seed + r for every cell, so cells
/// are paired) and emits one row with mean V/time/energy and stddevs.
/// Exhaustive cells beyond the search cap are omitted.
inline std::vector<RunRecord> sweep(const ScenarioSpec& base,
                                    const std::string& parameter,
                                    const std::vector<double>& values,
                                    const std::vector<Method>& methods,
                                    std::uint64_t seed, int reps,
                                    const RunOptions& opts = {}) {
  struct Cell {
    std::vector<double> vs, ts, es, ws;
    double task_bits_mean = 0.0;
    bool skipped = false;
  };
  std::vector<Cell> cells(values.size() * methods.size());
  const long total = static_cast<long>(values.size()) * reps;
  std::mutex cell_mutex;
  detail::parallel_for(
      total,
      [&](long job) {
        const auto vi = static_cast<std::size_t>(job / reps);
        const long r = job % reps;
        ScenarioSpec spec = apply_parameter(base, parameter, values[vi]);
        spec.rng_seed = seed + static_cast<std::uint64_t>(r);
        const ProblemInstance instance = generate(spec);
        for (std::size_t mi = 0; mi < methods.size(); ++mi) {
          Cell& cell = cells[vi * methods.size() + mi];
          try {
            const auto t0 = std::chrono::steady_clock::now();
            const TecReport report = solve_with(methods[mi], instance, opts);
            const double wall = std::chrono::duration<double>(
                                    std::chrono::steady_clock::now() - t0)
                                    .count();
            std::lock_guard<std::mutex> lock(cell_mutex);
            cell.vs.push_back(report.objective);
            cell.ts.push_back(report.total_time());
            cell.es.push_back(report.total_energy());
            cell.ws.push_back(wall);
            cell.task_bits_mean += detail::instance_task_bits_mean(instance);
          } catch (const InstanceTooLarge&) {
            std::lock_guard<std::mutex> lock(cell_mutex);
            cell.skipped = true;
          }
        }
      },
      opts.parallel);

  std::vector<RunRecord> out;
  for (std::size_t vi = 0; vi < values.size(); ++vi) {
    const ScenarioSpec spec = apply_parameter(base, parameter, values[vi]);
    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
      const Cell& cell = cells[vi * methods.size() + mi];
      if (cell.skipped || cell.vs.empty()) continue;
      RunRecord rec;
      rec.row = "sweep";
      rec.method = method_name(methods[mi]);
      rec.seed = seed;
      rec.reps = static_cast<long>(cell.vs.size());
      rec.user_count = spec.user_count;
      rec.program_size = spec.program_size;
      rec.task_bits_mean =
          cell.task_bits_mean / static_cast<double>(cell.vs.size());
      rec.cycles_per_bit = spec.cycles_per_bit;
      rec.beta_T = spec.beta_T;
      rec.parameter = parameter;
      rec.value = values[vi];
      rec.objective = detail::mean_of(cell.vs);
      rec.time_s = detail::mean_of(cell.ts);
      rec.energy_j = detail::mean_of(cell.es);
      rec.objective_stddev = detail::stddev_of(cell.vs);
      rec.time_stddev = detail::stddev_of(cell.ts);
      rec.energy_stddev = detail::stddev_of(cell.es);
      rec.wall_s = detail::mean_of(cell.ws);
      out.push_back(std::move(rec));
    }
  }
  return out;
}

namespace detail {

inline std::string csv_cell(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string();
}

}  // namespace detail

inline void write_csv(const std::vector<RunRecord>& records,
                      std::ostream& out) {
  out << kCsvHeader << "\n";
  for (const RunRecord& r : records) {
    out << r.schema_version << ',' << r.row << ',' << r.method << ',' << r.seed
        << ',' << (r.reps ? std::to_string(*r.reps) : std::string()) << ','
        << r.user_count << ',' << detail::format_double(r.program_size) << ','
        << detail::format_double(r.task_bits_mean) << ','
        << detail::format_double(r.cycles_per_bit) << ','
        << detail::format_double(r.beta_T) << ','
        << (r.parameter ? *r.parameter : std::string()) << ','
        << detail::csv_cell(r.value) << ','
        << detail::format_double(r.objective) << ','
        << detail::format_double(r.time_s) << ','
        << detail::format_double(r.energy_j) << ','
        << detail::csv_cell(r.objective_stddev) << ','
        << detail::csv_cell(r.time_stddev) << ','
        << detail::csv_cell(r.energy_stddev) << ','
        << (r.placement ? std::to_string(*r.placement) : std::string()) << ','
        << (r.iterations ? std::to_string(*r.iterations) : std::string())
        << ',' << detail::format_double(r.wall_s) << "\n";
  }
}

inline void write_json(const std::vector<RunRecord>& records,
                       std::ostream& out) {
  nlohmann::json arr = nlohmann::json::array();
  for (const RunRecord& r : records) {
    nlohmann::json j{{"schema_version", r.schema_version},
                     {"row", r.row},
                     {"method", r.method},
                     {"seed", r.seed},
                     {"K", r.user_count},
                     {"S_bits", r.program_size},
                     {"I_mean_bits", r.task_bits_mean},
                     {"C", r.cycles_per_bit},
                     {"beta_T", r.beta_T},
                     {"V", r.objective},
                     {"time_s", r.time_s},
                     {"energy_J", r.energy_j},
                     {"wall_s", r.wall_s}};
    if (r.reps) j["reps"] = *r.reps;
    if (r.parameter) j["parameter"] = *r.parameter;
    if (r.value) j["value"] = *r.value;
    if (r.objective_stddev) j["V_stddev"] = *r.objective_stddev;
    if (r.time_stddev) j["time_stddev"] = *r.time_stddev;
    if (r.energy_stddev) j["energy_stddev"] = *r.energy_stddev;
    if (r.placement) j["placement"] = *r.placement;
    if (r.iterations) j["iterations"] = *r.iterations;
    arr.push_back(std::move(j));
  }
  out << arr.dump(2) << "\n";
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  for (char ch : line) {
    if (ch == ',') {
      cells.push_back(std::move(cell));
      cell.clear();
    } else if (ch != '\r') {
      cell.push_back(ch);
    }
  }
  cells.push_back(std::move(cell));
  return cells;
}

}  // namespace detail

/// Parses a CSV document previously produced by write_csv. Throws
/// InvalidSpec on any header, arity or type mismatch.
inline std::vector<RunRecord> parse_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line)) throw InvalidSpec("empty records file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kCsvHeader) {
    throw InvalidSpec("header mismatch: got '" + line + "'");
  }
  std::vector<RunRecord> records;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != 21) {
      throw InvalidSpec("line " + std::to_string(line_no) + ": expected 21 cells");
    }
    auto num = [&](std::size_t i) {
      return detail::parse_double(cells[i], "column " + std::to_string(i));
    };
    auto opt_num = [&](std::size_t i) -> std::optional<double> {
      if (cells[i].empty()) return std::nullopt;
      return num(i);
    };
    RunRecord r;
    r.schema_version = static_cast<int>(num(0));
    r.row = cells[1];
    if (r.row != "record" && r.row != "aggregate" && r.row != "sweep") {
      throw InvalidSpec("line " + std::to_string(line_no) + ": bad row type '" +
                        r.row + "'");
    }
    r.method = cells[2];
    parse_method(r.method);  // must be a known method
    r.seed = static_cast<std::uint64_t>(num(3));
    if (!cells[4].empty()) r.reps = static_cast<long>(num(4));
    r.user_count = static_cast<int>(num(5));
    r.program_size = num(6);
    r.task_bits_mean = num(7);
    r.cycles_per_bit = num(8);
    r.beta_T = num(9);
    if (!cells[10].empty()) r.parameter = cells[10];
    r.value = opt_num(11);
    r.objective = num(12);
    r.time_s = num(13);
    r.energy_j = num(14);
    r.objective_stddev = opt_num(15);
    r.time_stddev = opt_num(16);
    r.energy_stddev = opt_num(17);
    if (!cells[18].empty()) {
      r.placement = static_cast<std::uint64_t>(num(18));
    }
    if (!cells[19].empty()) r.iterations = static_cast<long>(num(19));
    r.wall_s = num(20);
    records.push_back(std::move(r));
  }
  return records;
}

/// Schema check: versions, row types and method names are validated
/// by parse_csv; on top of that, every aggregate row must match the
/// mean/stddev recomputed from its record rows to 1e-12.
inline void check_records(const std::vector<RunRecord>& records) {
  std::map<std::string, std::vector<const RunRecord*>> groups;
  for (const RunRecord& r : records) {
    if (r.schema_version != 1) {
      throw InvalidSpec("unsupported schema_version " +
                        std::to_string(r.schema_version));
    }
    if (r.row == "record") groups[r.method].push_back(&r);
  }
  auto close = [](double a, double b) {
    return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(a));
  };
  for (const RunRecord& r : records) {
    if (r.row != "aggregate") continue;
    const auto& group = groups[r.method];
    if (group.empty()) {
      throw InvalidSpec("aggregate for '" + r.method + "' has no records");
    }
    std::vector<double> vs, ts, es;
    for (const RunRecord* g : group) {
      vs.push_back(g->objective);
      ts.push_back(g->time_s);
      es.push_back(g->energy_j);
    }
    if (!close(r.objective, detail::mean_of(vs)) ||
        !close(r.time_s, detail::mean_of(ts)) ||
        !close(r.energy_j, detail::mean_of(es)) ||
        !r.objective_stddev || !close(*r.objective_stddev, detail::stddev_of(vs)) ||
        !r.time_stddev || !close(*r.time_stddev, detail::stddev_of(ts)) ||
        !r.energy_stddev || !close(*r.energy_stddev, detail::stddev_of(es))) {
      throw InvalidSpec("aggregate row for '" + r.method +
                        "' disagrees with its records");
    }
  }
}

}  // namespace mecopt
