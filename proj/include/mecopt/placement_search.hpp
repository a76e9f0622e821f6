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
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mecopt/errors.hpp"
#include "mecopt/inner_solver.hpp"
#include "mecopt/model.hpp"
#include "mecopt/parallel.hpp"

namespace mecopt {

struct SearchOptions {
  int exhaustive_cap = 16;  ///< refuse 2^K enumerations past this K
  bool parallel = true;
  InnerSolverOptions inner;
};

/// The improvement path of a placement search. `visited` holds the
/// starting point and every accepted incumbent, in order;
/// `inner_solves` counts candidate placements handed to the inner
/// solver by the search loop.
struct SearchTrace {
  std::vector<std::pair<Placement, double>> visited;
  long inner_solves = 0;
};

struct SearchResult {
  TecReport report;
  SearchTrace trace;
};

namespace detail {

/// Lexicographic order on the sorted index sequences of two masks,
/// used as the deterministic tie-break between equal objectives.
inline bool mask_lex_less(std::uint64_t a, std::uint64_t b, int K) {
  std::vector<int> sa, sb;
  for (int k = 0; k < K; ++k) {
    if (a >> k & 1) sa.push_back(k);
    if (b >> k & 1) sb.push_back(k);
  }
  return std::lexicographical_compare(sa.begin(), sa.end(), sb.begin(),
                                      sb.end());
}

/// A move improves only if it beats the incumbent by more than solver
/// noise.
inline bool improves(double candidate, double incumbent) {
  return candidate < incumbent - 1e-9 * std::abs(incumbent);
}

}  // namespace detail

/// Global optimum by enumerating all 2^K placements. Ties break toward
/// the lexicographically smallest K1. Throws InstanceTooLarge past the
/// cap.
inline SearchResult exhaustive_search_traced(const ProblemInstance& instance,
                                             const SearchOptions& opts = {}) {
  const int K = instance.user_count();
  if (K > opts.exhaustive_cap) {
    throw InstanceTooLarge("exhaustive search over " + std::to_string(K) +
                           " users exceeds cap " +
                           std::to_string(opts.exhaustive_cap));
  }
  const std::uint64_t count = std::uint64_t{1} << K;
  std::vector<double> objective(count);
  detail::parallel_for(
      static_cast<long>(count),
      [&](long mask) {
        objective[static_cast<std::size_t>(mask)] =
            solve_given_placement(
                instance,
                Placement::from_mask(static_cast<std::uint64_t>(mask), K),
                opts.inner)
                .objective;
      },
      opts.parallel);

  SearchResult result;
  std::uint64_t best = 0;
  for (std::uint64_t mask = 0; mask < count; ++mask) {
    const bool better =
        objective[mask] < objective[best] ||
        (objective[mask] == objective[best] &&
         detail::mask_lex_less(mask, best, K));
    if (mask == 0 || better) {
      best = mask;
      result.trace.visited.emplace_back(Placement::from_mask(mask, K),
                                        objective[mask]);
    }
  }
  result.trace.inner_solves = static_cast<long>(count);
  result.report =
      solve_given_placement(instance, Placement::from_mask(best, K), opts.inner);
  result.report.diagnostics.inner_solves = result.trace.inner_solves;
  return result;
}

/// Iterative greedy search: start from the all-offload placement and
/// repeatedly move the user whose transfer to K1 lowers the objective
/// the most, until no move improves. At most K(K+1)/2 candidate
/// solves; ties break toward the lowest user index.
inline SearchResult greedy_search_traced(const ProblemInstance& instance,
                                         const SearchOptions& opts = {}) {
  const int K = instance.user_count();
  SearchResult result;
  result.report = solve_given_placement(instance, Placement{}, opts.inner);
  result.trace.visited.emplace_back(result.report.placement,
                                    result.report.objective);

  std::vector<int> k1;
  std::vector<int> remaining(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k) remaining[static_cast<std::size_t>(k)] = k;

  while (!remaining.empty()) {
    std::vector<TecReport> candidates(remaining.size());
    detail::parallel_for(
        static_cast<long>(remaining.size()),
        [&](long i) {
          std::vector<int> trial = k1;
          trial.push_back(remaining[static_cast<std::size_t>(i)]);
          candidates[static_cast<std::size_t>(i)] = solve_given_placement(
              instance, Placement(std::move(trial)), opts.inner);
        },
        opts.parallel);
    result.trace.inner_solves += static_cast<long>(remaining.size());

    std::size_t best = 0;
    for (std::size_t i = 1; i < candidates.size(); ++i) {
      if (candidates[i].objective < candidates[best].objective) best = i;
    }
    if (!detail::improves(candidates[best].objective,
                          result.report.objective)) {
      break;
    }
    k1.push_back(remaining[best]);
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(best));
    result.report = std::move(candidates[best]);
    result.trace.visited.emplace_back(result.report.placement,
                                      result.report.objective);
  }
  result.report.diagnostics.inner_solves = result.trace.inner_solves;
  return result;
}

/// Channel-order heuristic for near-homogeneous instances: visit users
/// by ascending uplink gain and keep each one in K1 iff it lowers the
/// objective. Exactly K candidate solves.
inline SearchResult uplink_heuristic_traced(const ProblemInstance& instance,
                                            const SearchOptions& opts = {}) {
  const int K = instance.user_count();
  std::vector<int> order(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k) order[static_cast<std::size_t>(k)] = k;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return instance.users[static_cast<std::size_t>(a)].uplink_gain <
           instance.users[static_cast<std::size_t>(b)].uplink_gain;
  });

  SearchResult result;
  result.report = solve_given_placement(instance, Placement{}, opts.inner);
  result.trace.visited.emplace_back(result.report.placement,
                                    result.report.objective);
  std::vector<int> k1;
  for (int k : order) {
    std::vector<int> trial = k1;
    trial.push_back(k);
    TecReport candidate =
        solve_given_placement(instance, Placement(std::move(trial)), opts.inner);
    ++result.trace.inner_solves;
    if (detail::improves(candidate.objective, result.report.objective)) {
      k1.push_back(k);
      result.report = std::move(candidate);
      result.trace.visited.emplace_back(result.report.placement,
                                        result.report.objective);
    }
  }
  result.report.diagnostics.inner_solves = result.trace.inner_solves;
  return result;
}

inline TecReport exhaustive_search(const ProblemInstance& instance,
                                   const SearchOptions& opts = {}) {
  return exhaustive_search_traced(instance, opts).report;
}

inline TecReport greedy_search(const ProblemInstance& instance,
                               const SearchOptions& opts = {}) {
  return greedy_search_traced(instance, opts).report;
}

inline TecReport uplink_heuristic(const ProblemInstance& instance,
                                  const SearchOptions& opts = {}) {
  return uplink_heuristic_traced(instance, opts).report;
}

}  // namespace mecopt
