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

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mecopt/errors.hpp"

namespace mecopt {

/// Principal-branch Lambert W on [-1/e, 0], i.e. the w in [-1, 0] with
/// w*exp(w) = x. Inputs up to 1e-12 below -1/e are clamped to the
/// branch point; anything further out (or positive) throws DomainError.
///
/// Halley iteration seeded by the branch-point series for x near -1/e
/// and the Maclaurin series elsewhere; residual target 1e-12*max(1,|x|),
/// with a bisection fallback on the monotone map w -> w*exp(w).
inline double lambert_w0(double x) {
  constexpr double kBranch = -0.36787944117144233;  // -1/e
  if (x > 0.0 || x < kBranch - 1e-12) {
    throw DomainError("lambert_w0: argument " + std::to_string(x) +
                      " outside [-1/e, 0]");
  }
  if (x > -1e-300) return 0.0;
  if (x < kBranch) x = kBranch;

  const double tol = 1e-12 * std::max(1.0, std::abs(x));
  double w;
  const double p2 = 2.0 * (1.0 + std::exp(1.0) * x);
  if (p2 < 1e-12) return -1.0;  // series residual already below target
  if (x < -0.25) {
    const double p = std::sqrt(p2);
    w = -1.0 + p * (1.0 - p * (1.0 / 3.0 - p * (11.0 / 72.0)));
  } else {
    w = x * (1.0 - x * (1.0 - 1.5 * x));
  }

  for (int it = 0; it < 32; ++it) {
    const double ew = std::exp(w);
    const double f = w * ew - x;
    if (std::abs(f) <= tol) return std::clamp(w, -1.0, 0.0);
    const double d1 = ew * (w + 1.0);
    const double denom = d1 - (w + 2.0) * f / (2.0 * w + 2.0);
    if (denom == 0.0 || !std::isfinite(denom)) break;
    const double next = w - f / denom;
    if (!std::isfinite(next)) break;
    w = std::clamp(next, -1.0, 0.0);
  }

  // Bisection fallback: w*exp(w) is increasing on [-1, 0].
  double lo = -1.0, hi = 0.0;
  for (int it = 0; it < 200 && hi - lo > 1e-17; ++it) {
    const double mid = 0.5 * (lo + hi);
    (mid * std::exp(mid) < x ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// A 1-D search interval with its termination width.
struct Bracket {
  double lo;
  double hi;
  double tolerance;
};

/// Minimizes a convex scalar function given only its (non-decreasing)
/// derivative: brackets the sign change of `derivative` down to
/// `tolerance` width by bisection. Clamps to an endpoint when the
/// derivative does not change sign inside the bracket. Also serves as
/// a root finder for any non-decreasing function.
template <class F>
double minimize_scalar_convex(F&& derivative, Bracket bracket) {
  if (!(bracket.lo < bracket.hi) || !(bracket.tolerance > 0.0)) {
    throw DomainError("minimize_scalar_convex: invalid bracket");
  }
  double lo = bracket.lo, hi = bracket.hi;
  if (derivative(lo) >= 0.0) return lo;
  if (derivative(hi) <= 0.0) return hi;
  while (hi - lo > bracket.tolerance) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;  // bracket at rounding resolution
    (derivative(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// The ellipsoid {x : (x-c)' P^{-1} (x-c) <= 1}, stored as its center
/// and the shape matrix P (row-major, symmetric positive-definite).
struct EllipsoidState {
  std::vector<double> center;
  std::vector<double> shape;
  long iterations = 0;

  int dim() const { return static_cast<int>(center.size()); }

  static EllipsoidState ball(std::span<const double> center, double radius) {
    EllipsoidState e;
    e.center.assign(center.begin(), center.end());
    const std::size_t m = e.center.size();
    e.shape.assign(m * m, 0.0);
    for (std::size_t i = 0; i < m; ++i) e.shape[i * m + i] = radius * radius;
    return e;
  }
};

/// Applies one central cut that keeps the half-ellipsoid
/// {x : g.(x - center) <= 0}:
///   c <- c - P g~ / (m+1),   P <- m^2/(m^2-1) (P - 2/(m+1) P g~ g~' P),
/// with g~ = g / sqrt(g'Pg). For m = 1 this degenerates to interval
/// halving. Returns sqrt(g'Pg), the width of the ellipsoid along g,
/// which bounds the objective gap when g is a subgradient cut.
/// Throws DegenerateCut when g'Pg is not strictly positive.
inline double ellipsoid_cut(EllipsoidState& e, std::span<const double> g) {
  const int m = e.dim();
  std::vector<double> pg(static_cast<std::size_t>(m), 0.0);
  for (int i = 0; i < m; ++i) {
    double s = 0.0;
    const double* row = &e.shape[static_cast<std::size_t>(i) * m];
    for (int j = 0; j < m; ++j) s += row[j] * g[static_cast<std::size_t>(j)];
    pg[static_cast<std::size_t>(i)] = s;
  }
  double gpg = 0.0;
  for (int i = 0; i < m; ++i) gpg += g[static_cast<std::size_t>(i)] * pg[static_cast<std::size_t>(i)];
  if (!(gpg > 0.0) || !std::isfinite(gpg)) {
    throw DegenerateCut("ellipsoid_cut: g'Pg = " + std::to_string(gpg));
  }
  const double norm = std::sqrt(gpg);

  const double step = 1.0 / (m + 1.0);
  for (int i = 0; i < m; ++i) {
    e.center[static_cast<std::size_t>(i)] -= step * pg[static_cast<std::size_t>(i)] / norm;
  }
  if (m == 1) {
    e.shape[0] *= 0.25;
  } else {
    const double scale = static_cast<double>(m) * m / (static_cast<double>(m) * m - 1.0);
    const double rank1 = 2.0 * step / gpg;
    for (int i = 0; i < m; ++i) {
      for (int j = i; j < m; ++j) {
        const double v = scale * (e.shape[static_cast<std::size_t>(i) * m + j] -
                                  rank1 * pg[static_cast<std::size_t>(i)] * pg[static_cast<std::size_t>(j)]);
        e.shape[static_cast<std::size_t>(i) * m + j] = v;
        e.shape[static_cast<std::size_t>(j) * m + i] = v;
      }
    }
  }
  ++e.iterations;
  return norm;
}

struct EllipsoidResult {
  std::vector<double> center;
  long iterations = 0;
  double final_cut_norm = std::numeric_limits<double>::infinity();
  bool converged = false;
};

/// Maximizes a concave (possibly nonsmooth) function over a sign- or
/// otherwise-constrained domain via central cuts. The oracle maps a
/// query point to a cut vector g meaning "the optimum satisfies
/// g.(x - query) <= 0": a feasibility cut for a violated constraint,
/// or the negated supergradient of the objective at a feasible point.
/// Stops when sqrt(g'Pg) <= stop_tol (the returned center is then the
/// last query point, whose objective gap is bounded by stop_tol) or
/// after max_iter cuts.
template <class Oracle>
EllipsoidResult ellipsoid_maximize(Oracle&& oracle,
                                   std::span<const double> init_center,
                                   double init_radius, double stop_tol,
                                   long max_iter) {
  EllipsoidState e = EllipsoidState::ball(init_center, init_radius);
  EllipsoidResult result;
  std::vector<double> g;
  while (e.iterations < max_iter) {
    g = oracle(std::span<const double>(e.center));
    result.center = e.center;
    result.final_cut_norm = ellipsoid_cut(e, g);
    result.iterations = e.iterations;
    if (result.final_cut_norm <= stop_tol) {
      result.converged = true;
      return result;
    }
  }
  result.center = e.center;
  result.iterations = e.iterations;
  return result;
}

}  // namespace mecopt
