// Copyright 2026 The tvsq Authors
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

/** @file
 * Diagnostics for a fitted model: memory horizon, impulse response, output
 * bounds, initial-state decay and nonlinearity profiles.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "tvsq/error.hpp"
#include "tvsq/model.hpp"
#include "tvsq/stability.hpp"

namespace tvsq {

/// tau = -3 / ln(rho): seconds for the initial-state influence to fall to
/// e^-3. rho = 0 (FIR filter) gives 0.
inline double memory_constant_from_radius(double rho) {
  if (!(rho < 1.0)) throw StabilityError("memory constant undefined", rho);
  if (rho == 0.0) return 0.0;
  return -3.0 / std::log(rho);
}

inline double memory_constant(std::span<const double> f) {
  return memory_constant_from_radius(spectral_radius(f));
}

inline constexpr double kImpulseTolerance = 1e-9;

/// h[0..L] of b(z) / (1 - f(z)). L is the first index >= r at which
///   sum_{d > L} |h[d]| <= max_{k < r} |h[L-k]| rho_bar^{k+1} / (1 - rho_bar)
/// falls below `tol`, with rho_bar between the root radius of
/// z^r - sum |f_d| z^{r-d} and 1 (which makes the bound rigorous). When that
/// radius is >= 1 the same bound is used with rho_bar = (1 + rho(f)) / 2.
inline Series impulse_response(std::span<const double> b,
                               std::span<const double> f,
                               double tol = kImpulseTolerance) {
  const std::size_t r = f.size();
  if (b.size() != r + 1) throw ContractError("b must have r+1 entries");
  if (!(tol > 0.0)) throw ContractError("tolerance must be positive");
  const double rho = spectral_radius(f);
  if (!(rho < 1.0)) throw StabilityError("impulse response diverges", rho);
  if (std::all_of(f.begin(), f.end(), [](double x) { return x == 0.0; })) {
    return Series(b.begin(), b.end());
  }

  Series abs_f(r);
  std::transform(f.begin(), f.end(), abs_f.begin(),
                 [](double x) { return std::abs(x); });
  const double rho_abs = spectral_radius(abs_f);
  const double rho_bar =
      rho_abs < 1.0 ? rho_abs + 0.5 * (1.0 - rho_abs) : 0.5 * (1.0 + rho);

  constexpr std::size_t kMaxLength = 10'000'000;
  Series h;
  for (std::size_t d = 0; d < kMaxLength; ++d) {
    double acc = d <= r ? b[d] : 0.0;
    for (std::size_t k = 1; k <= r && k <= d; ++k) acc += f[k - 1] * h[d - k];
    h.push_back(acc);
    if (d < r) continue;
    double bound = 0.0;
    double power = rho_bar;
    for (std::size_t k = 0; k < r; ++k, power *= rho_bar) {
      bound = std::max(bound, std::abs(h[d - k]) * power);
    }
    if (bound / (1.0 - rho_bar) < tol) break;
  }
  return h;
}

inline double l1_norm(std::span<const double> h) {
  double s = 0.0;
  for (double x : h) s += std::abs(x);
  return s;
}

/// Index of the largest h[d].
inline std::size_t peak_lag(std::span<const double> h) {
  if (h.empty()) return 0;
  return static_cast<std::size_t>(std::max_element(h.begin(), h.end()) -
                                  h.begin());
}

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(const Interval& o) const { return lo <= o.lo && o.hi <= hi; }
};

/// Image of [lo, hi] under a monotone logistic.
inline Interval monotone_image(const Logistic& g, Interval x) {
  const double a = g(x.lo);
  const double b = g(x.hi);
  return {std::min(a, b), std::max(a, b)};
}

struct OutputBounds {
  Interval input;          ///< quality range fed to the model
  Interval latent_input;   ///< u range
  Interval latent_output;  ///< v range, sign-split over h
  Interval output;         ///< predicted quality range
  double coarse_latent = 0.0;  ///< |h|_1 max|u|
  Interval coarse_output;      ///< gamma([-coarse_latent, coarse_latent])
};

/// Bounded-input bounded-output range of the full model for steady inputs in
/// `input`. The latent bound splits h by sign:
///   v_max = sum_{h>0} h u_max + sum_{h<0} h u_min   (and symmetrically),
/// which is never wider than the |h|_1 |u|_inf bound also reported.
inline OutputBounds bibo_range(const HWParams& params,
                               Interval input = {0.0, 100.0},
                               double tol = kImpulseTolerance) {
  validate(params);
  const Series h = impulse_response(params.b, params.f, tol);
  OutputBounds out;
  out.input = input;
  out.latent_input = monotone_image(params.beta, input);
  const double u_lo = out.latent_input.lo;
  const double u_hi = out.latent_input.hi;
  double v_lo = 0.0;
  double v_hi = 0.0;
  for (double hd : h) {
    if (hd > 0.0) {
      v_hi += hd * u_hi;
      v_lo += hd * u_lo;
    } else {
      v_hi += hd * u_lo;
      v_lo += hd * u_hi;
    }
  }
  out.latent_output = {v_lo, v_hi};
  out.output = monotone_image(params.gamma, out.latent_output);
  out.coarse_latent = l1_norm(h) * std::max(std::abs(u_lo), std::abs(u_hi));
  out.coarse_output =
      monotone_image(params.gamma, {-out.coarse_latent, out.coarse_latent});
  return out;
}

/// |q_a[t] - q_b[t]| for two initializations of the same simulation.
inline Series initial_state_decay(const HWParams& params,
                                  std::span<const double> stsq,
                                  const InitPolicy& init_a,
                                  const InitPolicy& init_b) {
  const auto a = simulate(stsq, params, init_a);
  const auto b = simulate(stsq, params, init_b);
  Series gap(a.values.size());
  for (std::size_t t = 0; t < gap.size(); ++t) {
    gap[t] = std::abs(a.values[t] - b.values[t]);
  }
  return gap;
}

/// A logistic sampled on a grid.
struct Curve {
  Series x;
  Series y;
  Series slope;
  /// Slopes are non-increasing along the grid (concave on the grid).
  bool concave = false;
  /// Largest |y - chord| where the chord joins the first and last samples.
  double chord_deviation = 0.0;
};

inline Curve sample_curve(const Logistic& g, std::span<const double> grid) {
  Curve c;
  c.x.assign(grid.begin(), grid.end());
  for (double x : grid) {
    c.y.push_back(g(x));
    c.slope.push_back(g.derivative(x));
  }
  c.concave = true;
  for (std::size_t i = 1; i < c.slope.size(); ++i) {
    if (c.slope[i] > c.slope[i - 1]) c.concave = false;
  }
  if (c.x.size() >= 2 && c.x.back() != c.x.front()) {
    const double k = (c.y.back() - c.y.front()) / (c.x.back() - c.x.front());
    for (std::size_t i = 0; i < c.x.size(); ++i) {
      const double chord = c.y.front() + k * (c.x[i] - c.x.front());
      c.chord_deviation = std::max(c.chord_deviation, std::abs(c.y[i] - chord));
    }
  }
  return c;
}

/// n evenly spaced points on [lo, hi] (n >= 2).
inline Series linear_grid(double lo, double hi, std::size_t n) {
  if (n < 2) throw ContractError("grid needs at least two points");
  Series g(n);
  for (std::size_t i = 0; i < n; ++i) {
    g[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  return g;
}

struct NonlinearityProfile {
  Curve input;   ///< beta over the quality grid
  Curve output;  ///< gamma over the latent grid
};

/// Input curve over `quality_grid`; output curve over `latent_grid`, or, when
/// that is empty, over the latent range the input curve reaches.
inline NonlinearityProfile nonlinearity_profile(
    const HWParams& params, std::span<const double> quality_grid,
    std::span<const double> latent_grid = {}) {
  NonlinearityProfile p;
  p.input = sample_curve(params.beta, quality_grid);
  if (!latent_grid.empty()) {
    p.output = sample_curve(params.gamma, latent_grid);
  } else {
    const auto [lo, hi] = std::minmax_element(p.input.y.begin(), p.input.y.end());
    p.output = sample_curve(params.gamma,
                            linear_grid(*lo, *hi, quality_grid.size()));
  }
  return p;
}

struct StabilityReport {
  double rho = 0.0;
  double tau = 0.0;
  Series impulse;
  double l1_norm = 0.0;
  std::size_t peak_lag = 0;
  OutputBounds bounds;
};

inline StabilityReport stability_report(const HWParams& params,
                                        Interval input = {0.0, 100.0},
                                        double tol = kImpulseTolerance) {
  validate(params);
  StabilityReport s;
  s.rho = spectral_radius(params.f);
  s.tau = memory_constant_from_radius(s.rho);
  s.impulse = impulse_response(params.b, params.f, tol);
  s.l1_norm = l1_norm(s.impulse);
  s.peak_lag = peak_lag(s.impulse);
  s.bounds = bibo_range(params, input, tol);
  return s;
}

}  // namespace tvsq
