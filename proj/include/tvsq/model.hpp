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
 * Hammerstein-Wiener model: a static input logistic, a linear IIR filter and a
 * static output logistic, simulated on per-second quality series.
 *
 * With u the latent input and v the latent output,
 *
 *   u[t] = beta(q_st[t])
 *   v[t] = sum_{d=0..r} b_d u[t-d] + sum_{d=1..r} f_d v[t-d]
 *   q[t] = gamma(v[t])
 *
 * The first r samples of every simulation are warm-up: v[1..r] comes from an
 * InitPolicy instead of the recursion.
 */

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tvsq/error.hpp"
#include "tvsq/stability.hpp"

namespace tvsq {

using Series = std::vector<double>;

/// Standard logistic 1 / (1 + exp(-z)).
inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

/// sigmoid'(z) = sigmoid(z) sigmoid(-z), evaluated without cancellation.
inline double sigmoid_slope(double z) {
  const double e = std::exp(-std::abs(z));
  return e / ((1.0 + e) * (1.0 + e));
}

/// Generalized logistic  x -> offset + gain / (1 + exp(-(slope x + bias))).
/// Field order matches the 4-vectors (beta_1..beta_4), (gamma_1..gamma_4).
struct Logistic {
  double slope = 0.0;
  double bias = 0.0;
  double offset = 0.0;
  double gain = 0.0;

  double operator()(double x) const {
    return offset + gain * sigmoid(slope * x + bias);
  }
  /// d/dx of the map.
  double derivative(double x) const {
    return gain * slope * sigmoid_slope(slope * x + bias);
  }
  /// Partial derivatives with respect to (slope, bias, offset, gain).
  std::array<double, 4> parameter_gradient(double x) const {
    const double z = slope * x + bias;
    const double ds = gain * sigmoid_slope(z);
    return {ds * x, ds, 1.0, sigmoid(z)};
  }
  double lower() const { return std::min(offset, offset + gain); }
  double upper() const { return std::max(offset, offset + gain); }

  std::array<double, 4> to_array() const { return {slope, bias, offset, gain}; }
  static Logistic from_array(std::span<const double> p) {
    if (p.size() != 4) throw ContractError("logistic needs 4 parameters");
    return {p[0], p[1], p[2], p[3]};
  }
  bool operator==(const Logistic&) const = default;
};

/// u = beta_3 + beta_4 / (1 + exp(-(beta_1 q + beta_2))).
inline double input_nonlinearity(double q_st, const Logistic& beta) {
  return beta(q_st);
}

/// q = gamma_3 + gamma_4 / (1 + exp(-(gamma_1 v + gamma_2))).
inline double output_nonlinearity(double v, const Logistic& gamma) {
  return gamma(v);
}

/// Normalized level (q - gamma_3) / gamma_4; lies in (0, 1) exactly when q is
/// inside the open range of the output map.
inline double output_level(double q, const Logistic& gamma) {
  return (q - gamma.offset) / gamma.gain;
}

/// Latent v with output_nonlinearity(v, gamma) == q.
/// Throws RangeError when q is not strictly inside the output range and
/// ContractError when the map is not invertible (gamma_1 or gamma_4 zero).
inline double invert_output_nonlinearity(double q, const Logistic& gamma) {
  if (gamma.slope == 0.0 || gamma.gain == 0.0) {
    throw ContractError("output nonlinearity is constant and has no inverse");
  }
  const double s = output_level(q, gamma);
  if (!(s > 0.0 && s < 1.0)) {
    throw RangeError("quality " + std::to_string(q) +
                         " is outside the output nonlinearity range",
                     gamma.lower(), gamma.upper());
  }
  return (std::log(s / (1.0 - s)) - gamma.bias) / gamma.slope;
}

/// Default inward margin, as a fraction of |gamma_4|, for clip_to_output_range.
inline constexpr double kOutputClipMargin = 1e-3;

/// Pulls q into [lower + margin |gain|, upper - margin |gain|].
inline double clip_to_output_range(double q, const Logistic& gamma,
                                   double margin = kOutputClipMargin) {
  const double pad = margin * std::abs(gamma.gain);
  return std::clamp(q, gamma.lower() + pad, gamma.upper() - pad);
}

/// Logistic that is within 1.6 RDMOS of the identity on [0, 100]: the
/// logistic over z in [-1, 1], rescaled so that 0 -> 0 and 100 -> 100.
inline Logistic near_identity_logistic() {
  constexpr double kSlope = 0.02;
  constexpr double kBias = -1.0;
  const double lo = sigmoid(kBias);
  const double hi = sigmoid(kSlope * 100.0 + kBias);
  const double gain = 100.0 / (hi - lo);
  return {kSlope, kBias, -gain * lo, gain};
}

/// Full parameter set theta = (b, f, beta, gamma) of an order-r model.
struct HWParams {
  std::size_t order = 0;  ///< r, seconds of memory in the filter
  Series b;               ///< feedforward b_0..b_r
  Series f;               ///< feedback f_1..f_r
  Logistic beta;          ///< input nonlinearity
  Logistic gamma;         ///< output nonlinearity

  /// Length of the flattened vector: (r+1) + r + 4 + 4.
  std::size_t size() const { return 2 * order + 9; }
  bool operator==(const HWParams&) const = default;
};

/// Throws ContractError unless the coefficient lengths match the order and
/// every entry is finite.
inline void validate(const HWParams& p) {
  if (p.order < 1) throw ContractError("model order must be >= 1");
  if (p.b.size() != p.order + 1) {
    throw ContractError("b must have r+1 = " + std::to_string(p.order + 1) +
                        " entries, got " + std::to_string(p.b.size()));
  }
  if (p.f.size() != p.order) {
    throw ContractError("f must have r = " + std::to_string(p.order) +
                        " entries, got " + std::to_string(p.f.size()));
  }
  const auto finite = [](double x) { return std::isfinite(x); };
  if (!std::all_of(p.b.begin(), p.b.end(), finite) ||
      !std::all_of(p.f.begin(), p.f.end(), finite)) {
    throw ContractError("filter coefficients must be finite");
  }
  for (const Logistic* g : {&p.beta, &p.gamma}) {
    const auto a = g->to_array();
    if (!std::all_of(a.begin(), a.end(), finite)) {
      throw ContractError("nonlinearity parameters must be finite");
    }
  }
}

/// Layout: b_0..b_r, f_1..f_r, beta_1..beta_4, gamma_1..gamma_4.
inline Series flatten(const HWParams& p) {
  Series theta;
  theta.reserve(p.size());
  theta.insert(theta.end(), p.b.begin(), p.b.end());
  theta.insert(theta.end(), p.f.begin(), p.f.end());
  for (double x : p.beta.to_array()) theta.push_back(x);
  for (double x : p.gamma.to_array()) theta.push_back(x);
  return theta;
}

inline HWParams unflatten(std::size_t order, std::span<const double> theta) {
  if (theta.size() != 2 * order + 9) {
    throw ContractError("parameter vector has wrong length for order " +
                        std::to_string(order));
  }
  HWParams p;
  p.order = order;
  p.b.assign(theta.begin(), theta.begin() + order + 1);
  p.f.assign(theta.begin() + order + 1, theta.begin() + 2 * order + 1);
  p.beta = Logistic::from_array(theta.subspan(2 * order + 1, 4));
  p.gamma = Logistic::from_array(theta.subspan(2 * order + 5, 4));
  return p;
}

/// Training start: near-identity logistics and a moving-average filter with
/// unit DC gain, so the untrained model roughly tracks the input.
inline HWParams initial_params(std::size_t order) {
  HWParams p;
  p.order = order;
  p.b.assign(order + 1, 1.0 / static_cast<double>(order + 1));
  p.f.assign(order, 0.0);
  p.beta = near_identity_logistic();
  p.gamma = near_identity_logistic();
  return p;
}

/// Steady-state gain sum(b) / (1 - sum(f)) of the linear filter.
inline double dc_gain(std::span<const double> b, std::span<const double> f) {
  const double num = std::accumulate(b.begin(), b.end(), 0.0);
  const double den = 1.0 - std::accumulate(f.begin(), f.end(), 0.0);
  return num / den;
}

/// One step of the recursion. u_window = u[t-r..t], v_window = v[t-r..t-1],
/// both oldest first.
inline double filter_step(std::span<const double> u_window,
                          std::span<const double> v_window,
                          std::span<const double> b,
                          std::span<const double> f) {
  const std::size_t r = f.size();
  if (b.size() != r + 1 || u_window.size() != r + 1 || v_window.size() != r) {
    throw ContractError("filter_step window lengths must be r+1 and r");
  }
  double acc = 0.0;
  for (std::size_t d = 0; d <= r; ++d) acc += b[d] * u_window[r - d];
  for (std::size_t d = 1; d <= r; ++d) acc += f[d - 1] * v_window[r - d];
  return acc;
}

enum class InitKind { kZeroState, kPinned, kHoldFirstInput };

inline const char* to_string(InitKind k) {
  switch (k) {
    case InitKind::kZeroState: return "zero-state";
    case InitKind::kPinned: return "pinned";
    case InitKind::kHoldFirstInput: return "hold-first-input";
  }
  return "?";
}

/// How the warm-up latents v[1..r] are filled.
struct InitPolicy {
  InitKind kind = InitKind::kZeroState;
  Series pinned;  ///< v[1..r] for kPinned

  static InitPolicy zero_state() { return {}; }
  static InitPolicy hold_first_input() { return {InitKind::kHoldFirstInput, {}}; }
  static InitPolicy pin(Series v_init) {
    return {InitKind::kPinned, std::move(v_init)};
  }
};

struct SimulateOptions {
  /// Skip the rho(f) < 1 precondition (diagnostics only).
  bool allow_unstable = false;
};

/// Internal series of one simulation: u = beta(q_st), v = filter(u).
struct LatentTrace {
  Series u;
  Series v;
};

struct PredictedTrace {
  Series values;           ///< predicted quality for t = 1..T
  std::size_t warmup = 0;  ///< first `warmup` values come from initialization
  InitKind init = InitKind::kZeroState;
};

namespace detail {

inline void check_simulation_inputs(std::span<const double> stsq,
                                    const HWParams& params,
                                    const InitPolicy& init,
                                    const SimulateOptions& options) {
  validate(params);
  if (stsq.size() < params.order + 1) {
    throw ContractError("trace of length " + std::to_string(stsq.size()) +
                        " is too short for order " +
                        std::to_string(params.order));
  }
  for (double q : stsq) {
    if (!std::isfinite(q)) throw ContractError("STSQ values must be finite");
  }
  if (init.kind == InitKind::kPinned && init.pinned.size() != params.order) {
    throw ContractError("pinned initialization needs exactly r latents");
  }
  if (!options.allow_unstable) {
    const double rho = spectral_radius(params.f);
    if (!(rho < 1.0)) {
      throw StabilityError("feedback coefficients are unstable", rho);
    }
  }
}

}  // namespace detail

/// Runs the input map and the IIR recursion; no output map.
inline LatentTrace simulate_latent(std::span<const double> stsq,
                                   const HWParams& params,
                                   const InitPolicy& init,
                                   const SimulateOptions& options = {}) {
  detail::check_simulation_inputs(stsq, params, init, options);
  const std::size_t r = params.order;
  const std::size_t T = stsq.size();

  LatentTrace out;
  out.u.resize(T);
  out.v.assign(T, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    out.u[t] = input_nonlinearity(stsq[t], params.beta);
  }

  switch (init.kind) {
    case InitKind::kZeroState:
      break;
    case InitKind::kPinned:
      std::copy(init.pinned.begin(), init.pinned.end(), out.v.begin());
      break;
    case InitKind::kHoldFirstInput: {
      const double v0 = out.u[0] * dc_gain(params.b, params.f);
      std::fill(out.v.begin(), out.v.begin() + r, v0);
      break;
    }
  }

  const std::span<const double> u(out.u);
  const std::span<const double> v(out.v);
  for (std::size_t t = r; t < T; ++t) {
    out.v[t] = filter_step(u.subspan(t - r, r + 1), v.subspan(t - r, r),
                           params.b, params.f);
  }
  return out;
}

/// Predicted quality q[t] = gamma(v[t]) for t = 1..T.
inline PredictedTrace simulate(std::span<const double> stsq,
                               const HWParams& params, const InitPolicy& init,
                               const SimulateOptions& options = {}) {
  const LatentTrace latent = simulate_latent(stsq, params, init, options);
  PredictedTrace out;
  out.warmup = params.order;
  out.init = init.kind;
  out.values.resize(latent.v.size());
  for (std::size_t t = 0; t < latent.v.size(); ++t) {
    out.values[t] = output_nonlinearity(latent.v[t], params.gamma);
  }
  return out;
}

/// Affine replacement q = slope v + intercept for the output logistic.
struct LinearOutput {
  double slope = 1.0;
  double intercept = 0.0;
  bool operator==(const LinearOutput&) const = default;
};

/// Fitted affine output map reported for the simplified model.
inline constexpr LinearOutput kPublishedLinearOutput{0.7013, 49.9794};

/// As simulate, with the output logistic replaced by `lin`. params.gamma is
/// ignored.
inline PredictedTrace simulate_linear_output(
    std::span<const double> stsq, const HWParams& params,
    const LinearOutput& lin, const InitPolicy& init,
    const SimulateOptions& options = {}) {
  if (!(lin.slope > 0.0) || !std::isfinite(lin.intercept)) {
    throw ContractError("linear output slope must be positive");
  }
  const LatentTrace latent = simulate_latent(stsq, params, init, options);
  PredictedTrace out;
  out.warmup = params.order;
  out.init = init.kind;
  out.values.resize(latent.v.size());
  for (std::size_t t = 0; t < latent.v.size(); ++t) {
    out.values[t] = lin.slope * latent.v[t] + lin.intercept;
  }
  return out;
}

}  // namespace tvsq
