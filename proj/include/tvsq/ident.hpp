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
 * Model identification by minimizing a smoothed outage rate.
 *
 * The outage indicator 1(|x| > 2 eps) is replaced by the penalty U_nu(x, eps)
 * (two logistics of sharpness nu). Training runs a nu-continuation: steepest
 * descent with Armijo backtracking at fixed nu, then nu := 1.2 nu until
 * nu >= 20. Gradients of the recurrent model are propagated forward through
 * the same feedback filter as the model itself, which is why every accepted
 * step must keep rho(f) < 1.
 */

#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tvsq/error.hpp"
#include "tvsq/model.hpp"
#include "tvsq/stability.hpp"
#include "tvsq/trace.hpp"

namespace tvsq {

/// U_nu(x, eps) = h(x, nu, -2 eps) + 1 - h(x, nu, 2 eps) with
/// h(x, a, z) = 1 / (1 + exp(-a (x + z))). Lies in (0, 2) and is even in x.
inline double penalty(double x, double eps, double nu) {
  return sigmoid(nu * (x - 2.0 * eps)) + sigmoid(-nu * (x + 2.0 * eps));
}

/// dU_nu/dx.
inline double penalty_derivative(double x, double eps, double nu) {
  return nu * (sigmoid_slope(nu * (x - 2.0 * eps)) -
               sigmoid_slope(nu * (x + 2.0 * eps)));
}

/// Fraction of post-warm-up seconds where |pred - meas| > 2 ci.
inline double outage_rate(std::span<const double> pred, const TvsqTrace& meas,
                          std::size_t warmup) {
  if (pred.size() != meas.values.size() || meas.ci.size() != pred.size()) {
    throw ContractError("prediction and measurement lengths differ");
  }
  if (warmup >= pred.size()) {
    throw ContractError("no samples after warm-up");
  }
  std::size_t misses = 0;
  for (std::size_t t = warmup; t < pred.size(); ++t) {
    if (std::abs(pred[t] - meas.values[t]) > 2.0 * meas.ci[t]) ++misses;
  }
  return static_cast<double>(misses) /
         static_cast<double>(pred.size() - warmup);
}

/// Latent that reproduces measured quality q through gamma, after pulling q
/// `margin` (as a fraction of |gamma_4|) inside the output range. When `grad`
/// is given it receives d v / d gamma, including the dependence of the clip on
/// gamma.
inline double pinned_latent(double q, const Logistic& gamma,
                            double margin = kOutputClipMargin,
                            std::array<double, 4>* grad = nullptr) {
  double s = output_level(q, gamma);
  bool clipped = false;
  if (!(s >= margin)) {
    s = margin;
    clipped = true;
  } else if (s > 1.0 - margin) {
    s = 1.0 - margin;
    clipped = true;
  }
  const double logit = std::log(s / (1.0 - s));
  const double v = (logit - gamma.bias) / gamma.slope;
  if (grad != nullptr) {
    const double dlogit = 1.0 / (s * (1.0 - s));
    const double ds_doffset = clipped ? 0.0 : -1.0 / gamma.gain;
    const double ds_dgain = clipped ? 0.0 : -s / gamma.gain;
    (*grad)[0] = -v / gamma.slope;
    (*grad)[1] = -1.0 / gamma.slope;
    (*grad)[2] = dlogit * ds_doffset / gamma.slope;
    (*grad)[3] = dlogit * ds_dgain / gamma.slope;
  }
  return v;
}

/// Pinned initialization v[1..r] from measured quality, as used in training.
inline InitPolicy pinned_init(std::span<const double> measured,
                              const Logistic& gamma, std::size_t order,
                              double margin = kOutputClipMargin) {
  if (measured.size() < order) {
    throw ContractError("not enough measured samples to pin the initial state");
  }
  if (gamma.slope == 0.0 || gamma.gain == 0.0) {
    throw ContractError("output nonlinearity is constant and has no inverse");
  }
  Series v(order);
  for (std::size_t t = 0; t < order; ++t) {
    v[t] = pinned_latent(measured[t], gamma, margin);
  }
  return InitPolicy::pin(std::move(v));
}

namespace detail {

struct TraceTotals {
  double penalty_sum = 0.0;
  std::size_t count = 0;
  std::size_t outages = 0;
};

struct Workspace {
  Series u, du, v, gv;
};

/// Simulates one trace with pinned warm-up and accumulates the penalty sum,
/// the outage count and (when `grad` is non-empty) the unnormalized gradient
/// sum_t U'(x_t) d q_t / d theta.
inline TraceTotals evaluate_trace(const HWParams& p, const TraceRecord& item,
                                  double nu, double margin,
                                  std::span<double> grad, Workspace& ws) {
  const std::size_t r = p.order;
  const std::size_t T = item.stsq.size();
  const std::size_t P = p.size();
  const std::size_t i_f = r + 1;
  const std::size_t i_beta = 2 * r + 1;
  const std::size_t i_gamma = 2 * r + 5;
  const bool want_grad = !grad.empty();

  TraceTotals totals;
  totals.count = T - r;
  if (p.gamma.slope == 0.0 || p.gamma.gain == 0.0) {
    totals.penalty_sum = std::numeric_limits<double>::infinity();
    return totals;
  }

  ws.u.resize(T);
  ws.v.resize(T);
  if (want_grad) {
    ws.du.resize(4 * T);
    ws.gv.assign(T * P, 0.0);
  }

  for (std::size_t t = 0; t < T; ++t) {
    ws.u[t] = p.beta(item.stsq[t]);
    if (want_grad) {
      const auto g = p.beta.parameter_gradient(item.stsq[t]);
      std::copy(g.begin(), g.end(), ws.du.begin() + 4 * t);
    }
  }

  std::array<double, 4> dv_dgamma{};
  for (std::size_t t = 0; t < r; ++t) {
    ws.v[t] = pinned_latent(item.tvsq.values[t], p.gamma, margin,
                            want_grad ? &dv_dgamma : nullptr);
    if (want_grad) {
      std::copy(dv_dgamma.begin(), dv_dgamma.end(),
                ws.gv.begin() + t * P + i_gamma);
    }
  }

  for (std::size_t t = r; t < T; ++t) {
    double v = 0.0;
    for (std::size_t d = 0; d <= r; ++d) v += p.b[d] * ws.u[t - d];
    for (std::size_t d = 1; d <= r; ++d) v += p.f[d - 1] * ws.v[t - d];
    ws.v[t] = v;

    const double q = p.gamma(v);
    const double x = q - item.tvsq.values[t];
    const double eps = item.tvsq.ci[t];
    totals.penalty_sum += penalty(x, eps, nu);
    if (std::abs(x) > 2.0 * eps) ++totals.outages;

    if (!want_grad) continue;

    double* G = ws.gv.data() + t * P;
    for (std::size_t d = 0; d <= r; ++d) G[d] = ws.u[t - d];
    for (std::size_t d = 1; d <= r; ++d) G[i_f + d - 1] = ws.v[t - d];
    for (std::size_t k = 0; k < 4; ++k) {
      double acc = 0.0;
      for (std::size_t d = 0; d <= r; ++d) {
        acc += p.b[d] * ws.du[4 * (t - d) + k];
      }
      G[i_beta + k] = acc;
    }
    for (std::size_t d = 1; d <= r; ++d) {
      const double fd = p.f[d - 1];
      const double* prev = ws.gv.data() + (t - d) * P;
      for (std::size_t j = 0; j < P; ++j) G[j] += fd * prev[j];
    }

    const double w = penalty_derivative(x, eps, nu);
    const double wk = w * p.gamma.derivative(v);
    for (std::size_t j = 0; j < P; ++j) grad[j] += wk * G[j];
    const auto direct = p.gamma.parameter_gradient(v);
    for (std::size_t k = 0; k < 4; ++k) grad[i_gamma + k] += w * direct[k];
  }
  return totals;
}

inline void require_stable(const HWParams& p) {
  const double rho = spectral_radius(p.f);
  if (!(rho < 1.0)) {
    throw StabilityError("model feedback is unstable", rho);
  }
}

inline void require_trainable(const HWParams& p, const TrainingDataset& data) {
  validate(p);
  validate(data);
  if (data.length() <= p.order) {
    throw ContractError("traces must be longer than the model order");
  }
}

}  // namespace detail

/// Value and gradient of the smoothed objective in one pass.
struct ObjectiveEval {
  double value = 0.0;
  double outage = 0.0;
  Series gradient;
};

/// Mean penalty (and, if requested, its gradient) over every trace and every
/// t in (r, T], with warm-up latents pinned to the measured quality.
inline ObjectiveEval evaluate_objective(const HWParams& theta,
                                        const TrainingDataset& data, double nu,
                                        bool with_gradient,
                                        double margin = kOutputClipMargin) {
  detail::require_trainable(theta, data);
  detail::require_stable(theta);
  ObjectiveEval out;
  if (with_gradient) out.gradient.assign(theta.size(), 0.0);
  detail::Workspace ws;
  double sum = 0.0;
  std::size_t count = 0;
  std::size_t outages = 0;
  for (const auto& item : data.items) {
    const auto totals = detail::evaluate_trace(
        theta, item, nu, margin,
        with_gradient ? std::span<double>(out.gradient) : std::span<double>(),
        ws);
    sum += totals.penalty_sum;
    count += totals.count;
    outages += totals.outages;
  }
  const double n = static_cast<double>(count);
  out.value = sum / n;
  out.outage = static_cast<double>(outages) / n;
  for (double& g : out.gradient) g /= n;
  return out;
}

/// Smoothed outage rate E^apx_nu(theta).
inline double approx_objective(const HWParams& theta,
                               const TrainingDataset& data, double nu) {
  return evaluate_objective(theta, data, nu, false).value;
}

/// grad_theta E^apx_nu(theta), flattened like `flatten`.
inline Series gradient(const HWParams& theta, const TrainingDataset& data,
                       double nu) {
  return evaluate_objective(theta, data, nu, true).gradient;
}

/// Outage rate E(theta) on the training traces (pinned warm-up).
inline double training_outage(const HWParams& theta,
                              const TrainingDataset& data) {
  return evaluate_objective(theta, data, 1.0, false).outage;
}

// ---------------------------------------------------------------------------
// Steepest descent with backtracking.

struct DescentOptions {
  double initial_step = 1.0;
  double backtrack_factor = 0.7;
  double armijo_coeff = 0.1;
  double descent_tol = 1e-5;
  double min_step = 1e-12;
  double gradient_tol = 1e-10;
  std::size_t max_iters = 20000;
  /// Optional fixed coordinate scale D (empty = identity). The descent runs
  /// on x / D, i.e. steps along -D^2 grad with |D grad|^2 in the Armijo test.
  Series scale;
};

struct DescentOutcome {
  std::size_t iterations = 0;
  bool stalled = false;
  double value = 0.0;
  Series gradient_norms;
};

/// Minimizes `value` from x0. Each outer iteration steps along -gradient with
/// the largest omega in {initial_step * backtrack_factor^k} such that the
/// trial point is `feasible` and satisfies
///   value(x + omega d) <= value(x) - armijo_coeff * omega * |d|^2.
/// Stops when one accepted step decreases the value by less than descent_tol,
/// when |gradient| <= gradient_tol (x is returned unchanged), or when omega
/// drops below min_step (stalled). `on_accept(x, value)` sees every accepted
/// iterate.
template <class Value, class Gradient, class Feasible, class OnAccept>
  requires std::invocable<Value, const Series&> &&
           std::invocable<Gradient, const Series&> &&
           std::predicate<Feasible, const Series&> &&
           std::invocable<OnAccept, const Series&, double>
Series backtracking_descent(Series x, Value&& value, Gradient&& grad,
                            Feasible&& feasible, const DescentOptions& opt,
                            DescentOutcome& outcome, OnAccept&& on_accept) {
  double fx = value(x);
  outcome = DescentOutcome{};
  Series trial(x.size());
  while (outcome.iterations < opt.max_iters) {
    ++outcome.iterations;
    Series g = grad(x);
    if (!opt.scale.empty()) {
      for (std::size_t i = 0; i < g.size(); ++i) g[i] *= opt.scale[i];
    }
    const double norm2 = std::inner_product(g.begin(), g.end(), g.begin(), 0.0);
    if (!opt.scale.empty()) {
      for (std::size_t i = 0; i < g.size(); ++i) g[i] *= opt.scale[i];
    }
    outcome.gradient_norms.push_back(std::sqrt(norm2));
    if (std::sqrt(norm2) <= opt.gradient_tol) break;

    double omega = opt.initial_step;
    double f_trial = fx;
    bool accepted = false;
    while (omega >= opt.min_step) {
      for (std::size_t i = 0; i < x.size(); ++i) trial[i] = x[i] - omega * g[i];
      if (feasible(trial)) {
        f_trial = value(trial);
        if (std::isfinite(f_trial) &&
            f_trial <= fx - opt.armijo_coeff * omega * norm2) {
          accepted = true;
          break;
        }
      }
      omega *= opt.backtrack_factor;
    }
    if (!accepted) {
      outcome.stalled = true;
      break;
    }
    const double decrease = fx - f_trial;
    x.swap(trial);
    fx = f_trial;
    on_accept(x, fx);
    if (decrease < opt.descent_tol) break;
  }
  outcome.value = fx;
  return x;
}

/// Training knobs. Defaults are the published continuation and line-search
/// constants.
struct TrainConfig {
  double nu_init = 0.8;
  double nu_factor = 1.2;
  double nu_max = 20.0;
  double armijo_coeff = 0.1;
  double backtrack_factor = 0.7;
  double descent_tol = 1e-5;
  double initial_step = 1.0;
  double min_step = 1e-12;
  double gradient_tol = 1e-10;
  /// Accepted steps keep rho(f) strictly below this bound.
  double stability_margin = 1.0 - 1e-6;
  std::size_t max_outer_iters = 1000;
  std::size_t max_descent_iters = 20000;
  /// Descend in unit-normalized coordinates (see parameter_scale) instead of
  /// raw parameter units.
  bool normalized_coordinates = true;
};

inline void validate(const TrainConfig& c) {
  auto fail = [](const std::string& m) { throw ContractError(m); };
  if (!(c.nu_init > 0.0)) fail("nu_init must be positive");
  if (!(c.nu_factor > 1.0)) fail("nu_factor must exceed 1");
  if (!(c.nu_max > 0.0)) fail("nu_max must be positive");
  if (!(c.armijo_coeff > 0.0 && c.armijo_coeff < 1.0)) {
    fail("armijo_coeff must lie in (0, 1)");
  }
  if (!(c.backtrack_factor > 0.0 && c.backtrack_factor < 1.0)) {
    fail("backtrack_factor must lie in (0, 1)");
  }
  if (!(c.descent_tol > 0.0)) fail("descent_tol must be positive");
  if (!(c.initial_step > 0.0)) fail("initial_step must be positive");
  if (!(c.min_step > 0.0)) fail("min_step must be positive");
  if (!(c.gradient_tol >= 0.0)) fail("gradient_tol must be non-negative");
  if (!(c.stability_margin > 0.0 && c.stability_margin <= 1.0)) {
    fail("stability_margin must lie in (0, 1]");
  }
  if (c.max_descent_iters == 0) fail("max_descent_iters must be positive");
}

/// Natural magnitude of each parameter when quality is in RDMOS units:
/// 1 for filter taps, (1/100, 1, 100, 100) for each logistic's
/// (slope, bias, offset, gain).
inline Series parameter_scale(std::size_t order) {
  Series d(2 * order + 1, 1.0);
  for (int k = 0; k < 2; ++k) d.insert(d.end(), {0.01, 1.0, 100.0, 100.0});
  return d;
}

inline DescentOptions descent_options(const TrainConfig& c,
                                      std::size_t order) {
  DescentOptions o{c.initial_step, c.backtrack_factor, c.armijo_coeff,
                   c.descent_tol,  c.min_step,         c.gradient_tol,
                   c.max_descent_iters, {}};
  if (c.normalized_coordinates) o.scale = parameter_scale(order);
  return o;
}

/// Sharpness values visited by train(): nu_init * nu_factor^i while < nu_max.
inline Series nu_schedule(const TrainConfig& c) {
  validate(c);
  Series nus;
  for (double nu = c.nu_init; nu < c.nu_max && nus.size() < c.max_outer_iters;
       nu *= c.nu_factor) {
    nus.push_back(nu);
  }
  return nus;
}

/// Callback invoked with every parameter vector a line search accepts.
using AcceptObserver =
    std::function<void(const HWParams& theta, double nu, double objective)>;

struct DescentResult {
  HWParams theta;
  double objective = 0.0;
  DescentOutcome outcome;
};

/// Minimizes E^apx_nu from theta0 at fixed nu.
inline DescentResult gradient_descent(const HWParams& theta0,
                                      const TrainingDataset& data, double nu,
                                      const TrainConfig& config,
                                      const AcceptObserver& observer = {}) {
  validate(config);
  detail::require_trainable(theta0, data);
  {
    const double rho = spectral_radius(theta0.f);
    if (!(rho < config.stability_margin)) {
      throw StabilityError("initial parameters are unstable", rho);
    }
  }
  const std::size_t r = theta0.order;
  const std::size_t f_begin = r + 1;
  const auto feedback = [&](const Series& x) {
    return std::span<const double>(x).subspan(f_begin, r);
  };

  // Objective and gradient reuse one workspace; the dataset is validated once.
  detail::Workspace ws;
  const auto evaluate = [&](const Series& x, std::span<double> grad) {
    const HWParams p = unflatten(r, x);
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& item : data.items) {
      const auto t = detail::evaluate_trace(p, item, nu, kOutputClipMargin,
                                            grad, ws);
      sum += t.penalty_sum;
      count += t.count;
    }
    const double n = static_cast<double>(count);
    for (double& g : grad) g /= n;
    return sum / n;
  };
  const auto value = [&](const Series& x) {
    return evaluate(x, std::span<double>());
  };
  const auto grad = [&](const Series& x) {
    Series g(x.size(), 0.0);
    evaluate(x, g);
    return g;
  };
  const auto feasible = [&](const Series& x) {
    return spectral_radius(feedback(x)) < config.stability_margin;
  };
  const auto on_accept = [&](const Series& x, double fx) {
    if (observer) observer(unflatten(r, x), nu, fx);
  };

  DescentResult result;
  const Series x = backtracking_descent(flatten(theta0), value, grad, feasible,
                                        descent_options(config, r),
                                        result.outcome, on_accept);
  result.theta = unflatten(r, x);
  result.objective = result.outcome.value;
  return result;
}

struct StageRecord {
  double nu = 0.0;
  double approx_objective = 0.0;  ///< E^apx_nu at the end of the stage
  double outage = 0.0;            ///< E at the end of the stage
  std::size_t descent_iterations = 0;
  bool stalled = false;
  bool operator==(const StageRecord&) const = default;
};

struct TrainReport {
  HWParams theta_star;
  double final_outage = 0.0;
  std::vector<StageRecord> history;
  Series gradient_norm_history;
  std::vector<std::string> warnings;
  double wall_time_seconds = 0.0;  ///< excluded from equality
  bool operator==(const TrainReport& o) const {
    return theta_star == o.theta_star && final_outage == o.final_outage &&
           history == o.history &&
           gradient_norm_history == o.gradient_norm_history &&
           warnings == o.warnings;
  }
};

/// nu-continuation: gradient_descent at nu_init, nu_init * nu_factor, ...
/// while nu < nu_max, each stage warm-started from the previous one.
/// Starts from initial_params(r) unless `warm_start` is given.
inline TrainReport train(const TrainingDataset& data, std::size_t r,
                         const TrainConfig& config,
                         const std::optional<HWParams>& warm_start = {},
                         const AcceptObserver& observer = {}) {
  const auto started = std::chrono::steady_clock::now();
  validate(config);
  validate(data);
  if (r < 1) throw ContractError("model order must be >= 1");
  if (data.length() <= r) {
    throw ContractError("traces must be longer than the model order");
  }
  HWParams theta = warm_start ? *warm_start : initial_params(r);
  if (theta.order != r) {
    throw ContractError("warm start has order " + std::to_string(theta.order) +
                        ", expected " + std::to_string(r));
  }

  TrainReport report;
  for (double nu : nu_schedule(config)) {
    DescentResult stage = gradient_descent(theta, data, nu, config, observer);
    theta = std::move(stage.theta);
    StageRecord rec;
    rec.nu = nu;
    rec.approx_objective = stage.objective;
    rec.outage = training_outage(theta, data);
    rec.descent_iterations = stage.outcome.iterations;
    rec.stalled = stage.outcome.stalled;
    report.history.push_back(rec);
    report.gradient_norm_history.insert(report.gradient_norm_history.end(),
                                        stage.outcome.gradient_norms.begin(),
                                        stage.outcome.gradient_norms.end());
    if (rec.stalled) {
      report.warnings.push_back("line search stalled at nu=" +
                                std::to_string(nu));
    }
  }
  report.theta_star = std::move(theta);
  report.final_outage = training_outage(report.theta_star, data);
  report.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started)
          .count();
  return report;
}

}  // namespace tvsq
