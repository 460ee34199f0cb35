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
 * Prediction quality metrics and the temporal-pooling baselines.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tvsq/error.hpp"
#include "tvsq/ident.hpp"
#include "tvsq/model.hpp"
#include "tvsq/trace.hpp"

namespace tvsq {

/// Pearson correlation; nullopt when either series is constant.
inline std::optional<double> pearson(std::span<const double> a,
                                     std::span<const double> b) {
  if (a.size() != b.size()) throw ContractError("series lengths differ");
  if (a.size() < 2) return std::nullopt;
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0;
  double saa = 0.0;
  double sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return std::nullopt;
  return sab / std::sqrt(saa * sbb);
}

/// 1-based ranks; tied values share the mean of their ranks.
inline Series average_ranks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return x[i] < x[j]; });
  Series ranks(x.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

/// Spearman rank correlation (Pearson on average ranks).
inline std::optional<double> spearman(std::span<const double> a,
                                      std::span<const double> b) {
  if (a.size() != b.size()) throw ContractError("series lengths differ");
  const Series ra = average_ranks(a);
  const Series rb = average_ranks(b);
  return pearson(ra, rb);
}

enum class Pooling { kMax, kMin, kMedian, kMean };

inline const char* to_string(Pooling p) {
  switch (p) {
    case Pooling::kMax: return "max";
    case Pooling::kMin: return "min";
    case Pooling::kMedian: return "median";
    case Pooling::kMean: return "mean";
  }
  return "?";
}

inline constexpr Pooling kAllPoolings[] = {Pooling::kMax, Pooling::kMin,
                                           Pooling::kMedian, Pooling::kMean};

/// Window length of the pooling baselines, in seconds.
inline constexpr std::size_t kPoolingWindow = 12;

inline double pool(std::span<const double> window, Pooling kind) {
  if (window.empty()) throw ContractError("empty pooling window");
  switch (kind) {
    case Pooling::kMax: return *std::max_element(window.begin(), window.end());
    case Pooling::kMin: return *std::min_element(window.begin(), window.end());
    case Pooling::kMean:
      return std::accumulate(window.begin(), window.end(), 0.0) /
             static_cast<double>(window.size());
    case Pooling::kMedian: {
      Series w(window.begin(), window.end());
      std::sort(w.begin(), w.end());
      const std::size_t m = w.size() / 2;
      return w.size() % 2 ? w[m] : 0.5 * (w[m - 1] + w[m]);
    }
  }
  return 0.0;
}

/// Baseline prediction at t: pool of stsq over the trailing window
/// [max(1, t - width + 1), t].
inline Series pooled_prediction(std::span<const double> stsq,
                                std::size_t width, Pooling kind) {
  if (width < 1) throw ContractError("pooling width must be >= 1");
  Series out(stsq.size());
  for (std::size_t t = 0; t < stsq.size(); ++t) {
    const std::size_t begin = t + 1 >= width ? t + 1 - width : 0;
    out[t] = pool(stsq.subspan(begin, t + 1 - begin), kind);
  }
  return out;
}

struct TraceMetrics {
  std::string name;
  double outage = 0.0;
  std::optional<double> pearson;
  std::optional<double> spearman;
};

struct EvalMetrics {
  std::size_t warmup = 0;
  std::size_t samples = 0;
  /// Over all post-warm-up samples of all traces.
  double outage = 0.0;
  std::optional<double> pearson;
  std::optional<double> spearman;
  /// Means of the per-trace values (undefined traces skipped).
  double mean_outage = 0.0;
  std::optional<double> mean_pearson;
  std::optional<double> mean_spearman;
  std::vector<TraceMetrics> per_trace;
  std::vector<std::string> warnings;
};

namespace detail {

inline std::optional<double> mean_defined(
    const std::vector<std::optional<double>>& xs) {
  double s = 0.0;
  std::size_t n = 0;
  for (const auto& x : xs) {
    if (x) {
      s += *x;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return s / static_cast<double>(n);
}

}  // namespace detail

/// Scores predictions[n] against data.items[n] on t > warmup.
inline EvalMetrics evaluate_predictions(const std::vector<Series>& predictions,
                                        const TrainingDataset& data,
                                        std::size_t warmup) {
  validate(data);
  if (predictions.size() != data.size()) {
    throw ContractError("need one prediction per trace");
  }
  EvalMetrics m;
  m.warmup = warmup;
  Series all_pred;
  Series all_meas;
  std::size_t misses = 0;
  std::vector<std::optional<double>> pearsons;
  std::vector<std::optional<double>> spearmans;
  for (std::size_t n = 0; n < data.size(); ++n) {
    const auto& item = data.items[n];
    const auto& pred = predictions[n];
    TraceMetrics tm;
    tm.name = item.name;
    tm.outage = outage_rate(pred, item.tvsq, warmup);
    const std::span<const double> p = std::span(pred).subspan(warmup);
    const std::span<const double> q =
        std::span(item.tvsq.values).subspan(warmup);
    tm.pearson = pearson(p, q);
    tm.spearman = spearman(p, q);
    if (!tm.pearson || !tm.spearman) {
      m.warnings.push_back("correlation undefined for constant series in " +
                           item.name);
    }
    for (std::size_t t = warmup; t < pred.size(); ++t) {
      if (std::abs(pred[t] - item.tvsq.values[t]) > 2.0 * item.tvsq.ci[t]) {
        ++misses;
      }
    }
    all_pred.insert(all_pred.end(), p.begin(), p.end());
    all_meas.insert(all_meas.end(), q.begin(), q.end());
    m.mean_outage += tm.outage;
    pearsons.push_back(tm.pearson);
    spearmans.push_back(tm.spearman);
    m.per_trace.push_back(std::move(tm));
  }
  m.samples = all_pred.size();
  m.outage = static_cast<double>(misses) / static_cast<double>(m.samples);
  m.pearson = pearson(all_pred, all_meas);
  m.spearman = spearman(all_pred, all_meas);
  if (!m.pearson || !m.spearman) {
    m.warnings.push_back("pooled correlation undefined for constant series");
  }
  m.mean_outage /= static_cast<double>(data.size());
  m.mean_pearson = detail::mean_defined(pearsons);
  m.mean_spearman = detail::mean_defined(spearmans);
  return m;
}

/// Model predictions for every trace. kPinned pins the warm-up latents to the
/// measured quality; the other kinds need no measurements.
inline std::vector<Series> predict_dataset(const HWParams& params,
                                           const TrainingDataset& data,
                                           InitKind init) {
  std::vector<Series> out;
  for (const auto& item : data.items) {
    InitPolicy policy;
    switch (init) {
      case InitKind::kPinned:
        policy = pinned_init(item.tvsq.values, params.gamma, params.order);
        break;
      case InitKind::kZeroState:
        policy = InitPolicy::zero_state();
        break;
      case InitKind::kHoldFirstInput:
        policy = InitPolicy::hold_first_input();
        break;
    }
    out.push_back(simulate(item.stsq, params, policy).values);
  }
  return out;
}

inline EvalMetrics evaluate_model(const HWParams& params,
                                  const TrainingDataset& data,
                                  InitKind init = InitKind::kPinned) {
  return evaluate_predictions(predict_dataset(params, data, init), data,
                              params.order);
}

/// Pooling baseline scored on the same post-warm-up samples as the model.
inline EvalMetrics evaluate_pooling(const TrainingDataset& data, Pooling kind,
                                    std::size_t warmup,
                                    std::size_t width = kPoolingWindow) {
  std::vector<Series> preds;
  for (const auto& item : data.items) {
    preds.push_back(pooled_prediction(item.stsq, width, kind));
  }
  return evaluate_predictions(preds, data, warmup);
}

struct Fold {
  std::string group;
  HWParams params;
  EvalMetrics metrics;  ///< on the held-out group
};

struct CrossValidation {
  std::vector<Fold> folds;
  double mean_outage = 0.0;
  std::optional<double> mean_pearson;
  std::optional<double> mean_spearman;
};

/// Leave-one-group-out: for each distinct group, train on the others and
/// score the held-out traces. Groups are visited in sorted order.
inline CrossValidation cross_validate_by_group(
    const TrainingDataset& data, std::size_t r, const TrainConfig& config,
    InitKind init = InitKind::kPinned) {
  validate(data);
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t n = 0; n < data.size(); ++n) {
    groups[data.items[n].group].push_back(n);
  }
  if (groups.size() < 2) {
    throw ContractError("cross-validation needs at least two groups");
  }
  CrossValidation cv;
  std::vector<std::optional<double>> pearsons;
  std::vector<std::optional<double>> spearmans;
  for (const auto& [group, members] : groups) {
    TrainingDataset train_set;
    TrainingDataset test_set;
    for (std::size_t n = 0; n < data.size(); ++n) {
      (data.items[n].group == group ? test_set : train_set)
          .items.push_back(data.items[n]);
    }
    Fold fold;
    fold.group = group;
    fold.params = train(train_set, r, config).theta_star;
    fold.metrics = evaluate_model(fold.params, test_set, init);
    cv.mean_outage += fold.metrics.outage;
    pearsons.push_back(fold.metrics.pearson);
    spearmans.push_back(fold.metrics.spearman);
    cv.folds.push_back(std::move(fold));
  }
  cv.mean_outage /= static_cast<double>(cv.folds.size());
  cv.mean_pearson = detail::mean_defined(pearsons);
  cv.mean_spearman = detail::mean_defined(spearmans);
  return cv;
}

}  // namespace tvsq
