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
 * Model order selection: Lipschitz-quotient screening and a description
 * length criterion over trained candidates.
 */

#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tvsq/error.hpp"
#include "tvsq/ident.hpp"
#include "tvsq/trace.hpp"

namespace tvsq {

/// phi_r[t] = (q_st[t-r..t], q_tv[t-r..t-1]), length 2r+1. `t` is a 0-based
/// index with r <= t < T.
inline Series regressor(std::span<const double> stsq,
                        std::span<const double> tvsq, std::size_t r,
                        std::size_t t) {
  if (stsq.size() != tvsq.size()) {
    throw ContractError("STSQ and TVSQ lengths differ");
  }
  if (t < r || t >= stsq.size()) {
    throw ContractError("regressor index " + std::to_string(t) +
                        " out of range for order " + std::to_string(r));
  }
  Series phi;
  phi.reserve(2 * r + 1);
  phi.insert(phi.end(), stsq.begin() + (t - r), stsq.begin() + t + 1);
  phi.insert(phi.end(), tvsq.begin() + (t - r), tvsq.begin() + t);
  return phi;
}

/// max over pairs r <= t1 < t2 < T of |q_tv[t1] - q_tv[t2]| / |phi[t1] -
/// phi[t2]|_2. Pairs with equal regressors and equal outputs are skipped;
/// equal regressors with different outputs give +infinity.
inline double lipschitz_quotient(std::span<const double> stsq,
                                 std::span<const double> tvsq, std::size_t r) {
  if (stsq.size() != tvsq.size()) {
    throw ContractError("STSQ and TVSQ lengths differ");
  }
  const std::size_t T = stsq.size();
  if (T < r + 2) {
    throw ContractError("trace too short for a Lipschitz quotient of order " +
                        std::to_string(r));
  }
  double best = 0.0;
  for (std::size_t t1 = r; t1 < T; ++t1) {
    for (std::size_t t2 = t1 + 1; t2 < T; ++t2) {
      const double num = std::abs(tvsq[t1] - tvsq[t2]);
      double den2 = 0.0;
      for (std::size_t k = 0; k <= r; ++k) {
        const double d = stsq[t1 - k] - stsq[t2 - k];
        den2 += d * d;
      }
      for (std::size_t k = 1; k <= r; ++k) {
        const double d = tvsq[t1 - k] - tvsq[t2 - k];
        den2 += d * d;
      }
      if (den2 == 0.0) {
        if (num == 0.0) continue;
        return std::numeric_limits<double>::infinity();
      }
      best = std::max(best, num / std::sqrt(den2));
    }
  }
  return best;
}

/// Largest per-trace quotient over a dataset (pairs never span two traces).
inline double lipschitz_quotient(const TrainingDataset& data, std::size_t r) {
  double best = 0.0;
  for (const auto& item : data.items) {
    best = std::max(best, lipschitz_quotient(item.stsq, item.tvsq.values, r));
  }
  return best;
}

/// L(r) = outage * (1 + (2r+1) ln(M) / M) with M = N (T - r).
inline double description_length(double outage, std::size_t r,
                                 std::size_t n_traces, std::size_t trace_len) {
  if (!(outage >= 0.0 && outage <= 1.0)) {
    throw ContractError("outage rate must lie in [0, 1]");
  }
  if (trace_len <= r) {
    throw ContractError("trace length must exceed the model order");
  }
  const double m = static_cast<double>(n_traces) *
                   static_cast<double>(trace_len - r);
  if (!(m > 1.0)) throw ContractError("effective sample count must exceed 1");
  return outage *
         (1.0 + static_cast<double>(2 * r + 1) * std::log(m) / m);
}

struct OrderCandidate {
  std::size_t order = 0;
  double lipschitz = 0.0;
  std::optional<double> outage;              ///< E(theta*_r), if trained
  std::optional<double> description_length;  ///< L(r), if trained
  std::optional<TrainReport> report;
};

struct OrderScan {
  std::vector<OrderCandidate> candidates;
  std::size_t selected = 0;  ///< 0 when nothing was trained
};

/// Lipschitz screen over every candidate, then (if `train_candidates`) trains
/// each order and selects argmin L(r), ties toward the smaller order.
inline OrderScan select_order(const TrainingDataset& data,
                              const std::vector<std::size_t>& orders,
                              const TrainConfig& config,
                              bool train_candidates = true) {
  validate(data);
  if (orders.empty()) throw ContractError("order range is empty");
  const std::size_t T = data.length();
  for (auto r : orders) {
    if (r < 1 || r + 2 > T) {
      throw ContractError("order " + std::to_string(r) +
                          " is invalid for traces of length " +
                          std::to_string(T));
    }
  }
  OrderScan scan;
  for (auto r : orders) {
    OrderCandidate c;
    c.order = r;
    c.lipschitz = lipschitz_quotient(data, r);
    if (train_candidates) {
      c.report = train(data, r, config);
      c.outage = c.report->final_outage;
      c.description_length =
          description_length(*c.outage, r, data.size(), T);
    }
    scan.candidates.push_back(std::move(c));
  }
  if (train_candidates) {
    const OrderCandidate* best = nullptr;
    for (const auto& c : scan.candidates) {
      if (best == nullptr ||
          *c.description_length < *best->description_length ||
          (*c.description_length == *best->description_length &&
           c.order < best->order)) {
        best = &c;
      }
    }
    scan.selected = best->order;
  }
  return scan;
}

}  // namespace tvsq
