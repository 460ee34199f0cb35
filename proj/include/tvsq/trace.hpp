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

#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "tvsq/error.hpp"
#include "tvsq/model.hpp"

namespace tvsq {

/// Measured quality with per-second 95% confidence half-widths.
struct TvsqTrace {
  Series values;
  Series ci;
  bool operator==(const TvsqTrace&) const = default;
};

/// One video: model input, measured output and bookkeeping labels. `group`
/// identifies the source content for leave-one-group-out evaluation.
struct TraceRecord {
  std::string name;
  std::string group;
  Series stsq;
  TvsqTrace tvsq;
  bool operator==(const TraceRecord&) const = default;
};

struct TrainingDataset {
  std::vector<TraceRecord> items;

  std::size_t size() const { return items.size(); }
  /// Common trace length T (0 when empty).
  std::size_t length() const {
    return items.empty() ? 0 : items.front().stsq.size();
  }
  bool operator==(const TrainingDataset&) const = default;
};

inline void validate(const TvsqTrace& trace) {
  if (trace.values.size() != trace.ci.size()) {
    throw ContractError("TVSQ values and confidence widths differ in length");
  }
  for (std::size_t t = 0; t < trace.values.size(); ++t) {
    if (!std::isfinite(trace.values[t])) {
      throw ContractError("TVSQ value at t=" + std::to_string(t + 1) +
                          " is not finite");
    }
    if (!(trace.ci[t] > 0.0) || !std::isfinite(trace.ci[t])) {
      throw ContractError("confidence width at t=" + std::to_string(t + 1) +
                          " must be positive and finite");
    }
  }
}

inline void validate(const TrainingDataset& data) {
  if (data.items.empty()) throw ContractError("dataset has no traces");
  const std::size_t T = data.length();
  if (T == 0) throw ContractError("dataset traces are empty");
  for (std::size_t n = 0; n < data.items.size(); ++n) {
    const auto& item = data.items[n];
    if (item.stsq.size() != T || item.tvsq.values.size() != T) {
      throw ContractError("trace " + std::to_string(n) +
                          " does not have the common length " +
                          std::to_string(T));
    }
    for (double q : item.stsq) {
      if (!std::isfinite(q)) {
        throw ContractError("trace " + std::to_string(n) +
                            " has a non-finite STSQ value");
      }
    }
    validate(item.tvsq);
  }
}

}  // namespace tvsq
