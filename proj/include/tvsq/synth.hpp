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
 * Synthetic piecewise-constant quality targets and ground-truth datasets
 * generated by a known model.
 *
 * A target is a run of constant segments. Segment lengths are uniform over a
 * duration set ({4..10} s by default); segment levels are N(50, 10^2)
 * truncated to [30, 70] by rejection. The last segment is clipped so the
 * trace has exactly `length` seconds.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "tvsq/error.hpp"
#include "tvsq/model.hpp"
#include "tvsq/rng.hpp"
#include "tvsq/trace.hpp"

namespace tvsq {

struct TargetSpec {
  std::vector<std::size_t> durations{4, 5, 6, 7, 8, 9, 10};
  double quality_mean = 50.0;
  double quality_std = 10.0;
  double quality_min = 30.0;
  double quality_max = 70.0;
  std::size_t length = 300;
  std::uint64_t seed = 1;
  bool operator==(const TargetSpec&) const = default;
};

inline void validate(const TargetSpec& s) {
  if (s.durations.empty()) throw ContractError("duration set is empty");
  for (auto d : s.durations) {
    if (d < 1) throw ContractError("segment durations must be >= 1");
  }
  if (!(s.quality_min >= 0.0 && s.quality_max <= 100.0 &&
        s.quality_min < s.quality_max)) {
    throw ContractError("quality bounds must be an interval inside [0, 100]");
  }
  if (!(s.quality_mean >= s.quality_min && s.quality_mean <= s.quality_max)) {
    throw ContractError("quality mean must lie within the bounds");
  }
  if (!(s.quality_std > 0.0)) throw ContractError("quality std must be > 0");
  if (s.length < 1) throw ContractError("target length must be >= 1");
}

/// Segment lengths summing to exactly spec.length.
inline std::vector<std::size_t> sample_durations(const TargetSpec& spec,
                                                 SplitMix64& rng) {
  validate(spec);
  std::vector<std::size_t> out;
  std::size_t total = 0;
  while (total < spec.length) {
    std::size_t d = spec.durations[rng.below(spec.durations.size())];
    d = std::min(d, spec.length - total);
    out.push_back(d);
    total += d;
  }
  return out;
}

/// One truncated-normal level, by rejection.
inline double sample_quality(const TargetSpec& spec, SplitMix64& rng) {
  for (;;) {
    const double q = spec.quality_mean + spec.quality_std * rng.normal();
    if (q >= spec.quality_min && q <= spec.quality_max) return q;
  }
}

inline Series sample_qualities(const TargetSpec& spec, SplitMix64& rng,
                               std::size_t count) {
  validate(spec);
  Series out(count);
  for (auto& q : out) q = sample_quality(spec, rng);
  return out;
}

/// Step trace: durations[i] copies of qualities[i], clipped to `length`.
inline Series build_target(const std::vector<std::size_t>& durations,
                           const Series& qualities, std::size_t length) {
  if (durations.size() != qualities.size()) {
    throw ContractError("need one quality per segment");
  }
  Series out;
  out.reserve(length);
  for (std::size_t i = 0; i < durations.size() && out.size() < length; ++i) {
    const std::size_t n = std::min(durations[i], length - out.size());
    out.insert(out.end(), n, qualities[i]);
  }
  if (out.size() != length) {
    throw ContractError("segments do not cover the requested length");
  }
  return out;
}

/// Durations are drawn first, then one level per segment.
inline Series build_target(const TargetSpec& spec, SplitMix64& rng) {
  const auto durations = sample_durations(spec, rng);
  const auto qualities = sample_qualities(spec, rng, durations.size());
  return build_target(durations, qualities, spec.length);
}

struct GroundTruthSpec {
  HWParams generator;
  double noise_std = 1.0;
  double ci_value = 2.0;
  std::size_t n_traces = 6;
  TargetSpec target;
};

inline void validate(const GroundTruthSpec& s) {
  validate(s.generator);
  validate(s.target);
  const double rho = spectral_radius(s.generator.f);
  if (!(rho < 1.0)) throw StabilityError("generator is unstable", rho);
  if (!(s.noise_std >= 0.0)) throw ContractError("noise_std must be >= 0");
  if (!(s.ci_value > 0.0)) throw ContractError("ci_value must be > 0");
  if (s.n_traces < 1) throw ContractError("n_traces must be >= 1");
  if (s.target.length <= s.generator.order) {
    throw ContractError("target length must exceed the generator order");
  }
}

struct GroundTruth {
  TrainingDataset data;  ///< noisy "measured" quality
  std::vector<Series> clean;  ///< generator output before noise
  HWParams truth;
};

/// Seconds of extra input simulated and dropped in front of each trace so the
/// zero-state transient has decayed by e^-30.
inline std::size_t burn_in_length(const HWParams& generator) {
  const double rho = spectral_radius(generator.f);
  std::size_t extra = 0;
  if (rho > 0.0) {
    extra = static_cast<std::size_t>(
        std::ceil(std::min(30.0 / -std::log(rho), 5000.0)));
  }
  return generator.order + extra;
}

/// Trace n uses its own stream seeded with substream_seed(target.seed, n):
/// target of length burn_in + T, zero-state simulation, drop the burn-in, then
/// one normal draw per second of noise.
inline GroundTruth generate_ground_truth(const GroundTruthSpec& spec) {
  validate(spec);
  const std::size_t T = spec.target.length;
  const std::size_t burn = burn_in_length(spec.generator);
  TargetSpec extended = spec.target;
  extended.length = T + burn;

  GroundTruth out;
  out.truth = spec.generator;
  for (std::size_t n = 0; n < spec.n_traces; ++n) {
    SplitMix64 rng(substream_seed(spec.target.seed, n));
    const Series full = build_target(extended, rng);
    const PredictedTrace pred =
        simulate(full, spec.generator, InitPolicy::zero_state());

    TraceRecord item;
    item.name = "trace_" + std::to_string(n);
    item.group = item.name;
    item.stsq.assign(full.begin() + burn, full.end());
    Series clean(pred.values.begin() + burn, pred.values.end());
    item.tvsq.values = clean;
    for (double& q : item.tvsq.values) q += spec.noise_std * rng.normal();
    item.tvsq.ci.assign(T, spec.ci_value);
    out.data.items.push_back(std::move(item));
    out.clean.push_back(std::move(clean));
  }
  return out;
}

}  // namespace tvsq
