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
 * Subjective-score preprocessing and per-chunk quality mapping.
 *
 * Continuous scores c[i][j][t] (subject i, video j, second t) are offset by the
 * hidden reference, converted to per-subject Z-scores, screened for outliers
 * with a 2-sigma rule per (video, second), re-normalized without the outliers
 * and averaged into a TVSQ trace with a 95% confidence half-width.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "tvsq/error.hpp"
#include "tvsq/model.hpp"
#include "tvsq/trace.hpp"

namespace tvsq {

/// DMOS predicted from an RRED index (natural logarithm).
inline double dmos_from_rred(double rred) {
  if (!(rred >= 0.0)) throw ContractError("RRED index must be non-negative");
  return 16.4769 + 9.7111 * std::log(1.0 + rred / 0.6444);
}

inline double rdmos_from_dmos(double dmos) { return 100.0 - dmos; }

/// Dense (subject, video, second) array, row-major.
class ScoreCube {
 public:
  ScoreCube() = default;
  ScoreCube(std::size_t subjects, std::size_t videos, std::size_t seconds,
            double fill = 0.0)
      : subjects_(subjects),
        videos_(videos),
        seconds_(seconds),
        data_(subjects * videos * seconds, fill) {}

  std::size_t subjects() const { return subjects_; }
  std::size_t videos() const { return videos_; }
  std::size_t seconds() const { return seconds_; }

  double& operator()(std::size_t i, std::size_t j, std::size_t t) {
    return data_[(i * videos_ + j) * seconds_ + t];
  }
  double operator()(std::size_t i, std::size_t j, std::size_t t) const {
    return data_[(i * videos_ + j) * seconds_ + t];
  }
  std::span<const double> flat() const { return data_; }
  bool operator==(const ScoreCube&) const = default;

 private:
  std::size_t subjects_ = 0;
  std::size_t videos_ = 0;
  std::size_t seconds_ = 0;
  std::vector<double> data_;
};

/// One session: scores for J test videos plus each subject's scores for the
/// hidden reference (reference(i, 0, t)).
struct SubjectScorePanel {
  std::string session;
  ScoreCube scores;
  ScoreCube reference;  ///< I x 1 x T
};

inline void validate(const SubjectScorePanel& p) {
  const auto& s = p.scores;
  if (s.subjects() < 2) throw ContractError("panel needs at least 2 subjects");
  if (s.videos() < 1 || s.seconds() < 1) {
    throw ContractError("panel has no videos or no seconds");
  }
  if (p.reference.subjects() != s.subjects() || p.reference.videos() != 1 ||
      p.reference.seconds() != s.seconds()) {
    throw ContractError("reference scores do not match the panel shape");
  }
  for (const ScoreCube* c : {&p.scores, &p.reference}) {
    for (double x : c->flat()) {
      if (!(x >= 0.0 && x <= 100.0)) {
        throw ContractError("scores must lie in [0, 100]");
      }
    }
  }
}

/// c_offset = 100 - (c_ref - c).
inline ScoreCube offset_scores(const SubjectScorePanel& panel) {
  validate(panel);
  const auto& s = panel.scores;
  ScoreCube out(s.subjects(), s.videos(), s.seconds());
  for (std::size_t i = 0; i < s.subjects(); ++i) {
    for (std::size_t j = 0; j < s.videos(); ++j) {
      for (std::size_t t = 0; t < s.seconds(); ++t) {
        out(i, j, t) = 100.0 - (panel.reference(i, 0, t) - s(i, j, t));
      }
    }
  }
  return out;
}

/// Normalized scores and the per-subject mean / std that produced them.
struct ZScores {
  ScoreCube z;
  Series subject_mean;
  Series subject_std;
};

namespace detail {

// Statistics skip samples flagged in `outlier`; every sample is normalized.
inline ZScores zscore_with_mask(const ScoreCube& offset,
                                const std::vector<bool>* outlier) {
  const std::size_t I = offset.subjects();
  const std::size_t J = offset.videos();
  const std::size_t T = offset.seconds();
  ZScores out;
  out.z = ScoreCube(I, J, T);
  out.subject_mean.resize(I);
  out.subject_std.resize(I);
  for (std::size_t i = 0; i < I; ++i) {
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t j = 0; j < J; ++j) {
      for (std::size_t t = 0; t < T; ++t) {
        if (outlier && (*outlier)[(i * J + j) * T + t]) continue;
        sum += offset(i, j, t);
        ++n;
      }
    }
    if (n < 2) {
      throw DataError("subject " + std::to_string(i + 1) +
                      " has fewer than two usable scores");
    }
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t j = 0; j < J; ++j) {
      for (std::size_t t = 0; t < T; ++t) {
        if (outlier && (*outlier)[(i * J + j) * T + t]) continue;
        const double d = offset(i, j, t) - mean;
        ss += d * d;
      }
    }
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    if (!(sd > 0.0)) {
      throw DataError("subject " + std::to_string(i + 1) +
                      " has zero score variance");
    }
    out.subject_mean[i] = mean;
    out.subject_std[i] = sd;
    for (std::size_t j = 0; j < J; ++j) {
      for (std::size_t t = 0; t < T; ++t) {
        out.z(i, j, t) = (offset(i, j, t) - mean) / sd;
      }
    }
  }
  return out;
}

}  // namespace detail

/// z = (c_offset - m_i) / sigma_i with m_i, sigma_i (unbiased) over all
/// videos and seconds of subject i. Throws DataError naming a constant
/// subject.
inline ZScores zscore_normalize(const ScoreCube& offset) {
  return detail::zscore_with_mask(offset, nullptr);
}

/// Per (video, second): subject mean mu, unbiased std eta and the outlier flags
/// z > mu + 2 eta or z < mu - 2 eta.
struct OutlierSets {
  std::size_t subjects = 0;
  std::size_t videos = 0;
  std::size_t seconds = 0;
  std::vector<double> mu;    ///< J x T
  std::vector<double> eta;   ///< J x T
  std::vector<bool> flagged; ///< I x J x T

  bool is_outlier(std::size_t i, std::size_t j, std::size_t t) const {
    return flagged[(i * videos + j) * seconds + t];
  }
  std::size_t count(std::size_t j, std::size_t t) const {
    std::size_t n = 0;
    for (std::size_t i = 0; i < subjects; ++i) n += is_outlier(i, j, t);
    return n;
  }
};

inline OutlierSets detect_outliers(const ScoreCube& z) {
  const std::size_t I = z.subjects();
  const std::size_t J = z.videos();
  const std::size_t T = z.seconds();
  if (I < 2) throw ContractError("outlier screening needs >= 2 subjects");
  OutlierSets o{I, J, T, std::vector<double>(J * T),
                std::vector<double>(J * T),
                std::vector<bool>(I * J * T, false)};
  for (std::size_t j = 0; j < J; ++j) {
    for (std::size_t t = 0; t < T; ++t) {
      double sum = 0.0;
      for (std::size_t i = 0; i < I; ++i) sum += z(i, j, t);
      const double mu = sum / static_cast<double>(I);
      double ss = 0.0;
      for (std::size_t i = 0; i < I; ++i) {
        ss += (z(i, j, t) - mu) * (z(i, j, t) - mu);
      }
      const double eta = std::sqrt(ss / static_cast<double>(I - 1));
      o.mu[j * T + t] = mu;
      o.eta[j * T + t] = eta;
      for (std::size_t i = 0; i < I; ++i) {
        const double x = z(i, j, t);
        o.flagged[(i * J + j) * T + t] = x > mu + 2.0 * eta || x < mu - 2.0 * eta;
      }
    }
  }
  return o;
}

/// Map of an averaged Z-score in [-4, 4] onto [0, 100].
inline double tvsq_from_mean_z(double z_bar) {
  return (z_bar + 4.0) / 8.0 * 100.0;
}

/// 95% confidence half-width in RDMOS for `retained` subjects with Z-score
/// spread eta: only the slope of the [-4, 4] -> [0, 100] map applies.
inline double ci_half_width(double eta, std::size_t retained) {
  if (retained < 1) throw ContractError("no retained subjects");
  return 1.96 * eta / std::sqrt(static_cast<double>(retained)) / 8.0 * 100.0;
}

struct Aggregation {
  std::vector<TvsqTrace> traces;  ///< one per video
  OutlierSets outliers;           ///< flags from the first pass
  ZScores rescored;               ///< Z-scores recomputed without outliers
  std::size_t clamped = 0;        ///< samples whose mean Z left [-4, 4]
};

/// offset -> zscore -> outliers -> zscore over retained samples -> mean and
/// spread over retained subjects -> (q_tv, eps) per video and second.
inline Aggregation aggregate_tvsq(const SubjectScorePanel& panel) {
  const ScoreCube offset = offset_scores(panel);
  const ZScores first = zscore_normalize(offset);

  Aggregation agg;
  agg.outliers = detect_outliers(first.z);
  agg.rescored = detail::zscore_with_mask(offset, &agg.outliers.flagged);

  const std::size_t I = offset.subjects();
  const std::size_t J = offset.videos();
  const std::size_t T = offset.seconds();
  const ScoreCube& z = agg.rescored.z;
  for (std::size_t j = 0; j < J; ++j) {
    TvsqTrace trace;
    trace.values.resize(T);
    trace.ci.resize(T);
    for (std::size_t t = 0; t < T; ++t) {
      double sum = 0.0;
      std::size_t n = 0;
      for (std::size_t i = 0; i < I; ++i) {
        if (agg.outliers.is_outlier(i, j, t)) continue;
        sum += z(i, j, t);
        ++n;
      }
      if (n < 2) {
        throw DataError("video " + std::to_string(j + 1) + " second " +
                        std::to_string(t + 1) +
                        ": fewer than two non-outlier subjects");
      }
      const double z_bar = sum / static_cast<double>(n);
      double ss = 0.0;
      for (std::size_t i = 0; i < I; ++i) {
        if (agg.outliers.is_outlier(i, j, t)) continue;
        ss += (z(i, j, t) - z_bar) * (z(i, j, t) - z_bar);
      }
      const double eta = std::sqrt(ss / static_cast<double>(n - 1));
      if (z_bar < -4.0 || z_bar > 4.0) ++agg.clamped;
      trace.values[t] = tvsq_from_mean_z(std::clamp(z_bar, -4.0, 4.0));
      trace.ci[t] = ci_half_width(eta, n);
    }
    agg.traces.push_back(std::move(trace));
  }
  return agg;
}

/// Per-second quality of each encoded version: levels[l][t].
struct QualityLevelBank {
  std::vector<Series> levels;
};

struct Quantized {
  std::vector<std::size_t> indices;  ///< chosen version per second
  Series achieved;
};

/// Version closest to the target each second; ties go to the lower index.
inline Quantized quantize_to_levels(std::span<const double> target,
                                    const QualityLevelBank& bank) {
  if (bank.levels.empty()) throw ContractError("level bank is empty");
  for (const auto& l : bank.levels) {
    if (l.size() != target.size()) {
      throw ContractError("level bank length differs from the target");
    }
  }
  Quantized q;
  q.indices.resize(target.size());
  q.achieved.resize(target.size());
  for (std::size_t t = 0; t < target.size(); ++t) {
    std::size_t best = 0;
    double best_err = std::abs(target[t] - bank.levels[0][t]);
    for (std::size_t l = 1; l < bank.levels.size(); ++l) {
      const double err = std::abs(target[t] - bank.levels[l][t]);
      if (err < best_err) {
        best = l;
        best_err = err;
      }
    }
    q.indices[t] = best;
    q.achieved[t] = bank.levels[best][t];
  }
  return q;
}

}  // namespace tvsq
