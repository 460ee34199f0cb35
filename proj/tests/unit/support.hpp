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

#include <complex>
#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include <unistd.h>

#include "tvsq/tvsq.hpp"

namespace tvsq::testing {

/// Coefficients f of prod_k (1 - z_k x) read as x^r - sum f_d x^(r-d).
inline Series feedback_from_roots(const std::vector<std::complex<double>>& z) {
  std::vector<std::complex<double>> c{1.0};
  for (const auto& root : z) {
    std::vector<std::complex<double>> next(c.size() + 1, 0.0);
    for (std::size_t i = 0; i < c.size(); ++i) {
      next[i] += c[i];
      next[i + 1] -= root * c[i];
    }
    c = std::move(next);
  }
  Series f;
  for (std::size_t d = 1; d < c.size(); ++d) f.push_back(-c[d].real());
  return f;
}

/// Random roots inside |z| <= rho_max; complex roots come in conjugate pairs.
inline Series random_stable_feedback(SplitMix64& rng, std::size_t r,
                                     double rho_max) {
  std::vector<std::complex<double>> roots;
  while (roots.size() < r) {
    const double mod = rho_max * rng.uniform();
    if (r - roots.size() >= 2 && rng.uniform() < 0.5) {
      const double arg = 3.141592653589793 * rng.uniform();
      roots.push_back(std::polar(mod, arg));
      roots.push_back(std::polar(mod, -arg));
    } else {
      roots.emplace_back(rng.uniform() < 0.5 ? mod : -mod, 0.0);
    }
  }
  return feedback_from_roots(roots);
}

/// Stable model with unit DC gain and nonlinearities near the identity.
inline HWParams random_stable_params(SplitMix64& rng, std::size_t r,
                                     double rho_max = 0.9) {
  HWParams p = initial_params(r);
  p.f = random_stable_feedback(rng, r, rho_max);
  for (double& b : p.b) b = 0.1 + rng.uniform();
  const double g = dc_gain(p.b, p.f);
  for (double& b : p.b) b /= g;
  auto jitter = [&](Logistic& l) {
    l.slope *= 0.8 + 0.4 * rng.uniform();
    l.bias += 0.4 * (rng.uniform() - 0.5);
    l.offset += 4.0 * (rng.uniform() - 0.5);
    l.gain *= 0.9 + 0.2 * rng.uniform();
  };
  jitter(p.beta);
  jitter(p.gamma);
  return p;
}

inline TrainingDataset synthetic_dataset(const HWParams& generator,
                                         std::size_t n, std::size_t T,
                                         std::uint64_t seed,
                                         double noise = 1.0) {
  GroundTruthSpec spec;
  spec.generator = generator;
  spec.noise_std = noise;
  spec.ci_value = 2.0;
  spec.n_traces = n;
  spec.target.length = T;
  spec.target.seed = seed;
  return generate_ground_truth(spec).data;
}

inline Series random_series(SplitMix64& rng, std::size_t n, double lo = 0.0,
                            double hi = 100.0) {
  Series s(n);
  for (double& x : s) x = lo + (hi - lo) * rng.uniform();
  return s;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("tvsq_" + tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const {
    return path_ / name;
  }

 private:
  std::filesystem::path path_;
};

inline std::filesystem::path fixture(const std::string& name) {
  return std::filesystem::path(TVSQ_FIXTURE_DIR) / name;
}

}  // namespace tvsq::testing
