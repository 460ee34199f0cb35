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

#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"
#include "tvsq/analysis.hpp"

namespace tvsq {
namespace {

TEST(SpectralRadius, HandSolvedCases) {
  EXPECT_DOUBLE_EQ(spectral_radius(Series{0.5}), 0.5);
  EXPECT_NEAR(spectral_radius(Series{0.0, 0.25}), 0.5, 1e-12);  // z^2 = 1/4
  EXPECT_DOUBLE_EQ(spectral_radius(Series{1.0}), 1.0);
  EXPECT_EQ(spectral_radius(Series{0.0, 0.0, 0.0}), 0.0);
  EXPECT_EQ(spectral_radius(Series{}), 0.0);
  // z^2 - z + 0.5: roots 0.5 +- 0.5i
  EXPECT_NEAR(spectral_radius(Series{1.0, -0.5}), std::sqrt(0.5), 1e-12);
}

TEST(SpectralRadius, RecoversConstructedRoots) {
  SplitMix64 rng(41);
  for (int k = 0; k < 200; ++k) {
    const std::size_t r = 1 + rng.below(12);
    std::vector<std::complex<double>> roots;
    double rho = 0.0;
    while (roots.size() < r) {
      const double m = 0.05 + 0.9 * rng.uniform();
      if (r - roots.size() >= 2 && rng.uniform() < 0.5) {
        const double a = 0.1 + 3.0 * rng.uniform();
        roots.push_back(std::polar(m, a));
        roots.push_back(std::polar(m, -a));
      } else {
        roots.emplace_back(rng.uniform() < 0.5 ? m : -m, 0.0);
      }
      rho = std::max(rho, m);
    }
    EXPECT_NEAR(spectral_radius(testing::feedback_from_roots(roots)), rho, 1e-8);
  }
}

TEST(MemoryConstant, DefinitionAndAnchor) {
  EXPECT_NEAR(memory_constant_from_radius(std::exp(-3.0 / 15.0)), 15.0, 1e-12);
  const double rho = std::exp(-3.0 / 15.1895);
  EXPECT_NEAR(rho, 0.8208, 1e-4);
  // Second-order feedback with a double root at rho.
  const Series f{2.0 * rho, -rho * rho};
  EXPECT_NEAR(memory_constant(f), 15.1895, 1e-3);
  EXPECT_EQ(memory_constant(Series{0.0, 0.0}), 0.0);
  EXPECT_THROW(memory_constant(Series{1.0}), StabilityError);
  EXPECT_NEAR(std::pow(rho, memory_constant_from_radius(rho)), std::exp(-3.0),
              1e-12);
}

TEST(Impulse, FeedForwardIsB) {
  const Series b{0.2, -0.4, 0.7};
  const Series f{0.0, 0.0};
  EXPECT_EQ(impulse_response(b, f), b);
}

TEST(Impulse, GeometricSeries) {
  const Series b{1.0, 0.0};
  const Series f{0.5};
  const Series h = impulse_response(b, f);
  for (std::size_t d = 0; d < h.size(); ++d) {
    EXPECT_DOUBLE_EQ(h[d], std::ldexp(1.0, -static_cast<int>(d)));
  }
  EXPECT_NEAR(l1_norm(h), 2.0, 1e-9);
  EXPECT_EQ(peak_lag(h), 0u);
}

TEST(Impulse, TruncationAndEnvelope) {
  SplitMix64 rng(43);
  for (int k = 0; k < 50; ++k) {
    const std::size_t r = 1 + rng.below(6);
    const HWParams p = testing::random_stable_params(rng, r, 0.9);
    const Series h = impulse_response(p.b, p.f, 1e-9);
    // Long reference response from the recursion itself.
    Series ref(h.size() + 4000, 0.0);
    for (std::size_t d = 0; d < ref.size(); ++d) {
      double acc = d <= r ? p.b[d] : 0.0;
      for (std::size_t i = 1; i <= r && i <= d; ++i) acc += p.f[i - 1] * ref[d - i];
      ref[d] = acc;
    }
    for (std::size_t d = 0; d < h.size(); ++d) EXPECT_NEAR(h[d], ref[d], 1e-12);
    EXPECT_LT(l1_norm(ref) - l1_norm(h), 1e-9);
    // |h[d]| <= C rho'^d with rho' slightly above rho (repeated roots).
    const double rho = spectral_radius(p.f);
    const double base = std::min(0.999, rho + 0.05);
    double c = 0.0;
    for (std::size_t d = 0; d < 40 && d < ref.size(); ++d) {
      c = std::max(c, std::abs(ref[d]) / std::pow(base, double(d)));
    }
    for (std::size_t d = 0; d < ref.size(); ++d) {
      EXPECT_LE(std::abs(ref[d]), 10.0 * c * std::pow(base, double(d)) + 1e-300);
    }
  }
  EXPECT_THROW(impulse_response(Series{1.0, 0.0}, Series{1.0}), StabilityError);
}

TEST(Bibo, ConstantInputCollapses) {
  HWParams p = initial_params(2);
  p.f = {0.3, 0.2};
  p.beta = Logistic{0.05, 0.0, 7.0, 0.0};
  const auto bounds = bibo_range(p);
  const double v = 7.0 * dc_gain(p.b, p.f);
  EXPECT_NEAR(bounds.latent_output.lo, v, 1e-8);
  EXPECT_NEAR(bounds.latent_output.hi, v, 1e-8);
}

TEST(Bibo, GeometricFilterUnitInput) {
  HWParams p = initial_params(1);
  p.b = {1.0, 0.0};
  p.f = {0.5};
  // beta maps [0, 100] onto [0, 1] exactly at the ends of its range.
  p.beta = Logistic{1e3, -5e4, 0.0, 1.0};
  const auto bounds = bibo_range(p, {-1e3, 1e3});
  EXPECT_NEAR(bounds.latent_output.lo, 0.0, 1e-8);
  EXPECT_NEAR(bounds.latent_output.hi, 2.0, 1e-8);
}

TEST(Bibo, SignSplitWithinCoarseAndOutputRange) {
  SplitMix64 rng(47);
  for (int k = 0; k < 100; ++k) {
    HWParams p = testing::random_stable_params(rng, 1 + rng.below(5), 0.95);
    p.gamma = Logistic{0.05 * rng.normal(), rng.normal(),
                       40.0 * rng.uniform(), 60.0 * rng.uniform()};
    const auto s = stability_report(p);
    EXPECT_GE(s.bounds.output.lo, 0.0);
    EXPECT_LE(s.bounds.output.hi, 100.0);
    EXPECT_GE(s.bounds.latent_output.lo, -s.bounds.coarse_latent - 1e-9);
    EXPECT_LE(s.bounds.latent_output.hi, s.bounds.coarse_latent + 1e-9);
    // Same sums in a different order: allow rounding at shared endpoints.
    EXPECT_LE(s.bounds.coarse_output.lo, s.bounds.output.lo + 1e-9)
        << s.bounds.coarse_output.lo - s.bounds.output.lo;
    EXPECT_GE(s.bounds.coarse_output.hi, s.bounds.output.hi - 1e-9)
        << s.bounds.coarse_output.hi - s.bounds.output.hi;
  }
}

TEST(Bibo, SimulatedOutputStaysInside) {
  SplitMix64 rng(53);
  for (int k = 0; k < 20; ++k) {
    const HWParams p = testing::random_stable_params(rng, 1 + rng.below(4), 0.9);
    const auto bounds = bibo_range(p);
    const Series q = testing::random_series(rng, 400);
    const auto pred = simulate(q, p, InitPolicy::zero_state());
    for (std::size_t t = 60; t < q.size(); ++t) {
      EXPECT_GE(pred.values[t], bounds.output.lo - 1e-6);
      EXPECT_LE(pred.values[t], bounds.output.hi + 1e-6);
    }
  }
}

TEST(Decay, IdenticalInitsHaveNoGap) {
  SplitMix64 rng(59);
  const HWParams p = testing::random_stable_params(rng, 3);
  const Series q = testing::random_series(rng, 50);
  for (double g : initial_state_decay(p, q, InitPolicy::zero_state(),
                                      InitPolicy::zero_state())) {
    EXPECT_EQ(g, 0.0);
  }
}

TEST(Decay, ExponentialEnvelope) {
  SplitMix64 rng(61);
  for (int k = 0; k < 30; ++k) {
    const std::size_t r = 1 + rng.below(4);
    const HWParams p = testing::random_stable_params(rng, r, 0.9);
    const Series q = build_target(TargetSpec{}, rng);
    const auto gap = initial_state_decay(
        p, q, pinned_init(Series(r, 35.0), p.gamma, r),
        pinned_init(Series(r, 65.0), p.gamma, r));
    const double base = std::min(0.999, spectral_radius(p.f) + 0.05);
    double c = 0.0;
    for (std::size_t t = r; t < r + 20; ++t) {
      c = std::max(c, gap[t] / std::pow(base, double(t - r)));
    }
    for (std::size_t t = r; t < gap.size(); ++t) {
      EXPECT_LE(gap[t], 10.0 * c * std::pow(base, double(t - r)) + 1e-12);
    }
  }
}

TEST(Profile, SlopesAndChord) {
  const Logistic sym{0.1, -5.0, 0.0, 100.0};
  const Curve c = sample_curve(sym, linear_grid(0.0, 100.0, 101));
  const auto peak = std::max_element(c.slope.begin(), c.slope.end());
  EXPECT_EQ(c.x[peak - c.slope.begin()], 50.0);
  EXPECT_FALSE(c.concave);

  // Center at q = -20: the whole grid is past the inflection point.
  const Logistic concave{0.05, 1.0, 0.0, 100.0};
  const Curve cc = sample_curve(concave, linear_grid(0.0, 100.0, 101));
  EXPECT_TRUE(cc.concave);
  for (std::size_t i = 1; i < cc.slope.size(); ++i) {
    EXPECT_LT(cc.slope[i], cc.slope[i - 1]);
  }

  // Near the center a logistic is almost a line.
  const Logistic g{0.02, 0.0, 0.0, 100.0};
  const Curve mid = sample_curve(g, linear_grid(-20.0, 20.0, 41));
  EXPECT_LT(mid.chord_deviation, 0.1);
  EXPECT_GT(sample_curve(g, linear_grid(-200.0, 200.0, 41)).chord_deviation, 1.0);
}

TEST(Profile, DefaultLatentGridFollowsInputRange) {
  SplitMix64 rng(67);
  const HWParams p = testing::random_stable_params(rng, 2);
  const auto prof = nonlinearity_profile(p, linear_grid(0.0, 100.0, 11));
  ASSERT_EQ(prof.output.x.size(), 11u);
  EXPECT_DOUBLE_EQ(prof.output.x.front(), p.beta(0.0));
  EXPECT_DOUBLE_EQ(prof.output.x.back(), p.beta(100.0));
}

TEST(Report, TauConsistency) {
  SplitMix64 rng(71);
  for (int k = 0; k < 100; ++k) {
    const HWParams p = testing::random_stable_params(rng, 1 + rng.below(8), 0.97);
    const auto s = stability_report(p);
    if (s.rho > 0.0) {
      EXPECT_NEAR(std::pow(s.rho, s.tau), std::exp(-3.0), 1e-9);
    }
    EXPECT_EQ(s.peak_lag, peak_lag(s.impulse));
    EXPECT_DOUBLE_EQ(s.l1_norm, l1_norm(s.impulse));
  }
}

}  // namespace
}  // namespace tvsq
