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
#include "tvsq/model.hpp"

namespace tvsq {
namespace {

TEST(Logistic, InputMapAtSlopeOne) {
  const Logistic beta{0.05, -2.5, 0.0, 1.0};
  // 1 / (1 + e^-1)
  EXPECT_NEAR(input_nonlinearity(70.0, beta), 0.7310585786300049, 1e-15);
}

TEST(Logistic, OutputMapAndInverse) {
  const Logistic gamma{1.0, 0.0, 0.0, 100.0};
  // 100 / (1 + e^-2)
  EXPECT_NEAR(output_nonlinearity(2.0, gamma), 88.07970779778823, 1e-12);
  EXPECT_NEAR(invert_output_nonlinearity(88.0797, gamma), 2.0, 1e-4);
  for (double v = -10.0; v <= 10.0; v += 0.25) {
    EXPECT_NEAR(invert_output_nonlinearity(output_nonlinearity(v, gamma), gamma),
                v, 1e-10);
  }
}

TEST(Logistic, DegenerateAndMidpoint) {
  const Logistic flat{0.3, 1.0, 12.0, 0.0};
  EXPECT_EQ(flat(-50.0), 12.0);
  EXPECT_EQ(flat(50.0), 12.0);
  const Logistic g{0.5, -10.0, 5.0, 40.0};
  EXPECT_DOUBLE_EQ(g(20.0), 25.0);
  EXPECT_DOUBLE_EQ(invert_output_nonlinearity(25.0, g), 20.0);
}

TEST(Logistic, RangeContainment) {
  SplitMix64 rng(3);
  for (int k = 0; k < 1000; ++k) {
    const Logistic g{rng.normal(), rng.normal(), 100 * rng.normal(),
                     100 * rng.normal()};
    const double x = 500.0 * rng.normal();
    EXPECT_GE(g(x), g.lower());
    EXPECT_LE(g(x), g.upper());
  }
}

TEST(Logistic, InverseRejectsOutOfRange) {
  const Logistic gamma{1.0, 0.0, 0.0, 100.0};
  try {
    invert_output_nonlinearity(100.0, gamma);
    FAIL() << "expected RangeError";
  } catch (const RangeError& e) {
    EXPECT_EQ(e.lower(), 0.0);
    EXPECT_EQ(e.upper(), 100.0);
  }
  EXPECT_THROW(invert_output_nonlinearity(-1.0, gamma), RangeError);
  EXPECT_THROW(invert_output_nonlinearity(50.0, Logistic{0.0, 0.0, 0.0, 1.0}),
               ContractError);
}

TEST(Logistic, ClipMarginKeepsInverseDefined) {
  const Logistic gamma{1.0, 0.0, 10.0, -80.0};  // decreasing, range (-70, 10)
  for (double q : {-200.0, -70.0, 10.0, 300.0}) {
    const double c = clip_to_output_range(q, gamma);
    EXPECT_NO_THROW(invert_output_nonlinearity(c, gamma));
  }
}

TEST(Logistic, NearIdentityPresetWithinTwo) {
  const Logistic id = near_identity_logistic();
  double worst = 0.0;
  for (int k = 0; k <= 1000; ++k) {
    const double x = 0.1 * k;
    worst = std::max(worst, std::abs(id(x) - x));
  }
  EXPECT_LT(worst, 2.0);
  EXPECT_NEAR(id(0.0), 0.0, 1e-12);
  EXPECT_NEAR(id(100.0), 100.0, 1e-12);
}

TEST(Logistic, DerivativeMatchesFiniteDifference) {
  const Logistic g{0.07, -1.3, 4.0, 90.0};
  for (double x = -20.0; x <= 60.0; x += 7.0) {
    const double fd = (g(x + 1e-6) - g(x - 1e-6)) / 2e-6;
    EXPECT_NEAR(g.derivative(x), fd, 1e-6);
    const auto pg = g.parameter_gradient(x);
    auto arr = g.to_array();
    for (int i = 0; i < 4; ++i) {
      auto hi = arr;
      auto lo = arr;
      hi[i] += 1e-6;
      lo[i] -= 1e-6;
      const double d = (Logistic::from_array(hi)(x) -
                        Logistic::from_array(lo)(x)) / 2e-6;
      EXPECT_NEAR(pg[i], d, 1e-5 * std::max(1.0, std::abs(d)));
    }
  }
}

TEST(Filter, IdentityAndZero) {
  const Series b{1.0, 0.0};
  const Series f{0.0};
  const Series u{3.0, 7.0};
  const Series v{5.0};
  EXPECT_EQ(filter_step(u, v, b, f), 7.0);
  const Series zb{0.0, 0.0, 0.0};
  const Series ff{0.4, -0.2};
  const Series uu{1.0, 2.0, 3.0};
  const Series vv{0.0, 0.0};
  EXPECT_EQ(filter_step(uu, vv, zb, ff), 0.0);
  EXPECT_THROW(filter_step(uu, v, zb, ff), ContractError);
}

TEST(Filter, GeometricSteadyState) {
  const Series b{0.5, 0.25};
  const Series f{0.5};
  const Series u{1.0, 1.0};
  double prev = 0.0;
  for (int t = 1; t <= 80; ++t) {
    const Series vw{prev};
    prev = filter_step(u, vw, b, f);
  }
  EXPECT_NEAR(prev, 1.5, 1e-9);
  EXPECT_DOUBLE_EQ(dc_gain(b, f), 1.5);
}

TEST(Params, FlattenRoundTrip) {
  SplitMix64 rng(11);
  const HWParams p = testing::random_stable_params(rng, 5);
  const Series theta = flatten(p);
  ASSERT_EQ(theta.size(), 2 * 5 + 9u);
  EXPECT_EQ(unflatten(5, theta), p);
  EXPECT_THROW(unflatten(4, theta), ContractError);
}

TEST(Params, ValidateRejectsShapesAndNonFinite) {
  HWParams p = initial_params(3);
  EXPECT_NO_THROW(validate(p));
  p.b.pop_back();
  EXPECT_THROW(validate(p), ContractError);
  p = initial_params(3);
  p.f[1] = std::nan("");
  EXPECT_THROW(validate(p), ContractError);
  p = initial_params(3);
  p.order = 0;
  EXPECT_THROW(validate(p), ContractError);
}

TEST(Simulate, NearIdentityTracksInput) {
  HWParams p = initial_params(2);
  p.b = {1.0, 0.0, 0.0};
  SplitMix64 rng(5);
  const Series q = build_target(TargetSpec{}, rng);
  const auto pred = simulate(q, p, InitPolicy::zero_state());
  EXPECT_EQ(pred.warmup, 2u);
  // Each near-identity map stays within 2 of the identity; so the
  // composition stays within 2 + (max slope of gamma) * 2.
  for (std::size_t t = 2; t < q.size(); ++t) {
    EXPECT_NEAR(pred.values[t], q[t], 5.0);
  }
}

TEST(Simulate, ConstantInputConvergesToClosedForm) {
  SplitMix64 rng(21);
  for (int k = 0; k < 20; ++k) {
    const std::size_t r = 1 + rng.below(6);
    const HWParams p = testing::random_stable_params(rng, r, 0.8);
    const double c = 30.0 + 40.0 * rng.uniform();
    const Series q(600, c);
    const auto pred = simulate(q, p, InitPolicy::zero_state());
    const double limit =
        p.gamma(p.beta(c) * std::accumulate(p.b.begin(), p.b.end(), 0.0) /
                (1.0 - std::accumulate(p.f.begin(), p.f.end(), 0.0)));
    EXPECT_NEAR(pred.values.back(), limit, 1e-9);
  }
}

TEST(Simulate, HoldFirstInputStartsAtSteadyState) {
  SplitMix64 rng(2);
  const HWParams p = testing::random_stable_params(rng, 4);
  const Series q(50, 42.0);
  const auto lat = simulate_latent(q, p, InitPolicy::hold_first_input());
  for (double v : lat.v) EXPECT_NEAR(v, lat.v.front(), 1e-10);
  EXPECT_NEAR(lat.v.front(), p.beta(42.0) * dc_gain(p.b, p.f), 1e-12);
}

TEST(Simulate, PinnedWarmupReproducesPinnedValues) {
  SplitMix64 rng(8);
  const HWParams p = testing::random_stable_params(rng, 3);
  const Series q = testing::random_series(rng, 40, 30.0, 70.0);
  const Series measured{41.0, 47.5, 52.25};
  const auto init = pinned_init(measured, p.gamma, 3);
  const auto pred = simulate(q, p, init);
  for (std::size_t t = 0; t < 3; ++t) {
    EXPECT_NEAR(pred.values[t], measured[t], 1e-9);
  }
  EXPECT_EQ(pred.init, InitKind::kPinned);
  EXPECT_THROW(simulate(q, p, InitPolicy::pin({1.0})), ContractError);
}

TEST(Simulate, InitialStatesForget) {
  SplitMix64 rng(13);
  for (int k = 0; k < 10; ++k) {
    const std::size_t r = 1 + rng.below(4);
    const HWParams p = testing::random_stable_params(rng, r, 0.85);
    const Series q = build_target(TargetSpec{}, rng);
    const double rho = spectral_radius(p.f);
    const auto za = simulate_latent(q, p, InitPolicy::zero_state());
    const auto zb = simulate_latent(q, p, InitPolicy::hold_first_input());
    double g0 = 0.0;
    for (std::size_t t = 0; t < r; ++t) {
      g0 = std::max(g0, std::abs(za.v[t] - zb.v[t]));
    }
    // Latent gap is a free response of the feedback recursion: it falls
    // below 1e-6 once rho^(t - r) * g0 * (transient factor) does.
    const double steps = std::log(1e-9 / g0) / std::log(rho);
    const std::size_t settle = r + static_cast<std::size_t>(std::ceil(steps));
    const auto a = simulate(q, p, InitPolicy::zero_state());
    const auto b = simulate(q, p, InitPolicy::hold_first_input());
    for (std::size_t t = settle; t < q.size(); ++t) {
      EXPECT_NEAR(a.values[t], b.values[t], 1e-6) << "t=" << t;
    }
  }
}

TEST(Simulate, LatentStageIsLinear) {
  SplitMix64 rng(17);
  const HWParams p = testing::random_stable_params(rng, 3);
  // Latent inputs go straight into the recursion, zero initial state.
  const Series ua = testing::random_series(rng, 60, -1.0, 1.0);
  const Series ub = testing::random_series(rng, 60, -1.0, 1.0);
  auto run = [&](const Series& u) {
    Series v(u.size(), 0.0);
    for (std::size_t t = 3; t < u.size(); ++t) {
      v[t] = filter_step(std::span(u).subspan(t - 3, 4),
                         std::span<const double>(v).subspan(t - 3, 3), p.b,
                         p.f);
    }
    return v;
  };
  Series sum(60);
  for (std::size_t t = 0; t < 60; ++t) sum[t] = ua[t] + ub[t];
  const Series va = run(ua);
  const Series vb = run(ub);
  const Series vs = run(sum);
  for (std::size_t t = 0; t < 60; ++t) EXPECT_NEAR(vs[t], va[t] + vb[t], 1e-12);
}

TEST(Simulate, TimeInvariant) {
  SplitMix64 rng(23);
  const HWParams p = testing::random_stable_params(rng, 2);
  const Series q = testing::random_series(rng, 80, 30.0, 70.0);
  // Constant heads longer than r keep the warm-up at the held steady state.
  const std::size_t head = 5;
  const std::size_t k = 7;
  Series x(head, 45.0);
  x.insert(x.end(), q.begin(), q.end());
  Series y(head + k, 45.0);
  y.insert(y.end(), q.begin(), q.end());
  const auto a = simulate_latent(x, p, InitPolicy::hold_first_input());
  const auto b = simulate_latent(y, p, InitPolicy::hold_first_input());
  for (std::size_t t = 0; t < x.size(); ++t) {
    EXPECT_NEAR(b.v[t + k], a.v[t], 1e-9);
  }
}

TEST(Simulate, DeterministicAndStabilityChecked) {
  SplitMix64 rng(29);
  const HWParams p = testing::random_stable_params(rng, 4);
  const Series q = testing::random_series(rng, 100);
  EXPECT_EQ(simulate(q, p, InitPolicy::zero_state()).values,
            simulate(q, p, InitPolicy::zero_state()).values);

  HWParams bad = initial_params(1);
  bad.f = {1.2};
  try {
    simulate(q, bad, InitPolicy::zero_state());
    FAIL() << "expected StabilityError";
  } catch (const StabilityError& e) {
    EXPECT_NEAR(e.rho(), 1.2, 1e-12);
  }
  SimulateOptions opt;
  opt.allow_unstable = true;
  EXPECT_NO_THROW(simulate(q, bad, InitPolicy::zero_state(), opt));
  EXPECT_THROW(simulate(Series{50.0}, p, InitPolicy::zero_state()),
               ContractError);
}

TEST(LinearOutput, PublishedPreset) {
  EXPECT_EQ(kPublishedLinearOutput.slope, 0.7013);
  EXPECT_EQ(kPublishedLinearOutput.intercept, 49.9794);
  // 0.7013 * 10 + 49.9794
  HWParams p = initial_params(1);
  p.b = {1.0, 0.0};
  p.beta = Logistic{0.0, 0.0, 10.0, 0.0};  // u == 10
  const Series q(5, 50.0);
  const auto pred = simulate_linear_output(q, p, kPublishedLinearOutput,
                                           InitPolicy::zero_state());
  EXPECT_NEAR(pred.values.back(), 56.9924, 1e-12);
  p.b = {0.0, 0.0};
  const auto zero = simulate_linear_output(q, p, kPublishedLinearOutput,
                                           InitPolicy::zero_state());
  for (double x : zero.values) EXPECT_EQ(x, 49.9794);
}

TEST(LinearOutput, MonotoneInLatent) {
  SplitMix64 rng(31);
  const HWParams p = testing::random_stable_params(rng, 2);
  const Series lo(40, 40.0);
  const Series hi(40, 60.0);
  HWParams pos = p;
  pos.f = {0.3, 0.1};
  for (double& b : pos.b) b = std::abs(b);
  const auto a = simulate_linear_output(lo, pos, kPublishedLinearOutput,
                                        InitPolicy::zero_state());
  const auto b = simulate_linear_output(hi, pos, kPublishedLinearOutput,
                                        InitPolicy::zero_state());
  for (std::size_t t = 2; t < 40; ++t) EXPECT_GT(b.values[t], a.values[t]);
}

}  // namespace
}  // namespace tvsq
