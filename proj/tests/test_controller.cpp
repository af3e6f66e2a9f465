#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "airtune/controller.hpp"
#include "airtune/error.hpp"

namespace {

using namespace airtune;
using namespace airtune::controller;

double bump(double frm, std::uint64_t = 0) {
  const double x = (frm - 1e6) / 4e5;
  return 800.0 * std::exp(-x * x);
}

TEST(Controller, StepExamples) {
  ControllerState s(500000.0, 2e9, 65536.0, 4194304.0);
  EXPECT_EQ(s.step(0.0), 500000.0);
  EXPECT_DOUBLE_EQ(s.step(1e-4), 700000.0);
  ASSERT_EQ(s.history().size(), 2u);
  EXPECT_EQ(s.history()[0].round, 0u);
  EXPECT_EQ(s.history()[1].round, 1u);
  EXPECT_EQ(s.history()[1].frm_bytes, 500000.0);
}

TEST(Controller, StepClampsToBounds) {
  ControllerState s(4194304.0, 2e9, 65536.0, 4194304.0);
  EXPECT_EQ(s.step(1.0), 4194304.0);
  EXPECT_EQ(s.step(-1.0), 65536.0);
  EXPECT_THROW((void)s.step(std::nan("")), InvalidParameter);
  ControllerState clamped_start(10.0, 1.0, 65536.0, 4194304.0);
  EXPECT_EQ(clamped_start.frm(), 65536.0);
}

TEST(Controller, HistoryRoundsStrictlyIncrease) {
  ControllerState s(1e6, 1.0, 65536.0, 4194304.0);
  HistoryEntry e;
  e.round = 3;
  (void)s.step(0.0, e);
  EXPECT_THROW((void)s.step(0.0, e), InvalidParameter);
}

TEST(Controller, ProbePoints) {
  const auto p = probe_points(1e6, 0.0, 4e6, 0.25, 5);
  ASSERT_EQ(p.size(), 5u);
  EXPECT_DOUBLE_EQ(p.front(), 0.0);
  EXPECT_DOUBLE_EQ(p.back(), 2e6);
  EXPECT_DOUBLE_EQ(p[2], 1e6);
  const auto edge = probe_points(3.9e6, 0.0, 4e6, 0.25, 50);
  EXPECT_EQ(edge.back(), 4e6);
  for (double x : edge) EXPECT_GE(x, 2.9e6 - 1e-6);
  EXPECT_THROW((void)probe_points(1e6, 0.0, 4e6, 0.25, 1), InvalidParameter);
}

TEST(Controller, CollectNumbersSamples) {
  std::vector<std::uint64_t> seen;
  const auto samples = collect_patterns(
      [&](double, std::uint64_t i) {
        seen.push_back(i);
        return 0.0;
      },
      1e6, 65536.0, 4194304.0, 0.25, 50, 100);
  ASSERT_EQ(samples.size(), 50u);
  for (std::size_t i = 0; i < seen.size(); ++i) EXPECT_EQ(seen[i], 100 + i);
  for (const Sample& s : samples) EXPECT_EQ(s.thr_mbps, 0.0);
}

TEST(Controller, DefaultMuIsFivePercentOfRangePerUnitGradient) {
  ControllerParams p;
  const double thr_max = 1000.0;
  const double range = p.frm_max - p.frm_min;
  const neural::Normalizer norm(p.frm_min, p.frm_max, thr_max, p.margin);
  // A unit gradient in normalized units, mapped to Mbps/byte, times mu.
  EXPECT_NEAR(resolve_mu(p, thr_max) * norm.denorm_gradient(1.0), 0.05 * range, 1e-6);
  p.mu = 123.0;
  EXPECT_EQ(resolve_mu(p, thr_max), 123.0);
}

TEST(Controller, GaussianBumpConverges) {
  int hits = 0;
  for (std::uint64_t s = 0; s < 5; ++s) {
    ControllerParams p;
    p.frm_start = 200000.0;
    p.rounds = 200;
    p.mu_norm = 0.005;
    p.settle_tolerance = 1e-3;
    p.init_seed = 100 + s;
    p.shuffle_seed = 200 + s;
    const OnlineResult r = online_loop(bump, p, 1000.0);
    hits += std::abs(r.final_frm - 1e6) <= 0.05 * (p.frm_max - p.frm_min);
    EXPECT_TRUE(r.settled);
    EXPECT_LE(r.history.size(), 200u);
  }
  EXPECT_GE(hits, 4);
}

TEST(Controller, SymmetricParabolaConvergesToMiddle) {
  ControllerParams p;
  p.rounds = 60;
  const double range = p.frm_max - p.frm_min;
  auto parabola = [&](double frm, std::uint64_t) {
    const double f = (frm - p.frm_min) / range;
    return 800.0 * 4.0 * f * (1.0 - f);
  };
  const OnlineResult r = online_loop(parabola, p, 1000.0);
  EXPECT_NEAR((r.final_frm - p.frm_min) / range, 0.5, 0.01);
}

TEST(Controller, MonotoneApproachOnOneSide) {
  ControllerParams p;
  p.frm_start = 200000.0;
  p.rounds = 30;
  p.mu_norm = 0.005;
  const OnlineResult r = online_loop(bump, p, 1000.0);
  // Below the maximizer the iterates climb and never jump past it by more
  // than the probe-fit noise.
  for (std::size_t i = 1; i < r.history.size(); ++i) {
    if (r.history[i - 1].frm_bytes < 0.95e6) EXPECT_GE(r.history[i].frm_bytes, r.history[i - 1].frm_bytes - 1.0);
  }
}

TEST(Controller, IteratesStayInBounds) {
  ControllerParams p;
  p.rounds = 15;
  p.mu_norm = 5.0;  // deliberately violent
  auto ramp = [](double frm, std::uint64_t) { return 1e-4 * frm; };
  const OnlineResult r = online_loop(ramp, p, 1000.0);
  for (const HistoryEntry& h : r.history) {
    EXPECT_GE(h.frm_bytes, p.frm_min);
    EXPECT_LE(h.frm_bytes, p.frm_max);
  }
  EXPECT_EQ(r.final_frm, p.frm_max);
}

TEST(Controller, Reproducible) {
  ControllerParams p;
  p.rounds = 8;
  auto noisy = [](double frm, std::uint64_t i) { return 10.0 + bump(frm) + 5.0 * std::sin(1.7 * static_cast<double>(i)); };
  const OnlineResult a = online_loop(noisy, p, 1000.0);
  const OnlineResult b = online_loop(noisy, p, 1000.0);
  ASSERT_EQ(a.history.size(), b.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    EXPECT_EQ(a.history[i].frm_bytes, b.history[i].frm_bytes);
    EXPECT_EQ(a.history[i].gradient, b.history[i].gradient);
    EXPECT_EQ(a.history[i].mse, b.history[i].mse);
  }
  EXPECT_EQ(a.model.weights(), b.model.weights());
}

TEST(Controller, EvaluateMeasuresFinalFrame) {
  ControllerParams p;
  p.rounds = 2;
  double asked = -1.0;
  const OnlineResult r = online_loop(bump, p, 1000.0, [&](double frm) {
    asked = frm;
    return 42.0;
  });
  EXPECT_EQ(asked, r.final_frm);
  EXPECT_EQ(r.final_thr, 42.0);
}

TEST(Controller, ZeroThroughputIsHandled) {
  ControllerParams p;
  p.rounds = 3;
  const OnlineResult r = online_loop([](double, std::uint64_t) { return 0.0; }, p, 1000.0);
  EXPECT_EQ(r.final_thr, 0.0);
  for (const HistoryEntry& h : r.history) EXPECT_TRUE(std::isfinite(h.gradient));
}

TEST(Controller, InvalidParameters) {
  ControllerParams p;
  p.rounds = 0;
  EXPECT_THROW((void)online_loop(bump, p, 1000.0), InvalidParameter);
  EXPECT_THROW(ControllerState(1e6, 1.0, 5.0, 5.0), InvalidParameter);
}

}  // namespace
