#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "potfield/pipeline.hpp"
#include "potfield/synth.hpp"
#include "test_helpers.hpp"

using namespace potfield;
using potfield::testing::expect_error;

namespace {

PipelineSettings fast_settings() {
  PipelineSettings s;
  s.train.starts = 2;
  s.train.threads = 1;
  s.grid.points_per_axis = 15;
  return s;
}

// Hourly two-asset random-walk-like prices over `days` days.
Trajectory hourly(int days) {
  Trajectory t;
  const int n = days * 24;
  t.states.resize(n, 2);
  t.dt = 3600.0;
  t.assets = {"BTC", "ETH"};
  for (int i = 0; i < n; ++i) {
    t.times.push_back(1.6e9 + 3600.0 * i);
    t.states(i, 0) = 50000.0 + 800.0 * std::sin(0.3 * i) + 15.0 * i;
    t.states(i, 1) = 3000.0 + 60.0 * std::cos(0.23 * i) - 1.0 * i;
  }
  return t;
}

}  // namespace

TEST(Evolution, OneEntryPerSubwindow) {
  const auto traj = hourly(10);
  const auto evo = temporal_evolution(traj, 86400.0, fast_settings());
  ASSERT_EQ(evo.entries.size(), 10u);
  for (std::size_t k = 0; k < 10; ++k) {
    EXPECT_TRUE(evo.entries[k].ok) << evo.entries[k].error;
    EXPECT_EQ(evo.entries[k].start, traj.times.front() + 86400.0 * static_cast<double>(k));
  }
  const auto csv = evolution_to_csv(evo);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "date,mu_a_BTC,mu_a_ETH,sd_BTC,sd_ETH");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 11);
}

TEST(Evolution, TrailingFragmentDropped) {
  auto traj = hourly(3);
  traj = traj.slice(0, 3 * 24 - 22);  // last day keeps 2 samples
  const auto evo = temporal_evolution(traj, 86400.0, fast_settings());
  EXPECT_EQ(evo.entries.size(), 2u);
}

TEST(Evolution, ConstantPricesFailEveryWindow) {
  auto traj = hourly(3);
  traj.states.setConstant(100.0);
  const auto evo = temporal_evolution(traj, 86400.0, fast_settings());
  ASSERT_EQ(evo.entries.size(), 3u);
  for (const auto& e : evo.entries) {
    EXPECT_FALSE(e.ok);
    EXPECT_NE(e.error.find("DegenerateRange"), std::string::npos);
  }
  const auto rows = export_features(evo, "ETH");
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_FALSE(rows[0].value.has_value());
  const auto text = features_to_csv(rows);
  EXPECT_NE(text.find(",,\n"), std::string::npos);
}

TEST(Evolution, RejectsTooShortSubwindow) {
  expect_error([] { temporal_evolution(hourly(2), 7200.0, fast_settings()); }, ErrorCode::InvalidArgument);
}

TEST(Features, RoundTripAndUnknownAsset) {
  const auto evo = temporal_evolution(hourly(5), 86400.0, fast_settings());
  auto rows = export_features(evo, "BTC");
  ASSERT_EQ(rows.size(), 5u);
  rows[2].value.reset();
  rows[2].sd.reset();
  const auto parsed = parse_features_csv(features_to_csv(rows));
  ASSERT_EQ(parsed.size(), rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(parsed[i].date, rows[i].date);
    EXPECT_EQ(parsed[i].value, rows[i].value);
    EXPECT_EQ(parsed[i].sd, rows[i].sd);
  }
  EXPECT_EQ(rows[0].date, "2020-09-13T12:26:40Z");
  expect_error([&] { export_features(evo, "DOGE"); }, ErrorCode::UnknownAsset);
}

// A well whose centre moves at constant velocity: each subwindow's attractor
// should sit near the centre at that subwindow's midpoint.
TEST(Evolution, DriftingWellIsTracked) {
  SynthSpec spec;
  QuadraticWell q;
  q.center = Eigen::Vector2d(1.0, 2.0);
  q.curvature = Eigen::Vector2d(40.0, 60.0).asDiagonal();
  q.center_velocity = Eigen::Vector2d(0.6, -0.3);
  spec.potential = q;
  spec.gamma = 0.3;
  spec.noise_std = 0.05;
  spec.x0 = Eigen::Vector2d(1.5, 2.0);
  spec.v0 = Eigen::Vector2d(0.6, 2.5);
  spec.dt = 0.01;
  spec.steps = 600;
  const double window = 1.0;
  const auto evo = temporal_evolution(simulate(spec, 12), window, fast_settings());
  ASSERT_EQ(evo.entries.size(), 6u);
  for (std::size_t k = 0; k < evo.entries.size(); ++k) {
    const auto& e = evo.entries[k];
    ASSERT_TRUE(e.ok) << e.error;
    const double mid = 0.5 * (e.start + e.end);
    const Eigen::Vector2d centre = q.center + q.center_velocity * mid;
    const Eigen::Vector2d lag = (e.mu_a - centre).cwiseQuotient(q.center_velocity * window).cwiseAbs();
    EXPECT_LT(lag.maxCoeff(), 1.0) << "window " << k << " mu_a " << e.mu_a.transpose();
    if (k > 0) {
      EXPECT_GT(e.mu_a[0], evo.entries[k - 1].mu_a[0]);
      EXPECT_LT(e.mu_a[1], evo.entries[k - 1].mu_a[1]);
    }
  }
}
