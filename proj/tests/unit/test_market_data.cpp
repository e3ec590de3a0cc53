#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "potfield/market_data.hpp"
#include "potfield/synth.hpp"
#include "test_helpers.hpp"

using namespace potfield;
using potfield::testing::expect_error;

namespace {

AssetSeries series_from_closes(const std::string& label, const std::vector<std::pair<UnixSeconds, double>>& rows) {
  AssetSeries s{label, {}};
  for (auto [t, c] : rows) s.records.push_back({t, c, c, c, c, 1.0});
  return s;
}

Trajectory make_traj(const Eigen::MatrixXd& states, double dt = 1.0) {
  Trajectory t;
  t.states = states;
  t.dt = dt;
  for (Eigen::Index r = 0; r < states.rows(); ++r) t.times.push_back(static_cast<double>(r) * dt);
  for (Eigen::Index c = 0; c < states.cols(); ++c) t.assets.push_back("a" + std::to_string(c));
  return t;
}

}  // namespace

TEST(ParseCsv, MapsFieldsOfIsoRow) {
  std::istringstream in("timestamp,open,high,low,close,volume\n2021-09-07T00:00:00Z,52700,52750,52600,52710,12.5\n");
  const auto recs = parse_csv(in);
  ASSERT_EQ(recs.size(), 1u);
  EXPECT_EQ(recs[0].timestamp, 1630972800);
  EXPECT_DOUBLE_EQ(recs[0].open, 52700);
  EXPECT_DOUBLE_EQ(recs[0].high, 52750);
  EXPECT_DOUBLE_EQ(recs[0].low, 52600);
  EXPECT_DOUBLE_EQ(recs[0].close, 52710);
  EXPECT_DOUBLE_EQ(recs[0].volume, 12.5);
}

TEST(ParseCsv, CustomSchemaAndUnixSeconds) {
  std::istringstream in("t,o,h,l,c,v\n100,1,2,0.5,1.5,3\n400,1.5,2,1,1,0\n");
  CsvSchema schema{"t", "o", "h", "l", "c", "v"};
  const auto recs = parse_csv(in, schema);
  ASSERT_EQ(recs.size(), 2u);
  EXPECT_EQ(recs[1].timestamp, 400);
  EXPECT_DOUBLE_EQ(recs[1].close, 1.0);
}

TEST(ParseCsv, EmptyInputIsMissingColumn) {
  std::istringstream in("");
  expect_error([&] { parse_csv(in); }, ErrorCode::MissingColumn);
}

TEST(ParseCsv, AbsentColumnIsMissingColumn) {
  std::istringstream in("timestamp,open,high,low,close\n0,1,1,1,1\n");
  expect_error([&] { parse_csv(in); }, ErrorCode::MissingColumn);
}

TEST(ParseCsv, EqualTimestampsRejected) {
  std::istringstream in("timestamp,open,high,low,close,volume\n10,1,1,1,1,1\n10,1,1,1,1,1\n");
  try {
    parse_csv(in);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonMonotoneTimestamps);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
}

TEST(ParseCsv, BadNumberAndBoundsAreUnparsable) {
  std::istringstream bad("timestamp,open,high,low,close,volume\n10,x,1,1,1,1\n");
  expect_error([&] { parse_csv(bad); }, ErrorCode::UnparsableRow);
  std::istringstream bounds("timestamp,open,high,low,close,volume\n10,3,2,1,1,1\n");
  expect_error([&] { parse_csv(bounds); }, ErrorCode::UnparsableRow);
}

TEST(ParseCsv, MissingFileIsIo) {
  expect_error([] { parse_csv("/nonexistent/prices.csv"); }, ErrorCode::Io);
}

TEST(BuildTrajectory, SingleAssetPassthrough) {
  const std::vector<AssetSeries> s{series_from_closes("A", {{0, 1}, {1, 2}, {2, 3}})};
  const auto traj = build_trajectory(s, PriceField::Close, 1);
  ASSERT_EQ(traj.size(), 3);
  ASSERT_EQ(traj.dim(), 1);
  EXPECT_EQ(traj.states(0, 0), 1);
  EXPECT_EQ(traj.states(1, 0), 2);
  EXPECT_EQ(traj.states(2, 0), 3);
  EXPECT_EQ(traj.dt, 1.0);
}

TEST(BuildTrajectory, ColumnOrderFollowsInput) {
  const std::vector<AssetSeries> s{series_from_closes("B", {{0, 10}, {300, 11}, {600, 12}}),
                                   series_from_closes("A", {{0, 1}, {300, 2}, {600, 3}})};
  const auto traj = build_trajectory(s, PriceField::Close, 300);
  ASSERT_EQ(traj.size(), 3);
  EXPECT_EQ(traj.assets, (std::vector<std::string>{"B", "A"}));
  EXPECT_EQ(traj.states(2, 0), 12);
  EXPECT_EQ(traj.states(2, 1), 3);
  EXPECT_EQ(traj.dt, 300.0);
}

TEST(BuildTrajectory, MissingInteriorSampleIsForwardFilled) {
  const std::vector<AssetSeries> s{series_from_closes("A", {{0, 1}, {1, 2}, {2, 3}, {3, 4}}),
                                   series_from_closes("B", {{0, 5}, {1, 6}, {3, 8}})};
  const auto traj = build_trajectory(s, PriceField::Close, 1);
  ASSERT_EQ(traj.size(), 4);
  EXPECT_EQ(traj.states(2, 1), 6);
  EXPECT_EQ(traj.states(3, 1), 8);
}

TEST(BuildTrajectory, TimesAreIntersectionOfResampledGrids) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> gap(1, 400);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<AssetSeries> s;
    std::vector<std::pair<UnixSeconds, UnixSeconds>> ranges;
    for (int a = 0; a < 3; ++a) {
      std::vector<std::pair<UnixSeconds, double>> rows;
      UnixSeconds t = gap(rng) * 7;
      for (int i = 0; i < 60; ++i, t += gap(rng)) rows.emplace_back(t, 100.0 + i);
      ranges.emplace_back(rows.front().first, rows.back().first);
      s.push_back(series_from_closes("x" + std::to_string(a), rows));
    }
    const UnixSeconds step = 300;
    const auto traj = build_trajectory(s, PriceField::Close, step);
    // brute force: grid points covered by every asset's [first, last]
    std::vector<double> expected;
    for (UnixSeconds g = 0; g <= 200000; g += step) {
      bool all = true;
      for (auto [lo, hi] : ranges) all = all && g >= lo && g <= hi;
      if (all) expected.push_back(static_cast<double>(g));
    }
    EXPECT_EQ(traj.times, expected);
  }
}

TEST(BuildTrajectory, MeanFieldIsOhlcAverage) {
  AssetSeries s{"A", {{0, 1, 4, 1, 2, 0}, {1, 1, 4, 1, 2, 0}, {2, 1, 4, 1, 2, 0}}};
  const auto traj = build_trajectory(std::span<const AssetSeries>(&s, 1), PriceField::Mean, 1);
  EXPECT_DOUBLE_EQ(traj.states(0, 0), 2.0);
}

TEST(BuildTrajectory, DisjointRangesAreInsufficientOverlap) {
  const std::vector<AssetSeries> s{series_from_closes("A", {{0, 1}, {1, 2}, {2, 3}}),
                                   series_from_closes("B", {{10, 1}, {11, 2}, {12, 3}})};
  expect_error([&] { build_trajectory(s, PriceField::Close, 1); }, ErrorCode::InsufficientOverlap);
}

TEST(Normalize, MapsColumnToUnitInterval) {
  Eigen::MatrixXd m(3, 1);
  m << 2, 4, 6;
  const auto n = normalize_minmax(make_traj(m));
  EXPECT_DOUBLE_EQ(n.states(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(n.states(1, 0), 0.5);
  EXPECT_DOUBLE_EQ(n.states(2, 0), 1.0);
  ASSERT_TRUE(n.norm.has_value());
  EXPECT_EQ((*n.norm)[0].min, 2.0);
  EXPECT_EQ((*n.norm)[0].max, 6.0);
}

TEST(Normalize, ConstantColumnIsDegenerate) {
  Eigen::MatrixXd m(3, 1);
  m << 5, 5, 5;
  expect_error([&] { normalize_minmax(make_traj(m)); }, ErrorCode::DegenerateRange);
}

TEST(Normalize, RoundTripOnRandomPrices) {
  std::mt19937_64 rng(11);
  std::lognormal_distribution<double> price(8.0, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::MatrixXd m(40, 3);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = price(rng);
    const auto traj = make_traj(m);
    const auto back = denormalize(normalize_minmax(traj));
    const double rel = ((back.states - m).array().abs() / m.array().abs()).maxCoeff();
    EXPECT_LE(rel, 1e-12);
    EXPECT_FALSE(back.norm.has_value());
  }
}

TEST(GradientObservations, QuadraticTimeGivesConstant) {
  Eigen::MatrixXd m(4, 1);
  m << 0, 1, 4, 9;
  const auto obs = estimate_gradient_observations(make_traj(m));
  ASSERT_EQ(obs.X.rows(), 2);
  EXPECT_EQ(obs.X(0, 0), 1);
  EXPECT_EQ(obs.X(1, 0), 4);
  EXPECT_DOUBLE_EQ(obs.Y(0, 0), -2.0);
  EXPECT_DOUBLE_EQ(obs.Y(1, 0), -2.0);
}

TEST(GradientObservations, LinearPricesGiveZero) {
  Eigen::MatrixXd m(6, 2);
  for (int i = 0; i < 6; ++i) m.row(i) << i, 3.0 - 0.5 * i;
  const auto obs = estimate_gradient_observations(make_traj(m, 0.5));
  EXPECT_EQ(obs.X.rows(), 4);
  EXPECT_LE(obs.Y.cwiseAbs().maxCoeff(), 1e-12);
}

TEST(GradientObservations, TooShort) {
  expect_error([] { estimate_gradient_observations(make_traj(Eigen::MatrixXd::Ones(2, 1))); }, ErrorCode::TooShort);
}

namespace {

SynthSpec undamped_well(double dt, double duration) {
  SynthSpec s;
  QuadraticWell q;
  q.center = Eigen::Vector2d(1.0, -0.5);
  q.curvature.resize(2, 2);
  q.curvature << 2.0, 0.5, 0.5, 3.0;
  s.potential = q;
  s.x0 = Eigen::Vector2d(2.0, 0.0);
  s.v0 = Eigen::Vector2d(0.0, 1.0);
  s.dt = dt;
  s.steps = static_cast<std::size_t>(std::lround(duration / dt)) + 1;
  return s;
}

}  // namespace

// Without damping the equation of motion is x'' = -A(x - c), so the second
// difference differs from A(x - c) by dt^2/12 x'''' + O(dt^4), and
// x'''' = A^2 (x - c).
TEST(GradientObservations, SynthWellErrorBoundedByFourthDerivative) {
  const auto spec = undamped_well(0.01, 10.0);
  const auto& q = std::get<QuadraticWell>(spec.potential);
  const auto traj = simulate(spec, 1);
  const auto obs = estimate_gradient_observations(traj);
  double worst = 0.0, bound = 0.0;
  for (Eigen::Index i = 0; i < obs.X.rows(); ++i) {
    const Eigen::VectorXd d = obs.X.row(i).transpose() - q.center;
    worst = std::max(worst, (obs.Y.row(i).transpose() - q.curvature * d).cwiseAbs().maxCoeff());
    bound = std::max(bound, (q.curvature * q.curvature * d).cwiseAbs().maxCoeff());
  }
  EXPECT_LE(worst, 1.05 * bound * spec.dt * spec.dt / 12.0);
}

TEST(GradientObservations, ErrorShrinksAtSecondOrder) {
  auto mean_error = [](double dt) {
    const auto spec = undamped_well(dt, 8.0);
    const auto& q = std::get<QuadraticWell>(spec.potential);
    const auto obs = estimate_gradient_observations(simulate(spec, 1));
    double sum = 0.0;
    for (Eigen::Index i = 0; i < obs.X.rows(); ++i) {
      const Eigen::VectorXd d = obs.X.row(i).transpose() - q.center;
      sum += (obs.Y.row(i).transpose() - q.curvature * d).cwiseAbs().sum();
    }
    return sum / static_cast<double>(obs.Y.size());
  };
  const double e1 = mean_error(0.02);
  const double e2 = mean_error(0.01);
  const double e3 = mean_error(0.005);
  EXPECT_NEAR(e1 / e2, 4.0, 0.4);
  EXPECT_NEAR(e2 / e3, 4.0, 0.4);
}

TEST(TrajectoryCsv, RoundTripsThroughFile) {
  Eigen::MatrixXd m(5, 2);
  m << 1, 2, 1.5, 2.25, 1.125, 3, 0.1, 1e6, 7, 8;
  auto traj = make_traj(m, 300.0);
  for (auto& t : traj.times) t += 1.6e9;
  const auto path = (std::filesystem::temp_directory_path() / "potfield_traj_roundtrip.csv").string();
  write_trajectory_csv(path, traj);
  const auto back = read_trajectory_csv(path);
  EXPECT_EQ(back.states, traj.states);
  EXPECT_EQ(back.times, traj.times);
  EXPECT_EQ(back.dt, 300.0);
  EXPECT_EQ(back.assets, traj.assets);
  std::filesystem::remove(path);
}

TEST(TrajectoryCsv, IrregularTimesRejected) {
  const auto path = (std::filesystem::temp_directory_path() / "potfield_traj_irregular.csv").string();
  {
    std::ofstream out(path);
    out << "timestamp,a\n0,1\n1,2\n3,3\n";
  }
  expect_error([&] { read_trajectory_csv(path); }, ErrorCode::NonUniformSampling);
  std::filesystem::remove(path);
}
