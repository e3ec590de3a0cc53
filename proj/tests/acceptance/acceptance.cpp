// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "potfield/attractor.hpp"
#include "potfield/error.hpp"
#include "potfield/gp_field.hpp"
#include "potfield/lyapunov.hpp"
#include "potfield/market_data.hpp"
#include "potfield/pipeline.hpp"
#include "potfield/synth.hpp"
#include "potfield/wavelet.hpp"

#ifdef POTFIELD_HAVE_APP
#include "commands.hpp"
#include "config.hpp"
#endif

using namespace potfield;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

fs::path data_dir() {
  if (const char* env = std::getenv("POTFIELD_DATA_DIR")) return env;
  return fs::path(POTFIELD_SOURCE_DIR) / "data";
}

// BTC/ETH 5-minute closes restricted to [start, end).
std::optional<Trajectory> real_window(const std::string& start, const std::string& end, std::string& why) {
  const auto btc = data_dir() / "BTC_5m.csv";
  const auto eth = data_dir() / "ETH_5m.csv";
  if (!fs::exists(btc) || !fs::exists(eth)) {
    why = "sample data not present (" + btc.string() + ", " + eth.string() + ")";
    return std::nullopt;
  }
  const std::vector<AssetSeries> series = {{"BTC", parse_csv(btc.string())}, {"ETH", parse_csv(eth.string())}};
  const auto full = build_trajectory(series, PriceField::Close, 300);
  const double t0 = static_cast<double>(*parse_timestamp(start));
  const double t1 = static_cast<double>(*parse_timestamp(end));
  Eigen::Index lo = 0, hi = full.size();
  while (lo < hi && full.times[static_cast<std::size_t>(lo)] < t0) ++lo;
  while (hi > lo && full.times[static_cast<std::size_t>(hi - 1)] >= t1) --hi;
  if (hi - lo < 3) {
    why = "sample data does not cover " + start + " .. " + end;
    return std::nullopt;
  }
  return full.slice(lo, hi);
}

SynthSpec criterion1_spec() {
  SynthSpec spec;
  QuadraticWell q;
  q.center = Eigen::Vector2d(1.0, 2.0);
  q.curvature = Eigen::Vector2d(40.0, 60.0).asDiagonal();
  spec.potential = q;
  spec.gamma = 0.3;
  spec.noise_std = 0.05;
  spec.x0 = Eigen::Vector2d(2.0, 2.0);
  spec.v0 = Eigen::Vector2d(0.0, 4.0);
  spec.dt = 0.01;
  spec.steps = 500;
  return spec;
}

Outcome attractor_recovery() {
  const auto spec = criterion1_spec();
  const Eigen::VectorXd c = std::get<QuadraticWell>(spec.potential).center;
  const auto traj = simulate(spec, 1);
  const auto start = std::chrono::steady_clock::now();
  const auto w = analyze_window(traj, PipelineSettings{});
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  const Eigen::VectorXd mu = w.frame.to_report(w.summary.mu_a);
  const Eigen::VectorXd span = traj.states.colwise().maxCoeff() - traj.states.colwise().minCoeff();
  const double rel = ((mu - c).cwiseAbs().array() / span.array()).maxCoeff();

  Eigen::Index nearest = 0;
  double best = 1e300;
  for (Eigen::Index i = 0; i < w.kl.points.rows(); ++i) {
    const double d = (w.frame.to_report(w.kl.points.row(i).transpose()) - c).norm();
    if (d < best) best = d, nearest = i;
  }
  const int sign = w.kl.sign[nearest];
  return {rel <= 0.05 && sign == 1 && seconds <= 60.0,
          fmt("max |mu_a - c| / span = %.4f (<= 0.05), sign at nearest test point %+.0f, %.1f s (<= 60)", rel, sign,
              seconds)};
}

Trajectory exponential(double rate, double dt, int n) {
  Trajectory t;
  t.states.resize(n, 2);
  t.dt = dt;
  t.assets = {"a", "b"};
  for (int i = 0; i < n; ++i) {
    t.states(i, 0) = std::exp(rate * i * dt);
    t.states(i, 1) = 0.5 * std::exp(rate * i * dt);
    t.times.push_back(i * dt);
  }
  return t;
}

Outcome lyapunov_correctness() {
  const auto c = lyapunov_exponents(exponential(-0.5, 0.01, 600), 0.01, 5);
  const auto d = lyapunov_exponents(exponential(0.3, 0.01, 600), 0.01, 5);
  const bool synth_ok = c.lambda_max >= -0.55 && c.lambda_max <= -0.45 && stability_verdict(c) == Stability::Stable &&
                        d.lambda_max >= 0.27 && d.lambda_max <= 0.33 && stability_verdict(d) == Stability::Unstable;
  const std::string detail = fmt("contracting lambda_max %.6f, diverging %.6f", c.lambda_max, d.lambda_max) + "; verdicts " +
           to_string(stability_verdict(c)) + "/" + to_string(stability_verdict(d));

  std::string why;
  const auto sep = real_window("2021-09-08T00:00:00Z", "2021-09-11T00:00:00Z", why);
  if (!sep) return {false, detail + "; Sep-2021 window: " + why};
  const auto norm = normalize_minmax(*sep);
  const auto r = lyapunov_exponents(norm, distance_percentile(norm, 5.0), default_stride(norm.dt));
  return {synth_ok && r.lambda_max < 0.0,
          detail + fmt("; Sep-2021 lambda_max %.4g (< 0)", r.lambda_max)};
}

Outcome gp_derivative_consistency() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 0.05);
  double worst_fd = 0.0, worst_trace = 0.0;
  const double h = 1e-4;
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index m = 1 + trial % 3;
    const Eigen::Index n = 20 + static_cast<Eigen::Index>(u(rng) * 81.0);
    Eigen::MatrixXd a = Eigen::MatrixXd::Random(m, m);
    a = a * a.transpose() + Eigen::MatrixXd::Identity(m, m);
    GradientObservations obs;
    obs.X.resize(n, m);
    obs.Y.resize(n, m);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index d = 0; d < m; ++d) obs.X(i, d) = u(rng);
      const Eigen::VectorXd x = obs.X.row(i).transpose();
      obs.Y.row(i) = (a * (x.array() - 0.5).matrix() + 0.3 * x.array().sin().matrix()).transpose();
      for (Eigen::Index d = 0; d < m; ++d) obs.Y(i, d) += noise(rng);
    }
    TrainOptions opts;
    opts.starts = 2;
    opts.seed = static_cast<std::uint64_t>(trial);
    const auto model = train(obs, opts);

    Eigen::MatrixXd pts(8, m);
    for (Eigen::Index i = 0; i < pts.rows(); ++i)
      for (Eigen::Index d = 0; d < m; ++d) pts(i, d) = u(rng);
    const auto f = posterior_field(model, pts);
    for (Eigen::Index q = 0; q < pts.rows(); ++q) {
      const auto& jac = f.jac_mean[static_cast<std::size_t>(q)];
      worst_trace = std::max(worst_trace, std::abs(f.lap_mean[q] - jac.trace()));
      for (Eigen::Index l = 0; l < m; ++l) {
        Eigen::MatrixXd up = pts.row(q), dn = pts.row(q);
        up(0, l) += h;
        dn(0, l) -= h;
        const Eigen::RowVectorXd fd =
            (posterior_gradient(model, up).mean - posterior_gradient(model, dn).mean) / (2.0 * h);
        for (Eigen::Index j = 0; j < m; ++j) worst_fd = std::max(worst_fd, std::abs(jac(j, l) - fd[j]));
      }
    }
  }
  return {worst_fd <= 1e-4 && worst_trace <= 1e-10,
          fmt("50 models: max |J - FD| = %.3g (<= 1e-4), max |lap - trace J| = %.3g (<= 1e-10)", worst_fd,
              worst_trace)};
}

Outcome closed_form_kl() {
  const double got[3] = {kl_divergence(0.0, 2.5, 2.5), kl_divergence(1.5, 0.7, 0.7), kl_divergence(0.0, 0.5, 1.0)};
  const double want[3] = {0.0, 1.5 * 1.5 / (2.0 * 0.7), 0.5 * (2.0 - 1.0 + std::log(1.0 / std::sqrt(2.0)))};
  double worst = 0.0;
  for (int i = 0; i < 3; ++i) worst = std::max(worst, std::abs(got[i] - want[i]));
  return {worst <= 1e-12, fmt("values %.15f %.15f %.15f, max error %.3g (<= 1e-12)", got[0], got[1], got[2], worst)};
}

Outcome weighted_moments() {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(-2.0, 2.0), w(0.0, 3.0);
  std::bernoulli_distribution coin(0.5);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index q = 1 + trial % 20, m = 1 + trial % 3;
    KLField f;
    f.points.resize(q, m);
    f.k_a = Eigen::VectorXd::Zero(q);
    f.k_r = Eigen::VectorXd::Zero(q);
    f.sign.resize(q);
    for (Eigen::Index i = 0; i < q; ++i) {
      for (Eigen::Index d = 0; d < m; ++d) f.points(i, d) = u(rng);
      const bool attract = i == 0 || coin(rng);
      (attract ? f.k_a : f.k_r)[i] = w(rng) + (i == 0 ? 0.5 : 0.0);
      f.sign[i] = attract ? 1 : -1;
    }
    f.kl = f.k_a + f.k_r;
    const auto s = attractor_moments(f, 0.0, 1.0);

    auto check = [&](const Eigen::VectorXd& k, const Eigen::VectorXd& mu_got, const Eigen::MatrixXd& cov_got) {
      double total = 0.0;
      Eigen::VectorXd mu = Eigen::VectorXd::Zero(m);
      for (Eigen::Index i = 0; i < q; ++i) {
        total += k[i];
        for (Eigen::Index d = 0; d < m; ++d) mu[d] += k[i] * f.points(i, d);
      }
      mu /= total;
      Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(m, m);
      for (Eigen::Index i = 0; i < q; ++i)
        for (Eigen::Index a = 0; a < m; ++a)
          for (Eigen::Index b = 0; b < m; ++b) cov(a, b) += k[i] * (f.points(i, a) - mu[a]) * (f.points(i, b) - mu[b]);
      cov /= total;
      worst = std::max({worst, (mu - mu_got).cwiseAbs().maxCoeff(), (cov - cov_got).cwiseAbs().maxCoeff()});
    };
    check(f.k_a, s.mu_a, s.sigma_a);
    if (f.k_r.sum() > 0.0) {
      if (!s.mu_r) return {false, "repeller moments missing on trial " + std::to_string(trial)};
      check(f.k_r, *s.mu_r, *s.sigma_r);
    }
  }
  return {worst <= 1e-12, fmt("100 instances, max deviation from brute force %.3g (<= 1e-12)", worst)};
}

std::vector<double> ar1(std::size_t n, std::uint64_t seed, double phi) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> e;
  std::vector<double> x(n);
  double v = 0.0;
  for (auto& xi : x) xi = v = phi * v + e(rng);
  return x;
}

std::vector<double> uniform_times(std::size_t n, double dt) {
  std::vector<double> t(n);
  for (std::size_t i = 0; i < n; ++i) t[i] = static_cast<double>(i) * dt;
  return t;
}

template <typename F>
void for_inside(const CoherenceMap& map, F&& f) {
  for (std::size_t s = 0; s < map.scales.size(); ++s)
    for (std::size_t i = 0; i < map.times.size(); ++i)
      if (map.inside_coi(s, i)) f(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(i));
}

Outcome coherence_sanity() {
  const auto x = ar1(512, 7, 0.7);
  const auto t = uniform_times(512, 300.0);
  double self_r2 = 1.0, self_phase = 0.0;
  const auto self = coherence(x, x, t);
  for_inside(self, [&](Eigen::Index s, Eigen::Index i) {
    self_r2 = std::min(self_r2, self.r2(s, i));
    self_phase = std::max(self_phase, std::abs(self.phase(s, i)));
  });

  std::vector<double> y(x.size());
  std::transform(x.begin(), x.end(), y.begin(), [](double v) { return -v; });
  const auto anti = coherence(x, y, t);
  double anti_dev = 0.0;
  for_inside(anti, [&](Eigen::Index s, Eigen::Index i) {
    anti_dev = std::max(anti_dev, std::abs(std::abs(anti.phase(s, i)) - std::numbers::pi));
  });

  std::vector<double> medians;
  for (std::uint64_t k = 0; k < 20; ++k) {
    const auto map = coherence(ar1(1024, 100 + 2 * k, 0.0), ar1(1024, 101 + 2 * k, 0.0), uniform_times(1024, 1.0));
    std::vector<double> vals;
    for_inside(map, [&](Eigen::Index s, Eigen::Index i) { vals.push_back(map.r2(s, i)); });
    std::nth_element(vals.begin(), vals.begin() + static_cast<std::ptrdiff_t>(vals.size() / 2), vals.end());
    medians.push_back(vals[vals.size() / 2]);
  }
  const double worst_median = *std::max_element(medians.begin(), medians.end());
  return {self_r2 >= 1.0 - 1e-6 && self_phase <= 1e-3 && anti_dev <= 1e-3 && worst_median < 0.5,
          fmt("self r2 min %.9f, self |phase| max %.2g, anti-phase |phase|-pi max %.2g, noise median r2 max %.3f",
              self_r2, self_phase, anti_dev, worst_median)};
}

Outcome table_reproduction() {
  std::string why;
  const auto apr = real_window("2021-04-13T00:00:00Z", "2021-05-10T00:00:00Z", why);
  if (!apr) return {false, "Apr-2021 window: " + why};
  PipelineSettings settings;
  settings.train.max_points = 600;
  const auto w = analyze_window(*apr, settings);
  const auto& t = w.trend;
  const double dir = t.direction_deg.value_or(std::nan(""));
  const bool ok = t.p_neg[0] >= 0.95 && t.p_pos[1] >= 0.95 && dir > 90.0 && dir < 180.0 && t.magnitude[0] < 0.0;
  return {ok, fmt("P(neg BTC) %.3f, P(pos ETH) %.3f, direction %.1f deg, BTC trend %.1f", t.p_neg[0], t.p_pos[1], dir,
                  t.magnitude[0])};
}

std::map<std::string, std::string> read_dir(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    std::ifstream in(e.path(), std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    files[e.path().filename().string()] = ss.str();
  }
  return files;
}

Outcome determinism() {
  auto spec = criterion1_spec();
  spec.steps = 300;
  const auto traj = simulate(spec, 5);
#ifdef POTFIELD_HAVE_APP
  const auto root = fs::temp_directory_path() / "potfield_acceptance_determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  write_trajectory_csv((root / "trajectory.csv").string(), traj);
  app::RunConfig cfg;
  cfg.trajectory = (root / "trajectory.csv").string();
  cfg.gp_starts = 4;
  app::cmd_analyze(cfg, root / "a");
  app::cmd_analyze(cfg, root / "b");
  const auto a = read_dir(root / "a");
  const auto b = read_dir(root / "b");
  std::size_t bytes = 0;
  for (const auto& [name, body] : a) bytes += body.size();
  return {!a.empty() && a == b,
          fmt("cmd_analyze twice: %.0f files, %.0f bytes, identical", static_cast<double>(a.size()),
              static_cast<double>(bytes)) + (a == b ? "" : " (MISMATCH)")};
#else
  PipelineSettings settings;
  settings.train.starts = 4;
  const auto a = analyze_window(traj, settings);
  const auto b = analyze_window(traj, settings);
  const auto dump = [&](const WindowAnalysis& w) {
    return kl_field_to_csv(w.kl, traj.assets) + field_to_csv(w.field, traj.assets) +
           ellipses_to_csv(ellipse_contours(w.summary));
  };
  const bool same = dump(a) == dump(b);
  return {same, same ? "analysis artifacts identical (CLI not built)" : "artifacts differ"};
#endif
}

Outcome energy_properties() {
  SynthSpec spec;
  QuadraticWell q;
  q.center = Eigen::Vector2d(0.5, -1.0);
  q.curvature.resize(2, 2);
  q.curvature << 4.0, 1.0, 1.0, 9.0;
  spec.potential = q;
  spec.x0 = Eigen::Vector2d(1.5, 0.0);
  spec.v0 = Eigen::Vector2d(-0.5, 1.0);
  spec.dt = 0.005;
  spec.steps = 10001;

  const auto cons = simulate_phase(spec, 1);
  const double e0 = total_energy(spec, spec.x0, spec.v0);
  double drift = 0.0;
  for (Eigen::Index n = 0; n < cons.positions.size(); ++n) {
    const double e = total_energy(spec, cons.positions.states.row(n).transpose(), cons.velocities.row(n).transpose());
    drift = std::max(drift, std::abs(e - e0) / e0);
  }

  spec.gamma = 0.4;
  const auto damp = simulate_phase(spec, 1);
  std::size_t increases = 0;
  double prev = e0;
  for (Eigen::Index n = 1; n < damp.positions.size(); ++n) {
    const double e = total_energy(spec, damp.positions.states.row(n).transpose(), damp.velocities.row(n).transpose());
    if (e > prev) ++increases;
    prev = e;
  }
  return {drift <= 1e-8 && increases == 0,
          fmt("gamma=0 max relative drift %.3g over 1e4 steps (<= 1e-8); gamma=0.4 energy increases: %.0f", drift,
              static_cast<double>(increases))};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"1 quadratic-well attractor recovery", attractor_recovery},
      {"2 Lyapunov correctness", lyapunov_correctness},
      {"3 GP derivative consistency", gp_derivative_consistency},
      {"4 closed-form KL", closed_form_kl},
      {"5 weighted-moment oracle", weighted_moments},
      {"6 coherence sanity", coherence_sanity},
      {"7 paper-table qualitative reproduction", table_reproduction},
      {"8 determinism", determinism},
      {"9 energy properties", energy_properties},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s  %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
