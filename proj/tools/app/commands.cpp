#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <vector>

#include "potfield/attractor.hpp"
#include "potfield/csv.hpp"
#include "potfield/error.hpp"
#include "potfield/gp_field.hpp"
#include "potfield/lyapunov.hpp"
#include "potfield/pipeline.hpp"
#include "potfield/synth.hpp"
#include "potfield/time_util.hpp"
#include "potfield/wavelet.hpp"

namespace potfield::app {
namespace {

using Json = nlohmann::ordered_json;

void write_text(const std::filesystem::path& path, const std::string& text) {
  csv::write_file(path.string(), text);
}

void write_json(const std::filesystem::path& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

void prepare(const std::filesystem::path& out) {
  std::error_code ec;
  std::filesystem::create_directories(out, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create output directory '" + out.string() + "': " + ec.message());
}

void echo_config(const RunConfig& cfg, const std::filesystem::path& out, const char* command) {
  auto j = to_json(cfg);
  j["command"] = command;
  write_json(out / "resolved_config.json", j);
}

Json vec(const Eigen::VectorXd& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Json mat(const Eigen::MatrixXd& m) {
  Json a = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) a.push_back(vec(m.row(r).transpose()));
  return a;
}

Json per_asset(const std::vector<std::string>& assets, const Eigen::VectorXd& v) {
  Json o = Json::object();
  for (std::size_t i = 0; i < assets.size(); ++i) o[assets[i]] = v[static_cast<Eigen::Index>(i)];
  return o;
}

Json window_json(double start, double end) {
  return Json{{"start", format_iso8601(static_cast<UnixSeconds>(std::floor(start)))},
              {"end", format_iso8601(static_cast<UnixSeconds>(std::floor(end)))},
              {"start_seconds", start},
              {"end_seconds", end}};
}

Eigen::MatrixXd to_report_cov(const Eigen::MatrixXd& sigma, const AxisFrame& frame) {
  const Eigen::VectorXd s = frame.report_scale();
  return s.asDiagonal() * sigma * s.asDiagonal();
}

}  // namespace

int cmd_lyapunov(const RunConfig& cfg, const std::filesystem::path& out) {
  validate(cfg);
  Trajectory traj = load_trajectory(cfg);
  if (cfg.normalize) traj = normalize_minmax(traj);

  double epsilon = cfg.lyapunov_epsilon;
  if (epsilon <= 0.0) epsilon = distance_percentile(traj, cfg.lyapunov_epsilon_percentile);
  if (!(epsilon > 0.0)) throw Error(ErrorCode::DegenerateRange, "all states coincide; epsilon would be 0");

  int k = cfg.lyapunov_k;
  if (k <= 0) {
    // An hour of samples can exceed a short synthetic run; cap at a tenth of it.
    const int cap = std::max<int>(1, static_cast<int>((traj.size() - 1) / 10));
    k = std::min(default_stride(traj.dt), cap);
  }

  const auto res = lyapunov_exponents(traj, epsilon, k);
  prepare(out);
  echo_config(cfg, out, "lyapunov");

  std::string rows = "index,lambda\n";
  for (std::size_t i = 0; i < res.exponents.size(); ++i) {
    rows += std::to_string(i) + "," + csv::format(res.exponents[i]) + "\n";
  }
  write_text(out / "exponents.csv", rows);

  Json v;
  v["schema_version"] = "1";
  v["lambda_max"] = res.lambda_max;
  v["verdict"] = to_string(stability_verdict(res));
  v["pair_count"] = res.pair_count;
  v["skipped_pairs"] = res.skipped_pairs;
  v["epsilon"] = epsilon;
  v["k"] = k;
  v["dt"] = traj.dt;
  v["samples"] = traj.size();
  write_json(out / "verdict.json", v);
  return kExitOk;
}

int cmd_analyze(const RunConfig& cfg, const std::filesystem::path& out) {
  validate(cfg);
  const Trajectory traj = load_trajectory(cfg);
  const auto settings = cfg.pipeline();
  const WindowAnalysis w = analyze_window(traj, settings);
  const auto& s = w.summary;
  const auto& assets = traj.assets;

  Json r;
  r["schema_version"] = "1";
  r["window"] = window_json(traj.times.front(), traj.times.back());
  r["assets"] = assets;
  r["samples"] = traj.size();
  r["coordinates"] = w.frame.normalized ? "normalized" : "raw";

  Json hp;
  hp["sigma_se"] = w.model.params.sigma_se;
  hp["lambdas"] = vec(w.model.params.lambdas);
  hp["noise_var"] = w.model.params.noise_var;
  hp["log_marginal_likelihood"] = w.model.log_marginal_likelihood;
  hp["jitter"] = w.model.jitter;
  hp["training_points"] = w.model.X.rows();
  r["hyperparameters"] = hp;
  r["kl_prior_var"] = w.kl_prior_var;

  Json a;
  a["mu_a"] = per_asset(assets, w.frame.to_report(s.mu_a));
  a["sigma_a"] = mat(to_report_cov(s.sigma_a, w.frame));
  a["sigma_a_scalar"] = s.sigma_a_scalar;
  a["eigenvalues"] = vec(s.eigvals);
  a["eigenvectors"] = mat(s.eigvecs);
  a["mass"] = s.attractor_mass;
  r["attractor"] = a;

  if (s.mu_r) {
    Json rep;
    rep["mu_r"] = per_asset(assets, w.frame.to_report(*s.mu_r));
    rep["sigma_r"] = mat(to_report_cov(*s.sigma_r, w.frame));
    rep["mass"] = s.repeller_mass;
    r["repeller"] = rep;
  } else {
    r["repeller"] = nullptr;
  }

  Json t;
  t["x0"] = per_asset(assets, w.frame.to_report(w.trend.x0));
  t["magnitude"] = per_asset(assets, w.trend.magnitude);
  t["direction_deg"] = w.trend.direction_deg ? Json(*w.trend.direction_deg) : Json(nullptr);
  t["p_pos"] = per_asset(assets, w.trend.p_pos);
  t["p_neg"] = per_asset(assets, w.trend.p_neg);
  r["trend"] = t;

  if (w.axes) {
    Json pa;
    pa["eigval_max"] = w.axes->eigval_max;
    pa["eigvec_max"] = vec(w.axes->eigvec_max);
    Json phases = Json::array();
    for (const auto& p : w.axes->phases) {
      phases.push_back(Json{{"axis", assets[static_cast<std::size_t>(p.axis)]},
                            {"other", assets[static_cast<std::size_t>(p.other)]},
                            {"degrees", p.degrees}});
    }
    pa["phases"] = phases;
    r["principal_axes"] = pa;
  } else {
    r["principal_axes"] = nullptr;
  }

  Json conv;
  conv["radius"] = w.convergence.radius;
  Json intervals = Json::array();
  for (const auto& iv : w.convergence.intervals) {
    intervals.push_back(Json{{"onset_index", iv.onset_index},
                             {"end_index", iv.end_index},
                             {"onset_time", iv.onset_time},
                             {"end_time", iv.end_time},
                             {"duration", iv.duration()}});
  }
  conv["intervals"] = intervals;
  conv["longest"] = w.convergence.longest ? Json(*w.convergence.longest) : Json(nullptr);
  r["convergence"] = conv;

  Json diag;
  diag["test_points"] = w.field.points.rows();
  diag["attractor_points"] = (w.kl.sign.array() > 0).count();
  diag["max_asymmetry"] = w.field.asymmetry.size() ? w.field.asymmetry.maxCoeff() : 0.0;
  diag["prior_lap_var"] = w.field.prior_lap_var;
  r["diagnostics"] = diag;

  prepare(out);
  echo_config(cfg, out, "analyze");
  write_json(out / "report.json", r);
  write_text(out / "kl_field.csv", kl_field_to_csv(w.kl, assets));
  write_text(out / "field.csv", field_to_csv(w.field, assets));
  write_text(out / "ellipses.csv", ellipses_to_csv(ellipse_contours(s)));
  return kExitOk;
}

int cmd_evolve(const RunConfig& cfg, const std::filesystem::path& out) {
  validate(cfg);
  const Trajectory traj = load_trajectory(cfg);
  const Evolution evo = temporal_evolution(traj, cfg.subwindow, cfg.pipeline());

  prepare(out);
  echo_config(cfg, out, "evolve");
  write_text(out / "evolution.csv", evolution_to_csv(evo));
  for (const auto& asset : evo.assets) {
    write_text(out / ("features_" + asset + ".csv"), features_to_csv(export_features(evo, asset)));
  }

  std::size_t ok = 0;
  bool numerical = false;
  for (const auto& e : evo.entries) {
    if (e.ok) {
      ++ok;
    } else {
      std::cerr << "window " << csv::format(e.start) << ".." << csv::format(e.end) << ": " << e.error << '\n';
      if (e.error_code && is_numerical(*e.error_code)) numerical = true;
    }
  }
  if (!evo.entries.empty() && 2 * ok >= evo.entries.size()) return kExitOk;
  std::cerr << "error: " << ok << " of " << evo.entries.size() << " subwindows succeeded\n";
  return numerical ? kExitNumerical : kExitData;
}

int cmd_coherence(const RunConfig& cfg, const std::filesystem::path& out) {
  validate(cfg);
  const std::size_t selected = cfg.assets.empty() ? (cfg.trajectory.empty() ? cfg.inputs.size() : 0) : cfg.assets.size();
  if (selected != 0 && selected != 2) {
    throw Error(ErrorCode::InvalidArgument, "coherence needs exactly two assets, got " + std::to_string(selected));
  }
  const Trajectory traj = load_trajectory(cfg);
  if (traj.dim() != 2) {
    throw Error(ErrorCode::InvalidArgument, "coherence needs exactly two assets, got " + std::to_string(traj.dim()));
  }
  const std::vector<double> x(traj.states.col(0).data(), traj.states.col(0).data() + traj.size());
  const std::vector<double> y(traj.states.col(1).data(), traj.states.col(1).data() + traj.size());
  const auto map = coherence(x, y, traj.times, {}, cfg.coherence());

  prepare(out);
  echo_config(cfg, out, "coherence");
  write_text(out / "coherence.csv", coherence_to_csv(map));
  return kExitOk;
}

int cmd_synth(const std::filesystem::path& spec_file, std::uint64_t seed, const std::filesystem::path& out) {
  const SynthSpec spec = read_synth_spec(spec_file.string());
  const Trajectory traj = simulate(spec, seed);

  Json j;
  j["schema_version"] = "1";
  j["command"] = "synth";
  j["seed"] = seed;
  std::visit(
      [&](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, QuadraticWell>) {
          j["potential"] = "quadratic";
          j["center"] = vec(p.center);
          j["curvature"] = mat(p.curvature);
          j["center_velocity"] = p.center_velocity.size() ? vec(p.center_velocity) : Json::array();
        } else {
          j["potential"] = "double_well";
          j["center"] = p.center;
          j["width"] = p.width;
          j["height"] = p.height;
        }
      },
      spec.potential);
  j["gamma"] = spec.gamma;
  j["noise_std"] = spec.noise_std;
  j["x0"] = vec(spec.x0);
  j["v0"] = vec(spec.v0);
  j["dt"] = spec.dt;
  j["t0"] = spec.t0;
  j["steps"] = spec.steps;
  j["assets"] = traj.assets;

  prepare(out);
  write_json(out / "resolved_config.json", j);
  write_trajectory_csv((out / "trajectory.csv").string(), traj);
  return kExitOk;
}

}  // namespace potfield::app
