#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>

#include "potfield/csv.hpp"
#include "potfield/error.hpp"
#include "potfield/pipeline.hpp"

namespace potfield {

WindowAnalysis analyze_window(const Trajectory& traj, const PipelineSettings& settings) {
  WindowAnalysis w;
  w.working = settings.normalize ? normalize_minmax(traj) : traj;
  w.frame = AxisFrame::of(w.working);

  const auto obs = estimate_gradient_observations(w.working);
  w.model = train(obs, settings.train);
  const Eigen::MatrixXd grid = make_test_grid(w.working.states, settings.grid);
  w.field = posterior_field(w.model, grid);
  w.kl_prior_var = settings.kl_prior_var > 0.0 ? settings.kl_prior_var : w.field.prior_lap_var;
  w.kl = build_kl_field(w.field, w.kl_prior_var);
  w.summary = attractor_moments(w.kl, w.working.times.front(), w.working.times.back(), w.frame.unit_scale());
  w.trend = trend_report(w.summary, w.working.states.row(0).transpose(), w.frame);
  try {
    w.axes = principal_axes(w.summary);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::DegenerateSpectrum) throw;
  }
  w.convergence = convergence_windows(w.working, w.summary, w.frame, settings.convergence_grace);
  return w;
}

Evolution temporal_evolution(const Trajectory& traj, double subwindow_seconds, const PipelineSettings& settings) {
  if (!(subwindow_seconds > 0.0)) throw Error(ErrorCode::InvalidArgument, "subwindow must be positive");
  if (subwindow_seconds < 3.0 * traj.dt) {
    throw Error(ErrorCode::InvalidArgument, "subwindow shorter than 3 samples");
  }
  Evolution evo;
  evo.assets = traj.assets;
  const Eigen::Index n = traj.size();
  const double t0 = traj.times.front();
  // subwindow k covers [t0 + k*D, t0 + (k+1)*D); the epsilon absorbs roundoff in synthetic times
  const double eps = 1e-9 * traj.dt;
  Eigen::Index begin = 0;
  for (std::int64_t k = 0; begin < n; ++k) {
    const double lo = t0 + static_cast<double>(k) * subwindow_seconds;
    const double hi = lo + subwindow_seconds;
    Eigen::Index end = begin;
    while (end < n && traj.times[static_cast<std::size_t>(end)] < hi - eps) ++end;
    if (end - begin < 3) {
      if (end >= n) break;
      if (end == begin) {
        continue;  // empty slot; only possible with gaps in time
      }
    }
    EvolutionEntry e;
    e.start = lo;
    e.end = hi;
    try {
      if (end - begin < 3) throw Error(ErrorCode::TooShort, "subwindow has fewer than 3 samples");
      const auto sub = traj.slice(begin, end);
      const auto w = analyze_window(sub, settings);
      e.mu_a = w.frame.to_report(w.summary.mu_a);
      e.sd = w.summary.sigma_a.diagonal().cwiseMax(0.0).cwiseSqrt().cwiseProduct(w.frame.report_scale());
      e.summary = w.summary;
      e.ok = true;
    } catch (const Error& err) {
      e.error_code = err.code();
      e.error = err.what();
    }
    evo.entries.push_back(std::move(e));
    begin = end;
  }
  return evo;
}

std::string evolution_to_csv(const Evolution& evo) {
  std::ostringstream out;
  out << "date";
  for (const auto& a : evo.assets) out << ",mu_a_" << a;
  for (const auto& a : evo.assets) out << ",sd_" << a;
  out << '\n';
  for (const auto& e : evo.entries) {
    out << format_iso8601(static_cast<UnixSeconds>(std::floor(e.start)));
    for (std::size_t j = 0; j < evo.assets.size(); ++j) {
      out << ',' << (e.ok ? csv::format(e.mu_a[static_cast<Eigen::Index>(j)]) : "");
    }
    for (std::size_t j = 0; j < evo.assets.size(); ++j) {
      out << ',' << (e.ok ? csv::format(e.sd[static_cast<Eigen::Index>(j)]) : "");
    }
    out << '\n';
  }
  return out.str();
}

std::vector<FeatureRow> export_features(const Evolution& evo, const std::string& asset) {
  const auto it = std::find(evo.assets.begin(), evo.assets.end(), asset);
  if (it == evo.assets.end()) throw Error(ErrorCode::UnknownAsset, "asset '" + asset + "' not in evolution");
  const auto j = static_cast<Eigen::Index>(it - evo.assets.begin());
  std::vector<FeatureRow> rows;
  for (const auto& e : evo.entries) {
    FeatureRow r;
    r.date = format_iso8601(static_cast<UnixSeconds>(std::floor(e.start)));
    if (e.ok) {
      r.value = e.mu_a[j];
      r.sd = e.sd[j];
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string features_to_csv(const std::vector<FeatureRow>& rows) {
  std::ostringstream out;
  out << "date,mu_a,sd\n";
  for (const auto& r : rows) {
    out << r.date << ',' << (r.value ? csv::format(*r.value) : "") << ',' << (r.sd ? csv::format(*r.sd) : "")
        << '\n';
  }
  return out.str();
}

std::vector<FeatureRow> parse_features_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<FeatureRow> rows;
  bool header = true;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (header) {
      header = false;
      continue;
    }
    if (csv::trim(line).empty()) continue;
    const auto f = csv::split(line);
    if (f.size() != 3) {
      throw Error(ErrorCode::UnparsableRow, "line " + std::to_string(line_no) + ": expected 3 fields");
    }
    FeatureRow r;
    r.date = f[0];
    r.value = csv::parse_double(f[1]);
    r.sd = csv::parse_double(f[2]);
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace potfield
