#include "potfield/attractor.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "potfield/csv.hpp"
#include "potfield/error.hpp"

namespace potfield {
namespace {

constexpr double kVarianceFloor = 1e-12;

struct Weighted {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

Weighted weighted_moments(const Eigen::MatrixXd& pts, const Eigen::VectorXd& w) {
  const double total = w.sum();
  Weighted out;
  out.mean = (pts.transpose() * w) / total;
  const Eigen::MatrixXd centered = pts.rowwise() - out.mean.transpose();
  out.cov = (centered.transpose() * w.asDiagonal() * centered) / total;
  out.cov = 0.5 * (out.cov + out.cov.transpose());
  return out;
}

void fix_sign(Eigen::Ref<Eigen::VectorXd> v) {
  Eigen::Index idx = 0;
  v.cwiseAbs().maxCoeff(&idx);
  if (v[idx] < 0.0) v = -v;
}

double wrap_degrees(double deg, double period) {
  double r = std::fmod(deg, period);
  if (r < 0.0) r += period;
  if (r >= period) r -= period;
  return r;
}

}  // namespace

double kl_divergence(double mu_po, double var_po, double var_pr) {
  if (!(var_po > 0.0) || !(var_pr > 0.0)) {
    throw Error(ErrorCode::NonPositiveVariance, "KL divergence needs positive variances");
  }
  const double value = 0.5 * (var_pr / var_po + mu_po * mu_po / var_po - 1.0 + 0.5 * std::log(var_po / var_pr));
  return std::max(0.0, value);
}

KLField build_kl_field(const FieldPosterior& field, double prior_var) {
  const Eigen::Index q = field.points.rows();
  KLField out;
  out.points = field.points;
  out.kl.resize(q);
  out.sign.resize(q);
  out.k_a.setZero(q);
  out.k_r.setZero(q);
  for (Eigen::Index i = 0; i < q; ++i) {
    const double var_po = std::max(field.lap_var[i], kVarianceFloor);
    out.kl[i] = kl_divergence(field.lap_mean[i], var_po, prior_var);
    out.sign[i] = field.lap_mean[i] >= 0.0 ? 1 : -1;
    (out.sign[i] > 0 ? out.k_a : out.k_r)[i] = out.kl[i];
  }
  return out;
}

AxisFrame AxisFrame::of(const Trajectory& traj) {
  AxisFrame f;
  if (traj.norm) {
    f.ranges = *traj.norm;
    f.normalized = true;
    return f;
  }
  for (Eigen::Index c = 0; c < traj.dim(); ++c) {
    f.ranges.push_back({traj.states.col(c).minCoeff(), traj.states.col(c).maxCoeff()});
  }
  return f;
}

Eigen::VectorXd AxisFrame::unit_scale() const {
  Eigen::VectorXd s = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(ranges.size()));
  if (!normalized) {
    for (std::size_t i = 0; i < ranges.size(); ++i) {
      if (ranges[i].span() > 0.0) s[static_cast<Eigen::Index>(i)] = ranges[i].span();
    }
  }
  return s;
}

Eigen::VectorXd AxisFrame::report_scale() const {
  Eigen::VectorXd s = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(ranges.size()));
  if (normalized) {
    for (std::size_t i = 0; i < ranges.size(); ++i) s[static_cast<Eigen::Index>(i)] = ranges[i].span();
  }
  return s;
}

Eigen::VectorXd AxisFrame::to_report(const Eigen::VectorXd& x) const {
  if (!normalized) return x;
  Eigen::VectorXd out = x;
  for (std::size_t i = 0; i < ranges.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    out[k] = ranges[i].min + x[k] * ranges[i].span();
  }
  return out;
}

AttractorSummary attractor_moments(const KLField& klf, double window_start, double window_end,
                                   const Eigen::VectorXd& unit_scale) {
  const Eigen::Index m = klf.points.cols();
  AttractorSummary s;
  s.window_start = window_start;
  s.window_end = window_end;
  s.attractor_mass = klf.k_a.sum();
  s.repeller_mass = klf.k_r.sum();
  if (!(s.attractor_mass > 0.0)) {
    throw Error(ErrorCode::NoAttractorMass, "no test point carries positive-Laplacian KL mass");
  }
  auto a = weighted_moments(klf.points, klf.k_a);
  s.mu_a = std::move(a.mean);
  s.sigma_a = std::move(a.cov);
  if (s.repeller_mass > 0.0) {
    auto r = weighted_moments(klf.points, klf.k_r);
    s.mu_r = std::move(r.mean);
    s.sigma_r = std::move(r.cov);
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s.sigma_a);
  s.eigvals = eig.eigenvalues().reverse().cwiseMax(0.0);
  s.eigvecs = eig.eigenvectors().rowwise().reverse();
  for (Eigen::Index c = 0; c < m; ++c) fix_sign(s.eigvecs.col(c));

  const Eigen::VectorXd scale = unit_scale.size() == m ? unit_scale : Eigen::VectorXd::Ones(m);
  const Eigen::MatrixXd unit_cov = scale.cwiseInverse().asDiagonal() * s.sigma_a * scale.cwiseInverse().asDiagonal();
  const double det = std::max(0.0, unit_cov.determinant());
  s.sigma_a_scalar = std::pow(det, 1.0 / (2.0 * static_cast<double>(m)));
  return s;
}

TrendReport trend_report(const AttractorSummary& summary, const Eigen::VectorXd& x0, const AxisFrame& frame) {
  const Eigen::Index m = summary.mu_a.size();
  if (x0.size() != m) throw Error(ErrorCode::InvalidArgument, "x0 dimension does not match the attractor");
  TrendReport t;
  t.x0 = x0;
  const Eigen::VectorXd delta = summary.mu_a - x0;
  const Eigen::VectorXd report = frame.ranges.size() == static_cast<std::size_t>(m) ? frame.report_scale()
                                                                                     : Eigen::VectorXd::Ones(m);
  const Eigen::VectorXd unit = frame.ranges.size() == static_cast<std::size_t>(m) ? frame.unit_scale()
                                                                                   : Eigen::VectorXd::Ones(m);
  t.magnitude = delta.cwiseProduct(report);
  if (m >= 2) {
    const double dx = delta[0] / unit[0];
    const double dy = delta[1] / unit[1];
    t.direction_deg = wrap_degrees(std::atan2(dy, dx) * 180.0 / std::numbers::pi, 360.0);
  }
  t.p_pos.resize(m);
  t.p_neg.resize(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    const double sd = std::sqrt(std::max(0.0, summary.sigma_a(j, j)));
    double p = 0.5;
    if (sd > 0.0) {
      const double z = (x0[j] - summary.mu_a[j]) / sd;
      p = 0.5 * std::erfc(z / std::numbers::sqrt2);
    } else if (summary.mu_a[j] > x0[j]) {
      p = 1.0;
    } else if (summary.mu_a[j] < x0[j]) {
      p = 0.0;
    }
    t.p_pos[j] = p;
    t.p_neg[j] = 1.0 - p;
  }
  return t;
}

PrincipalAxes principal_axes(const AttractorSummary& summary) {
  PrincipalAxes out;
  const Eigen::Index m = summary.eigvals.size();
  out.eigval_max = summary.eigvals[0];
  out.eigvec_max = summary.eigvecs.col(0);
  if (m < 2) return out;
  const double top = summary.eigvals[0];
  if (top - summary.eigvals[1] <= 1e-9 * std::abs(top)) {
    throw Error(ErrorCode::DegenerateSpectrum, "leading eigenvalues coincide; principal orientation undefined");
  }
  for (Eigen::Index j = 0; j < m; ++j) {
    for (Eigen::Index k = j + 1; k < m; ++k) {
      const double deg = std::atan2(out.eigvec_max[k], out.eigvec_max[j]) * 180.0 / std::numbers::pi;
      out.phases.push_back({j, k, wrap_degrees(deg, 180.0)});
    }
  }
  return out;
}

ConvergenceReport convergence_windows(const Trajectory& traj, const AttractorSummary& summary,
                                      const AxisFrame& frame, int grace, double radius) {
  ConvergenceReport rep;
  rep.radius = radius < 0.0 ? summary.sigma_a_scalar : radius;
  const Eigen::Index n = traj.size();
  const Eigen::VectorXd scale = frame.ranges.size() == static_cast<std::size_t>(traj.dim())
                                    ? frame.unit_scale()
                                    : Eigen::VectorXd::Ones(traj.dim());
  rep.distances.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    rep.distances[i] = ((traj.states.row(i).transpose() - summary.mu_a).array() / scale.array()).matrix().norm();
  }

  Eigen::Index i = 0;
  while (i < n) {
    if (rep.distances[i] > rep.radius) {
      ++i;
      continue;
    }
    Eigen::Index end = i;
    while (end + 1 < n && rep.distances[end + 1] <= rep.radius) ++end;
    if (!rep.intervals.empty()) {
      auto& last = rep.intervals.back();
      if (i - last.end_index - 1 <= grace) {
        last.end_index = end;
        i = end + 1;
        continue;
      }
    }
    rep.intervals.push_back({i, end, 0.0, 0.0});
    i = end + 1;
  }
  for (auto& iv : rep.intervals) {
    iv.onset_time = traj.times[static_cast<std::size_t>(iv.onset_index)];
    iv.end_time = traj.times[static_cast<std::size_t>(iv.end_index)];
  }
  for (std::size_t k = 0; k < rep.intervals.size(); ++k) {
    if (!rep.longest || rep.intervals[k].duration() > rep.intervals[*rep.longest].duration()) rep.longest = k;
  }
  return rep;
}

std::vector<EllipseContour> ellipse_contours(const AttractorSummary& summary, const std::vector<double>& levels,
                                             int points) {
  std::vector<EllipseContour> out;
  if (summary.mu_a.size() < 2 || points < 3) return out;
  const Eigen::Matrix2d cov = summary.sigma_a.topLeftCorner(2, 2);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(cov);
  const Eigen::Vector2d radii = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const Eigen::Matrix2d basis = eig.eigenvectors();
  const Eigen::Vector2d centre = summary.mu_a.head(2);
  for (double level : levels) {
    EllipseContour c;
    c.level = level;
    c.points.resize(points + 1, 2);
    for (int k = 0; k <= points; ++k) {
      const double t = 2.0 * std::numbers::pi * (k % points) / points;
      const Eigen::Vector2d local(level * radii[0] * std::cos(t), level * radii[1] * std::sin(t));
      c.points.row(k) = (centre + basis * local).transpose();
    }
    out.push_back(std::move(c));
  }
  return out;
}

std::string kl_field_to_csv(const KLField& klf, const std::vector<std::string>& labels) {
  std::ostringstream out;
  const Eigen::Index m = klf.points.cols();
  for (Eigen::Index c = 0; c < m; ++c) {
    out << (c ? "," : "") << "x_"
        << (c < static_cast<Eigen::Index>(labels.size()) ? labels[static_cast<std::size_t>(c)] : std::to_string(c));
  }
  out << ",kl,sign\n";
  for (Eigen::Index r = 0; r < klf.points.rows(); ++r) {
    for (Eigen::Index c = 0; c < m; ++c) out << (c ? "," : "") << csv::format(klf.points(r, c));
    out << ',' << csv::format(klf.kl[r]) << ',' << klf.sign[r] << '\n';
  }
  return out.str();
}

std::string ellipses_to_csv(const std::vector<EllipseContour>& contours) {
  std::ostringstream out;
  out << "level,index,x,y\n";
  for (const auto& c : contours) {
    for (Eigen::Index k = 0; k < c.points.rows(); ++k) {
      out << csv::format(c.level) << ',' << k << ',' << csv::format(c.points(k, 0)) << ','
          << csv::format(c.points(k, 1)) << '\n';
    }
  }
  return out.str();
}

}  // namespace potfield
