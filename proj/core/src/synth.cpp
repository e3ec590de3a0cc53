#include "potfield/synth.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <sstream>

#include "potfield/csv.hpp"
#include "potfield/error.hpp"

namespace potfield {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

Eigen::VectorXd well_center(const QuadraticWell& q, double t) {
  if (q.center_velocity.size() == 0) return q.center;
  return q.center + q.center_velocity * t;
}

double max_curvature(const SynthSpec& spec) {
  return std::visit(Overloaded{
                        [](const QuadraticWell& q) {
                          Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(q.curvature, Eigen::EigenvaluesOnly);
                          return es.eigenvalues().maxCoeff();
                        },
                        // phi'' at the minima.
                        [](const DoubleWell& d) { return 8.0 * d.height / (d.width * d.width); },
                    },
                    spec.potential);
}

Eigen::VectorXd parse_vector(const std::string& key, const std::string& text) {
  const auto parts = csv::split(text);
  Eigen::VectorXd v(static_cast<Eigen::Index>(parts.size()));
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const auto d = csv::parse_double(csv::trim(parts[i]));
    if (!d) throw Error(ErrorCode::InvalidArgument, "bad number in '" + key + "'");
    v[static_cast<Eigen::Index>(i)] = *d;
  }
  return v;
}

Eigen::MatrixXd parse_matrix(const std::string& key, const std::string& text) {
  std::vector<Eigen::VectorXd> rows;
  std::stringstream ss(text);
  std::string row;
  while (std::getline(ss, row, ';')) rows.push_back(parse_vector(key, row));
  const auto n = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    if (rows[static_cast<std::size_t>(r)].size() != n) {
      throw Error(ErrorCode::InvalidArgument, "'" + key + "' must be square");
    }
    m.row(r) = rows[static_cast<std::size_t>(r)].transpose();
  }
  return m;
}

double parse_scalar(const std::string& key, const std::string& text) {
  const auto d = csv::parse_double(csv::trim(text));
  if (!d) throw Error(ErrorCode::InvalidArgument, "bad number for '" + key + "'");
  return *d;
}

}  // namespace

Eigen::Index SynthSpec::dim() const { return x0.size(); }

void SynthSpec::validate() const {
  const auto m = dim();
  if (m == 0) throw Error(ErrorCode::InvalidArgument, "x0 is empty");
  if (v0.size() != m) throw Error(ErrorCode::InvalidArgument, "v0 and x0 differ in length");
  if (!x0.allFinite() || !v0.allFinite()) throw Error(ErrorCode::InvalidArgument, "initial state is not finite");
  if (!(gamma >= 0.0)) throw Error(ErrorCode::InvalidArgument, "gamma must be >= 0");
  if (!(noise_std >= 0.0)) throw Error(ErrorCode::InvalidArgument, "noise_std must be >= 0");
  if (!(dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "dt must be positive");
  if (steps < 1) throw Error(ErrorCode::InvalidArgument, "steps must be >= 1");
  if (!assets.empty() && static_cast<Eigen::Index>(assets.size()) != m) {
    throw Error(ErrorCode::InvalidArgument, "assets and x0 differ in length");
  }

  std::visit(Overloaded{
                 [m](const QuadraticWell& q) {
                   if (q.center.size() != m || q.curvature.rows() != m || q.curvature.cols() != m) {
                     throw Error(ErrorCode::InvalidArgument, "quadratic well shape does not match x0");
                   }
                   if (q.center_velocity.size() != 0 && q.center_velocity.size() != m) {
                     throw Error(ErrorCode::InvalidArgument, "center_velocity shape does not match x0");
                   }
                   const double scale = std::max(1.0, q.curvature.cwiseAbs().maxCoeff());
                   if ((q.curvature - q.curvature.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
                     throw Error(ErrorCode::InvalidArgument, "curvature is not symmetric");
                   }
                   Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(q.curvature, Eigen::EigenvaluesOnly);
                   if (!(es.eigenvalues().minCoeff() > 0.0)) {
                     throw Error(ErrorCode::InvalidArgument, "curvature is not positive definite");
                   }
                 },
                 [m](const DoubleWell& d) {
                   if (m != 1) throw Error(ErrorCode::InvalidArgument, "double well is one-dimensional");
                   if (!(d.width > 0.0) || !(d.height > 0.0)) {
                     throw Error(ErrorCode::InvalidArgument, "double well needs positive width and height");
                   }
                 },
             },
             potential);

  if (!(dt * std::sqrt(max_curvature(*this)) < 0.1)) {
    throw Error(ErrorCode::UnstableStep, "dt * sqrt(max curvature) must be below 0.1");
  }
}

double potential(const SynthSpec& spec, const Eigen::VectorXd& x, double t) {
  return std::visit(Overloaded{
                        [&](const QuadraticWell& q) {
                          const Eigen::VectorXd d = x - well_center(q, t);
                          return 0.5 * d.dot(q.curvature * d);
                        },
                        [&](const DoubleWell& w) {
                          const double u = (x[0] - w.center) / w.width;
                          return w.height * (u * u - 1.0) * (u * u - 1.0);
                        },
                    },
                    spec.potential);
}

Eigen::VectorXd analytic_gradient(const SynthSpec& spec, const Eigen::VectorXd& x, double t) {
  return std::visit(Overloaded{
                        [&](const QuadraticWell& q) -> Eigen::VectorXd { return q.curvature * (x - well_center(q, t)); },
                        [&](const DoubleWell& w) -> Eigen::VectorXd {
                          const double u = (x[0] - w.center) / w.width;
                          return Eigen::VectorXd::Constant(1, 4.0 * w.height * (u * u - 1.0) * u / w.width);
                        },
                    },
                    spec.potential);
}

double total_energy(const SynthSpec& spec, const Eigen::VectorXd& x, const Eigen::VectorXd& v, double t) {
  return 0.5 * v.squaredNorm() + potential(spec, x, t);
}

PhaseTrajectory simulate_phase(const SynthSpec& spec, std::uint64_t seed) {
  spec.validate();
  const auto m = spec.dim();
  const auto n = static_cast<Eigen::Index>(spec.steps);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;

  auto accel = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& v, double t, const Eigen::VectorXd& kick) {
    Eigen::VectorXd a = -analytic_gradient(spec, x, t) - spec.gamma * v + kick;
    return a;
  };

  PhaseTrajectory out;
  auto& traj = out.positions;
  traj.states.resize(n, m);
  traj.times.resize(static_cast<std::size_t>(n));
  traj.dt = spec.dt;
  out.velocities.resize(n, m);
  if (spec.assets.empty()) {
    for (Eigen::Index j = 0; j < m; ++j) traj.assets.push_back("x" + std::to_string(j + 1));
  } else {
    traj.assets = spec.assets;
  }

  Eigen::VectorXd x = spec.x0;
  Eigen::VectorXd v = spec.v0;
  Eigen::VectorXd kick = Eigen::VectorXd::Zero(m);
  const double h = spec.dt;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = spec.t0 + static_cast<double>(i) * h;
    traj.states.row(i) = x.transpose();
    out.velocities.row(i) = v.transpose();
    traj.times[static_cast<std::size_t>(i)] = t;
    if (i + 1 == n) break;

    if (spec.noise_std > 0.0) {
      for (Eigen::Index j = 0; j < m; ++j) kick[j] = spec.noise_std * normal(rng);
    }
    const Eigen::VectorXd k1x = v;
    const Eigen::VectorXd k1v = accel(x, v, t, kick);
    const Eigen::VectorXd k2x = v + 0.5 * h * k1v;
    const Eigen::VectorXd k2v = accel(x + 0.5 * h * k1x, k2x, t + 0.5 * h, kick);
    const Eigen::VectorXd k3x = v + 0.5 * h * k2v;
    const Eigen::VectorXd k3v = accel(x + 0.5 * h * k2x, k3x, t + 0.5 * h, kick);
    const Eigen::VectorXd k4x = v + h * k3v;
    const Eigen::VectorXd k4v = accel(x + h * k3x, k4x, t + h, kick);
    x += h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
    v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    if (!x.allFinite() || !v.allFinite()) throw Error(ErrorCode::NonFinite, "integration diverged");
  }
  return out;
}

Trajectory simulate(const SynthSpec& spec, std::uint64_t seed) { return simulate_phase(spec, seed).positions; }

SynthSpec parse_synth_spec(std::istream& in) {
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto body = csv::trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::InvalidArgument, "line " + std::to_string(lineno) + ": expected key=value");
    }
    kv[std::string(csv::trim(body.substr(0, eq)))] = std::string(csv::trim(body.substr(eq + 1)));
  }

  auto take = [&](const std::string& key) -> std::optional<std::string> {
    auto it = kv.find(key);
    if (it == kv.end()) return std::nullopt;
    auto value = it->second;
    kv.erase(it);
    return value;
  };
  auto require = [&](const std::string& key) {
    auto v = take(key);
    if (!v) throw Error(ErrorCode::InvalidArgument, "spec is missing '" + key + "'");
    return *v;
  };

  SynthSpec spec;
  const auto kind = take("potential").value_or("quadratic");
  if (kind == "quadratic") {
    QuadraticWell q;
    q.center = parse_vector("center", require("center"));
    q.curvature = parse_matrix("curvature", require("curvature"));
    if (auto cv = take("center_velocity")) q.center_velocity = parse_vector("center_velocity", *cv);
    spec.potential = q;
  } else if (kind == "double_well") {
    DoubleWell d;
    if (auto c = take("center")) d.center = parse_scalar("center", *c);
    if (auto w = take("width")) d.width = parse_scalar("width", *w);
    if (auto h = take("height")) d.height = parse_scalar("height", *h);
    spec.potential = d;
  } else {
    throw Error(ErrorCode::InvalidArgument, "unknown potential '" + kind + "'");
  }
  spec.x0 = parse_vector("x0", require("x0"));
  if (auto v = take("v0")) {
    spec.v0 = parse_vector("v0", *v);
  } else {
    spec.v0 = Eigen::VectorXd::Zero(spec.x0.size());
  }
  if (auto g = take("gamma")) spec.gamma = parse_scalar("gamma", *g);
  if (auto s = take("noise_std")) spec.noise_std = parse_scalar("noise_std", *s);
  if (auto d = take("dt")) spec.dt = parse_scalar("dt", *d);
  if (auto t = take("t0")) spec.t0 = parse_scalar("t0", *t);
  if (auto s = take("steps")) {
    const double steps = parse_scalar("steps", *s);
    if (!(steps >= 1.0) || steps != std::floor(steps)) {
      throw Error(ErrorCode::InvalidArgument, "steps must be a positive integer");
    }
    spec.steps = static_cast<std::size_t>(steps);
  }
  if (auto a = take("assets")) {
    for (const auto& name : csv::split(*a)) spec.assets.emplace_back(csv::trim(name));
  }
  if (!kv.empty()) throw Error(ErrorCode::InvalidArgument, "unknown spec key '" + kv.begin()->first + "'");
  spec.validate();
  return spec;
}

SynthSpec read_synth_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path + "'");
  return parse_synth_spec(in);
}

}  // namespace potfield
