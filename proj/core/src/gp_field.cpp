#include "potfield/gp_field.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <thread>

#include "potfield/csv.hpp"
#include "potfield/error.hpp"
#include "potfield/optimizer.hpp"

namespace potfield {
namespace {

constexpr double kJitterStart = 1e-9;
constexpr double kJitterLimit = 1e-3;

struct Factor {
  Eigen::LLT<Eigen::MatrixXd> llt;
  double jitter = 0.0;
};

// Cholesky of K + jitter I with the jitter escalated x10 from 1e-9 to 1e-3
// times the mean diagonal.
std::optional<Factor> factorize(const Eigen::MatrixXd& k) {
  const double scale = k.trace() / static_cast<double>(k.rows());
  if (!std::isfinite(scale) || scale <= 0.0) return std::nullopt;
  for (double rel = kJitterStart; rel <= kJitterLimit * 1.0000001; rel *= 10.0) {
    Factor f;
    f.jitter = rel * scale;
    Eigen::MatrixXd kj = k;
    kj.diagonal().array() += f.jitter;
    f.llt.compute(kj);
    if (f.llt.info() == Eigen::Success) {
      const auto d = f.llt.matrixLLT().diagonal();
      if (d.allFinite() && d.minCoeff() > 0.0) return f;
    }
  }
  return std::nullopt;
}

double squared_scaled_distance(const SEKernelParams& p, const Eigen::Ref<const Eigen::VectorXd>& a,
                               const Eigen::Ref<const Eigen::VectorXd>& b) {
  return ((a - b).array().square() / p.lambdas.array()).sum();
}

SEKernelParams from_log(const Eigen::VectorXd& theta, Eigen::Index m) {
  SEKernelParams p;
  p.sigma_se = std::exp(theta[0]);
  p.lambdas = theta.segment(1, m).array().exp();
  p.noise_var = std::exp(theta[m + 1]);
  return p;
}

GradientObservations thin(const GradientObservations& obs, Eigen::Index max_points) {
  const Eigen::Index n = obs.X.rows();
  if (max_points <= 0 || n <= max_points) return obs;
  const Eigen::Index stride = (n + max_points - 1) / max_points;
  const Eigen::Index kept = (n + stride - 1) / stride;
  GradientObservations out;
  out.X.resize(kept, obs.X.cols());
  out.Y.resize(kept, obs.Y.cols());
  for (Eigen::Index r = 0; r < kept; ++r) {
    out.X.row(r) = obs.X.row(r * stride);
    out.Y.row(r) = obs.Y.row(r * stride);
  }
  out.noise_hint = obs.noise_hint;
  return out;
}

// uniform in [0, 1) from the top 53 bits; independent of the standard library's distributions
double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace

void SEKernelParams::validate() const {
  auto ok = [](double v) { return std::isfinite(v) && v > 0.0; };
  if (!ok(sigma_se) || !ok(noise_var) || lambdas.size() == 0 ||
      !std::all_of(lambdas.data(), lambdas.data() + lambdas.size(), ok)) {
    throw Error(ErrorCode::InvalidArgument, "kernel hyperparameters must be finite and positive");
  }
}

double kernel_eval(const SEKernelParams& p, const Eigen::Ref<const Eigen::VectorXd>& x,
                   const Eigen::Ref<const Eigen::VectorXd>& xp) {
  return p.sigma_se * p.sigma_se * std::exp(-0.5 * squared_scaled_distance(p, x, xp));
}

Eigen::VectorXd kernel_grad(const SEKernelParams& p, const Eigen::Ref<const Eigen::VectorXd>& x_star,
                            const Eigen::Ref<const Eigen::VectorXd>& x) {
  const double k = kernel_eval(p, x_star, x);
  return -((x_star - x).array() / p.lambdas.array()).matrix() * k;
}

Eigen::MatrixXd kernel_hess(const SEKernelParams& p, const Eigen::Ref<const Eigen::VectorXd>& x_star,
                            const Eigen::Ref<const Eigen::VectorXd>& x) {
  const double k = kernel_eval(p, x_star, x);
  const Eigen::VectorXd u = ((x_star - x).array() / p.lambdas.array()).matrix();
  Eigen::MatrixXd h = u * u.transpose();
  h.diagonal() -= p.lambdas.cwiseInverse();
  return h * k;
}

Eigen::MatrixXd kernel_matrix(const SEKernelParams& p, const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const Eigen::ArrayXd inv_sqrt = p.lambdas.array().rsqrt();
  const Eigen::MatrixXd as = a * inv_sqrt.matrix().asDiagonal();
  const Eigen::MatrixXd bs = b * inv_sqrt.matrix().asDiagonal();
  const Eigen::VectorXd an = as.rowwise().squaredNorm();
  const Eigen::VectorXd bn = bs.rowwise().squaredNorm();
  Eigen::MatrixXd d2 = -2.0 * as * bs.transpose();
  d2.colwise() += an;
  d2.rowwise() += bn.transpose();
  const double sf2 = p.sigma_se * p.sigma_se;
  return (d2.array().max(0.0) * -0.5).exp().matrix() * sf2;
}

double prior_laplacian_variance(const SEKernelParams& p) {
  return p.sigma_se * p.sigma_se * p.lambdas.cwiseInverse().sum();
}

double log_marginal_likelihood(const GradientObservations& obs, const SEKernelParams& params,
                               Eigen::VectorXd* grad) {
  const Eigen::Index n = obs.X.rows();
  const Eigen::Index m = obs.X.cols();
  const Eigen::Index outputs = obs.Y.cols();
  const double neg_inf = -std::numeric_limits<double>::infinity();

  const Eigen::MatrixXd kf = kernel_matrix(params, obs.X, obs.X);
  Eigen::MatrixXd kn = kf;
  kn.diagonal().array() += params.noise_var;
  auto factor = factorize(kn);
  if (!factor) return neg_inf;

  const Eigen::MatrixXd alpha = factor->llt.solve(obs.Y);
  const double fit_term = (obs.Y.array() * alpha.array()).sum();
  const double log_det = 2.0 * factor->llt.matrixLLT().diagonal().array().log().sum();
  const double lml = -0.5 * fit_term - 0.5 * static_cast<double>(outputs) * log_det -
                     0.5 * static_cast<double>(outputs * n) * std::log(2.0 * std::numbers::pi);
  if (!std::isfinite(lml)) return neg_inf;

  if (grad) {
    grad->resize(m + 2);
    // dL/dtheta = 0.5 tr(W dK/dtheta),  W = alpha alpha^T - outputs * K^-1
    Eigen::MatrixXd w = alpha * alpha.transpose();
    w -= static_cast<double>(outputs) * factor->llt.solve(Eigen::MatrixXd::Identity(n, n));
    const Eigen::MatrixXd wk = w.cwiseProduct(kf);
    (*grad)[0] = wk.sum();  // dK/dlog(sigma_se) = 2 K_f
    for (Eigen::Index d = 0; d < m; ++d) {
      double acc = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = 0; i < n; ++i) {
          const double diff = obs.X(i, d) - obs.X(j, d);
          acc += wk(i, j) * diff * diff;
        }
      }
      (*grad)[d + 1] = 0.25 * acc / params.lambdas[d];
    }
    (*grad)[m + 1] = 0.5 * w.trace() * params.noise_var;
  }
  return lml;
}

PotentialFieldModel fit(const GradientObservations& obs, const SEKernelParams& params) {
  params.validate();
  if (obs.X.rows() < 1 || obs.X.rows() != obs.Y.rows() || obs.X.cols() != params.dim()) {
    throw Error(ErrorCode::InvalidArgument, "observation shapes do not match kernel dimension");
  }
  PotentialFieldModel model;
  model.params = params;
  model.X = obs.X;
  model.Y = obs.Y;
  Eigen::MatrixXd k = kernel_matrix(params, obs.X, obs.X);
  k.diagonal().array() += params.noise_var;
  auto factor = factorize(k);
  if (!factor) throw Error(ErrorCode::SingularKernel, "kernel matrix not positive definite after jitter 1e-3");
  model.jitter = factor->jitter;
  model.chol = factor->llt.matrixL();
  model.alpha = factor->llt.solve(obs.Y);
  const double log_det = 2.0 * model.chol.diagonal().array().log().sum();
  const auto n = static_cast<double>(obs.X.rows());
  const auto outputs = static_cast<double>(obs.Y.cols());
  model.log_marginal_likelihood = -0.5 * (obs.Y.array() * model.alpha.array()).sum() - 0.5 * outputs * log_det -
                                  0.5 * outputs * n * std::log(2.0 * std::numbers::pi);
  return model;
}

PotentialFieldModel train(const GradientObservations& full_obs, const TrainOptions& opts, TrainReport* report) {
  if (full_obs.X.rows() < 2) throw Error(ErrorCode::TooShort, "need at least 2 gradient observations");
  if (!full_obs.X.allFinite() || !full_obs.Y.allFinite()) {
    throw Error(ErrorCode::NonFinite, "observations contain non-finite values");
  }
  if (opts.starts < 1) throw Error(ErrorCode::InvalidArgument, "need at least one optimizer start");
  const GradientObservations obs = thin(full_obs, opts.max_points);
  const Eigen::Index m = obs.X.cols();

  // data scales that anchor the search box of each hyperparameter
  double y_power = obs.Y.squaredNorm() / static_cast<double>(obs.Y.size());
  if (!(y_power > 0.0) || !std::isfinite(y_power)) y_power = 1.0;
  Eigen::VectorXd scale(m + 2);
  scale[0] = std::sqrt(y_power);
  for (Eigen::Index d = 0; d < m; ++d) {
    const double span = obs.X.col(d).maxCoeff() - obs.X.col(d).minCoeff();
    scale[d + 1] = span > 0.0 ? span * span : 1.0;
  }
  scale[m + 1] = y_power;
  const Eigen::VectorXd log_scale = scale.array().log();
  const Eigen::VectorXd lower = log_scale.array() + std::log(opts.bound_low);
  const Eigen::VectorXd upper = log_scale.array() + std::log(opts.bound_high);

  std::vector<Eigen::VectorXd> initial(static_cast<std::size_t>(opts.starts));
  {
    Eigen::VectorXd t0(m + 2);
    t0[0] = log_scale[0];
    t0.segment(1, m) = log_scale.segment(1, m).array() + std::log(0.1);
    const double hint = obs.noise_hint > 0.0 ? obs.noise_hint : 0.1 * y_power;
    t0[m + 1] = std::log(hint);
    initial[0] = t0.cwiseMax(lower).cwiseMin(upper);
    std::mt19937_64 rng(opts.seed);
    const Eigen::VectorXd lo = (log_scale.array() + std::log(1e-2)).matrix().cwiseMax(lower);
    const Eigen::VectorXd hi = (log_scale.array() + std::log(1e2)).matrix().cwiseMin(upper);
    for (int s = 1; s < opts.starts; ++s) {
      Eigen::VectorXd t(m + 2);
      for (Eigen::Index i = 0; i < m + 2; ++i) t[i] = lo[i] + (hi[i] - lo[i]) * unit_uniform(rng);
      initial[static_cast<std::size_t>(s)] = t;
    }
  }

  const Objective objective = [&](const Eigen::VectorXd& theta, Eigen::VectorXd* grad) {
    const double lml = log_marginal_likelihood(obs, from_log(theta, m), grad);
    if (grad) *grad = -*grad;
    return -lml;
  };

  std::vector<StartRecord> records(static_cast<std::size_t>(opts.starts));
  auto run_start = [&](int s) {
    auto& rec = records[static_cast<std::size_t>(s)];
    const auto& t0 = initial[static_cast<std::size_t>(s)];
    rec.initial = from_log(t0, m);
    const auto res = minimize_box(objective, t0, lower, upper, opts.max_iterations, opts.tolerance);
    rec.final = from_log(res.x, m);
    rec.initial_lml = -res.initial_value;
    rec.final_lml = -res.value;
    rec.iterations = res.iterations;
    rec.ok = std::isfinite(res.value);
  };

  unsigned workers = opts.threads > 0 ? static_cast<unsigned>(opts.threads) : std::thread::hardware_concurrency();
  workers = std::clamp(workers, 1u, static_cast<unsigned>(opts.starts));
  if (workers == 1) {
    for (int s = 0; s < opts.starts; ++s) run_start(s);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (int s = static_cast<int>(w); s < opts.starts; s += static_cast<int>(workers)) run_start(s);
      });
    }
    for (auto& t : pool) t.join();
  }

  int best = -1;
  for (int s = 0; s < opts.starts; ++s) {
    const auto& rec = records[static_cast<std::size_t>(s)];
    if (rec.ok && (best < 0 || rec.final_lml > records[static_cast<std::size_t>(best)].final_lml)) best = s;
  }
  if (report) {
    report->starts = records;
    report->best_start = best;
  }
  if (best < 0) {
    throw Error(ErrorCode::SingularKernel, "no optimizer start produced a factorizable kernel");
  }
  return fit(obs, records[static_cast<std::size_t>(best)].final);
}

GradientPosterior posterior_gradient(const PotentialFieldModel& model, const Eigen::MatrixXd& points) {
  const auto& p = model.params;
  const Eigen::MatrixXd ks = kernel_matrix(p, points, model.X);  // Q x N
  GradientPosterior out;
  out.mean = ks * model.alpha;
  const Eigen::MatrixXd v = model.chol.triangularView<Eigen::Lower>().solve(ks.transpose());
  const Eigen::ArrayXd prior = Eigen::ArrayXd::Constant(points.rows(), p.sigma_se * p.sigma_se + p.noise_var);
  const Eigen::ArrayXd var = (prior - v.colwise().squaredNorm().transpose().array()).max(0.0);
  out.var = var.matrix().replicate(1, model.Y.cols());
  return out;
}

FieldPosterior posterior_field(const PotentialFieldModel& model, const Eigen::MatrixXd& points) {
  const auto& p = model.params;
  const Eigen::Index q = points.rows();
  const Eigen::Index m = model.dim();
  const Eigen::Index n = model.X.rows();
  const Eigen::Index outputs = model.Y.cols();

  FieldPosterior out;
  out.points = points;
  const auto grad = posterior_gradient(model, points);
  out.grad_mean = grad.mean;
  out.grad_var = grad.var;
  out.jac_mean.resize(static_cast<std::size_t>(q));
  out.lap_mean.resize(q);
  out.lap_var.resize(q);
  out.asymmetry.resize(q);
  out.prior_lap_var = prior_laplacian_variance(p);

  const Eigen::ArrayXd inv_lambda = p.lambdas.cwiseInverse().array();
  const double sf2 = p.sigma_se * p.sigma_se;
  const Eigen::Index diag_outputs = std::min(outputs, m);
  constexpr Eigen::Index kBatch = 128;
  for (Eigen::Index start = 0; start < q; start += kBatch) {
    const Eigen::Index count = std::min(kBatch, q - start);
    // G block for point b occupies columns [b*m, (b+1)*m): d k(x*_b, x_n) / d x*_l
    Eigen::MatrixXd g(n, count * m);
    for (Eigen::Index b = 0; b < count; ++b) {
      const Eigen::VectorXd xs = points.row(start + b).transpose();
      const Eigen::MatrixXd diff = model.X.rowwise() - xs.transpose();  // x_n - x*
      const Eigen::ArrayXd k = ((diff.array().square().rowwise() * inv_lambda.transpose()).rowwise().sum() * -0.5)
                                   .exp() * sf2;
      for (Eigen::Index l = 0; l < m; ++l) {
        g.col(b * m + l) = (diff.col(l).array() * inv_lambda[l] * k).matrix();
      }
    }
    const Eigen::MatrixXd v = model.chol.triangularView<Eigen::Lower>().solve(g);
    for (Eigen::Index b = 0; b < count; ++b) {
      const auto qi = start + b;
      Eigen::MatrixXd jac = model.alpha.transpose() * g.middleCols(b * m, m);  // outputs x m
      double lap_var = 0.0;
      for (Eigen::Index j = 0; j < diag_outputs; ++j) {
        lap_var += std::max(0.0, sf2 * inv_lambda[j] - v.col(b * m + j).squaredNorm());
      }
      out.lap_mean[qi] = jac.trace();
      out.lap_var[qi] = lap_var;
      out.asymmetry[qi] = outputs == m ? (jac - jac.transpose()).norm() : 0.0;
      out.jac_mean[static_cast<std::size_t>(qi)] = std::move(jac);
    }
  }
  return out;
}

std::string field_to_csv(const FieldPosterior& field, const std::vector<std::string>& labels) {
  std::ostringstream out;
  const Eigen::Index m = field.points.cols();
  auto label = [&](Eigen::Index c) {
    return c < static_cast<Eigen::Index>(labels.size()) ? labels[static_cast<std::size_t>(c)] : std::to_string(c);
  };
  for (Eigen::Index c = 0; c < m; ++c) out << (c ? "," : "") << "x_" << label(c);
  for (Eigen::Index c = 0; c < field.grad_mean.cols(); ++c) out << ",grad_" << label(c);
  out << ",lap_mean,lap_var\n";
  for (Eigen::Index r = 0; r < field.points.rows(); ++r) {
    for (Eigen::Index c = 0; c < m; ++c) out << (c ? "," : "") << csv::format(field.points(r, c));
    for (Eigen::Index c = 0; c < field.grad_mean.cols(); ++c) out << ',' << csv::format(field.grad_mean(r, c));
    out << ',' << csv::format(field.lap_mean[r]) << ',' << csv::format(field.lap_var[r]) << '\n';
  }
  return out.str();
}

}  // namespace potfield
