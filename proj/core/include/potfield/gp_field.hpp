#pragma once

// Gaussian-process model of the potential gradient. Each of the M gradient
// components is an independent zero-mean GP; all share one squared-exponential
// kernel k(x, x') = sf2 * exp(-0.5 (x - x')^T diag(lambdas)^-1 (x - x')).
// Note that `lambdas` enter the kernel like squared length-scales.

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "potfield/market_data.hpp"

namespace potfield {

struct SEKernelParams {
  double sigma_se = 1.0;   // signal standard deviation
  Eigen::VectorXd lambdas; // one per input dimension
  double noise_var = 1e-2; // observation noise variance

  Eigen::Index dim() const { return lambdas.size(); }
  /// Throws InvalidArgument unless every entry is finite and > 0.
  void validate() const;
};

double kernel_eval(const SEKernelParams& p, const Eigen::Ref<const Eigen::VectorXd>& x,
                   const Eigen::Ref<const Eigen::VectorXd>& xp);

/// d k(x*, x) / d x*  =  -diag(lambdas)^-1 (x* - x) k(x*, x)
Eigen::VectorXd kernel_grad(const SEKernelParams& p, const Eigen::Ref<const Eigen::VectorXd>& x_star,
                            const Eigen::Ref<const Eigen::VectorXd>& x);

/// d^2 k(x*, x) / d x* d x*^T  =  L^-1 ((x* - x)(x* - x)^T L^-1 - I) k(x*, x),  L = diag(lambdas)
Eigen::MatrixXd kernel_hess(const SEKernelParams& p, const Eigen::Ref<const Eigen::VectorXd>& x_star,
                            const Eigen::Ref<const Eigen::VectorXd>& x);

/// Gram matrix K(A, B) without noise.
Eigen::MatrixXd kernel_matrix(const SEKernelParams& p, const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

struct PotentialFieldModel {
  SEKernelParams params;
  Eigen::MatrixXd X;      // N' x M training states
  Eigen::MatrixXd Y;      // N' x M gradient observations
  Eigen::MatrixXd chol;   // lower factor of K + (noise_var + jitter) I
  Eigen::MatrixXd alpha;  // (K + noise_var I)^-1 Y, column per output
  double jitter = 0.0;
  double log_marginal_likelihood = 0.0;  // summed over outputs

  Eigen::Index dim() const { return X.cols(); }
};

/// Conditions on the observations with fixed hyperparameters.
/// Throws SingularKernel if the factorization fails after jitter escalation.
PotentialFieldModel fit(const GradientObservations& obs, const SEKernelParams& params);

struct TrainOptions {
  int starts = 8;
  std::uint64_t seed = 42;
  double bound_low = 1e-3;   // multiplies the data scale of each hyperparameter
  double bound_high = 1e3;
  int max_iterations = 200;
  double tolerance = 1e-9;   // relative change in the objective
  int threads = 0;           // 0 = hardware concurrency
  Eigen::Index max_points = 0;  // > 0: thin the training set to at most this many rows
};

/// Per-start record kept for diagnostics and the monotonicity check.
struct StartRecord {
  SEKernelParams initial;
  SEKernelParams final;
  double initial_lml = 0.0;
  double final_lml = 0.0;
  int iterations = 0;
  bool ok = false;
};

struct TrainReport {
  std::vector<StartRecord> starts;
  int best_start = -1;
};

/// Maximizes the summed log marginal likelihood over (sigma_se, lambdas,
/// noise_var) with seeded multi-start bounded quasi-Newton search on
/// log-parameters. Deterministic for a fixed seed, regardless of threading.
/// Throws TooShort (N' < 2), NonFinite, SingularKernel.
PotentialFieldModel train(const GradientObservations& obs, const TrainOptions& opts = {},
                          TrainReport* report = nullptr);

/// Summed log marginal likelihood and its gradient with respect to
/// (log sigma_se, log lambdas..., log noise_var). Returns -inf when the
/// kernel cannot be factorized.
double log_marginal_likelihood(const GradientObservations& obs, const SEKernelParams& params,
                               Eigen::VectorXd* grad = nullptr);

struct GradientPosterior {
  Eigen::MatrixXd mean;  // Q x M
  Eigen::MatrixXd var;   // Q x M, predictive (includes noise_var)
};

GradientPosterior posterior_gradient(const PotentialFieldModel& model, const Eigen::MatrixXd& points);

struct FieldPosterior {
  Eigen::MatrixXd points;                // Q x M
  Eigen::MatrixXd grad_mean;             // Q x M
  Eigen::MatrixXd grad_var;              // Q x M
  std::vector<Eigen::MatrixXd> jac_mean; // Q entries, each M x M; (j, l) = d grad_j / d x_l
  Eigen::VectorXd lap_mean;              // Q
  Eigen::VectorXd lap_var;               // Q
  Eigen::VectorXd asymmetry;             // Q, Frobenius norm of J - J^T
  double prior_lap_var = 0.0;            // sum_j sigma_se^2 / lambda_j
};

FieldPosterior posterior_field(const PotentialFieldModel& model, const Eigen::MatrixXd& points);

/// Prior variance of the Laplacian at any point under the independent-output model.
double prior_laplacian_variance(const SEKernelParams& p);

/// quiver plot data: coordinates, grad_mean, lap_mean, lap_var per row
std::string field_to_csv(const FieldPosterior& field, const std::vector<std::string>& labels);

// ---- test grids --------------------------------------------------------------

struct GridOptions {
  double padding = 0.1;     // fraction of the span added on each side
  int points_per_axis = 0;  // 0 = 25 for M <= 2, 12 for M = 3
  int qmc_points = 4096;    // used when M > 3
};

/// Axis-aligned mesh over the padded bounding box of `states` (M <= 3) or a
/// Halton sequence over the same box (M > 3).
Eigen::MatrixXd make_test_grid(const Eigen::MatrixXd& states, const GridOptions& opts = {});

/// First n points of the Halton sequence in [0,1)^dim (skipping the origin).
Eigen::MatrixXd halton(Eigen::Index n, Eigen::Index dim);

}  // namespace potfield
