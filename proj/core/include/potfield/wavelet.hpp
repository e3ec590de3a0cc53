#pragma once

// Morlet continuous wavelet transform and smoothed wavelet coherence.

#include <Eigen/Dense>
#include <complex>
#include <span>
#include <string>
#include <vector>

namespace potfield {

using cdouble = std::complex<double>;

/// pi^{-1/4} e^{i w0 t} e^{-t^2/2}
cdouble morlet(double t, double omega0 = 6.0);

/// Dyadic grid from 2*dt to n*dt/4 with `voices` scales per octave.
std::vector<double> default_scales(std::size_t n, double dt, int voices = 12);

/// Scale at which the 1/a-normalized transform of a sinusoid of period P peaks.
double scale_for_period(double period, double omega0 = 6.0);

/// W(a, b) = (1/a) * integral x(t) conj(psi((t - b)/a)) dt, evaluated by FFT
/// with zero padding. Rows are scales, columns are samples.
/// Throws TooShort (fewer than 8 samples) or InvalidArgument.
Eigen::MatrixXcd cwt(std::span<const double> x, double dt, const std::vector<double>& scales, double omega0 = 6.0);

/// Uniform-sampling check for a time axis; throws NonUniformSampling.
void check_uniform(std::span<const double> times, double rel_tol = 1e-6);

struct CoherenceSettings {
  double omega0 = 6.0;
  int voices = 12;
  double scale_window_octaves = 0.6;  // boxcar width across scales
  double time_window_factor = 1.0;    // Gaussian sd in time = factor * scale
};

struct CoherenceMap {
  std::vector<double> times;
  std::vector<double> scales;
  Eigen::MatrixXd r2;     // S x T, clamped to [0, 1]
  Eigen::MatrixXd phase;  // S x T, (-pi, pi]
  std::vector<double> coi;  // largest scale outside edge effects, per time
  double max_raw_r2 = 0.0;  // before clamping

  bool inside_coi(std::size_t scale_index, std::size_t time_index) const {
    return scales[scale_index] <= coi[time_index];
  }
};

/// Squared coherence |S(W_xy/a)|^2 / (S(|W_x|^2/a) S(|W_y|^2/a)) and phase
/// atan2(Im, Re) of the smoothed cross spectrum. Each series has its mean
/// removed first. Empty `scales` selects default_scales.
CoherenceMap coherence(std::span<const double> x, std::span<const double> y, std::span<const double> times,
                       std::vector<double> scales = {}, const CoherenceSettings& settings = {});

/// time, scale, r2, phase, in_coi
std::string coherence_to_csv(const CoherenceMap& map);

}  // namespace potfield
