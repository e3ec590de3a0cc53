#include "potfield/wavelet.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <mutex>
#include <numbers>
#include <sstream>

#include "potfield/csv.hpp"
#include "potfield/error.hpp"

namespace potfield {
namespace {

// FFTW planning is not thread-safe; execution is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwBuffer {
  explicit FftwBuffer(std::size_t n) : data(fftw_alloc_complex(n)), size(n) {
    if (!data) throw std::bad_alloc();
  }
  ~FftwBuffer() { fftw_free(data); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;

  cdouble* begin() { return reinterpret_cast<cdouble*>(data); }
  fftw_complex* data;
  std::size_t size;
};

struct FftwPlan {
  FftwPlan(FftwBuffer& in, FftwBuffer& out, int sign) {
    std::lock_guard lock(planner_mutex());
    plan = fftw_plan_dft_1d(static_cast<int>(in.size), in.data, out.data, sign, FFTW_ESTIMATE);
  }
  ~FftwPlan() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan);
  }
  FftwPlan(const FftwPlan&) = delete;
  FftwPlan& operator=(const FftwPlan&) = delete;

  void run() const { fftw_execute(plan); }
  fftw_plan plan;
};

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

// Weighted running mean along a row with per-edge renormalization.
Eigen::ArrayXd smooth_row(const Eigen::ArrayXd& row, const std::vector<double>& kernel) {
  const auto n = row.size();
  const auto half = static_cast<Eigen::Index>(kernel.size() / 2);
  Eigen::ArrayXd out(n);
  for (Eigen::Index t = 0; t < n; ++t) {
    double acc = 0.0, wsum = 0.0;
    const Eigen::Index lo = std::max<Eigen::Index>(0, t - half);
    const Eigen::Index hi = std::min<Eigen::Index>(n - 1, t + half);
    for (Eigen::Index u = lo; u <= hi; ++u) {
      const double w = kernel[static_cast<std::size_t>(u - t + half)];
      acc += w * row[u];
      wsum += w;
    }
    out[t] = acc / wsum;
  }
  return out;
}

std::vector<double> gaussian_kernel(double sd_samples) {
  const double sd = std::max(sd_samples, 0.5);
  const auto half = static_cast<std::size_t>(std::ceil(3.0 * sd));
  std::vector<double> k(2 * half + 1);
  for (std::size_t i = 0; i < k.size(); ++i) {
    const double u = static_cast<double>(i) - static_cast<double>(half);
    k[i] = std::exp(-0.5 * u * u / (sd * sd));
  }
  return k;
}

// Smooth in time (Gaussian, width proportional to scale) then across scales (boxcar).
Eigen::MatrixXd smooth(const Eigen::MatrixXd& m, const std::vector<double>& scales, double dt,
                       const CoherenceSettings& s) {
  Eigen::MatrixXd time_smoothed(m.rows(), m.cols());
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const auto kernel = gaussian_kernel(s.time_window_factor * scales[static_cast<std::size_t>(r)] / dt);
    time_smoothed.row(r) = smooth_row(m.row(r).transpose().array(), kernel).transpose().matrix();
  }
  const auto width = std::max<Eigen::Index>(1, std::lround(s.scale_window_octaves * s.voices));
  const Eigen::Index half = width / 2;
  Eigen::MatrixXd out(m.rows(), m.cols());
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const Eigen::Index lo = std::max<Eigen::Index>(0, r - half);
    const Eigen::Index hi = std::min<Eigen::Index>(m.rows() - 1, r + half);
    out.row(r) = time_smoothed.middleRows(lo, hi - lo + 1).colwise().sum() / static_cast<double>(hi - lo + 1);
  }
  return out;
}

}  // namespace

cdouble morlet(double t, double omega0) {
  return std::pow(std::numbers::pi, -0.25) * std::exp(cdouble(-0.5 * t * t, omega0 * t));
}

std::vector<double> default_scales(std::size_t n, double dt, int voices) {
  std::vector<double> scales;
  if (n < 8 || voices < 1) return scales;
  const int count = static_cast<int>(std::floor(voices * std::log2(static_cast<double>(n) / 8.0))) + 1;
  for (int j = 0; j < count; ++j) scales.push_back(2.0 * dt * std::exp2(static_cast<double>(j) / voices));
  return scales;
}

double scale_for_period(double period, double omega0) { return omega0 * period / (2.0 * std::numbers::pi); }

void check_uniform(std::span<const double> times, double rel_tol) {
  if (times.size() < 2) return;
  const double dt = (times.back() - times.front()) / static_cast<double>(times.size() - 1);
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (std::abs(times[i] - times[i - 1] - dt) > rel_tol * std::abs(dt)) {
      throw Error(ErrorCode::NonUniformSampling, "sample " + std::to_string(i) + " breaks uniform spacing");
    }
  }
}

Eigen::MatrixXcd cwt(std::span<const double> x, double dt, const std::vector<double>& scales, double omega0) {
  const std::size_t n = x.size();
  if (n < 8) throw Error(ErrorCode::TooShort, "wavelet transform needs at least 8 samples");
  if (!(dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "dt must be positive");
  for (std::size_t i = 0; i < scales.size(); ++i) {
    if (!(scales[i] > 0.0) || (i > 0 && scales[i] <= scales[i - 1])) {
      throw Error(ErrorCode::InvalidArgument, "scales must be positive and strictly increasing");
    }
  }
  const std::size_t len = next_pow2(2 * n);
  FftwBuffer time_buf(len), freq_buf(len), work(len), result(len);
  FftwPlan forward(time_buf, freq_buf, FFTW_FORWARD);
  FftwPlan backward(work, result, FFTW_BACKWARD);

  std::fill(time_buf.begin(), time_buf.begin() + len, cdouble{});
  for (std::size_t i = 0; i < n; ++i) time_buf.begin()[i] = x[i];
  forward.run();

  std::vector<double> omega(len);
  for (std::size_t k = 0; k < len; ++k) {
    const double kk = k <= len / 2 ? static_cast<double>(k) : static_cast<double>(k) - static_cast<double>(len);
    omega[k] = 2.0 * std::numbers::pi * kk / (static_cast<double>(len) * dt);
  }
  const double norm = std::pow(std::numbers::pi, -0.25) * std::sqrt(2.0 * std::numbers::pi) / static_cast<double>(len);

  Eigen::MatrixXcd out(static_cast<Eigen::Index>(scales.size()), static_cast<Eigen::Index>(n));
  for (std::size_t s = 0; s < scales.size(); ++s) {
    for (std::size_t k = 0; k < len; ++k) {
      const double arg = scales[s] * omega[k];
      const double psi_hat = arg > 0.0 ? norm * std::exp(-0.5 * (arg - omega0) * (arg - omega0)) : 0.0;
      work.begin()[k] = freq_buf.begin()[k] * psi_hat;
    }
    backward.run();
    for (std::size_t i = 0; i < n; ++i) {
      out(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(i)) = result.begin()[i];
    }
  }
  return out;
}

CoherenceMap coherence(std::span<const double> x, std::span<const double> y, std::span<const double> times,
                       std::vector<double> scales, const CoherenceSettings& settings) {
  if (x.size() != y.size() || x.size() != times.size()) {
    throw Error(ErrorCode::InvalidArgument, "coherence needs equal-length series and time axis");
  }
  const std::size_t n = x.size();
  if (n < 8) throw Error(ErrorCode::TooShort, "coherence needs at least 8 samples");
  check_uniform(times);
  const double dt = (times.back() - times.front()) / static_cast<double>(n - 1);
  if (scales.empty()) scales = default_scales(n, dt, settings.voices);

  auto demean = [](std::span<const double> v) {
    const Eigen::Map<const Eigen::VectorXd> m(v.data(), static_cast<Eigen::Index>(v.size()));
    Eigen::VectorXd out = m.array() - m.mean();
    return out;
  };
  const Eigen::VectorXd xd = demean(x);
  const Eigen::VectorXd yd = demean(y);
  const Eigen::MatrixXcd wx = cwt({xd.data(), n}, dt, scales, settings.omega0);
  const Eigen::MatrixXcd wy = cwt({yd.data(), n}, dt, scales, settings.omega0);

  const auto s_count = static_cast<Eigen::Index>(scales.size());
  const Eigen::ArrayXd inv_a = Eigen::Map<const Eigen::ArrayXd>(scales.data(), s_count).inverse();
  const Eigen::MatrixXd pxx = (wx.cwiseAbs2().array().colwise() * inv_a).matrix();
  const Eigen::MatrixXd pyy = (wy.cwiseAbs2().array().colwise() * inv_a).matrix();
  const Eigen::MatrixXcd cross = wx.cwiseProduct(wy.conjugate());
  const Eigen::MatrixXd cre = (cross.real().array().colwise() * inv_a).matrix();
  const Eigen::MatrixXd cim = (cross.imag().array().colwise() * inv_a).matrix();

  const Eigen::MatrixXd sxx = smooth(pxx, scales, dt, settings);
  const Eigen::MatrixXd syy = smooth(pyy, scales, dt, settings);
  const Eigen::MatrixXd sre = smooth(cre, scales, dt, settings);
  const Eigen::MatrixXd sim = smooth(cim, scales, dt, settings);

  CoherenceMap map;
  map.times.assign(times.begin(), times.end());
  map.scales = scales;
  map.r2.resize(s_count, static_cast<Eigen::Index>(n));
  map.phase.resize(s_count, static_cast<Eigen::Index>(n));
  for (Eigen::Index s = 0; s < s_count; ++s) {
    for (Eigen::Index t = 0; t < static_cast<Eigen::Index>(n); ++t) {
      const double denom = sxx(s, t) * syy(s, t);
      const double num = sre(s, t) * sre(s, t) + sim(s, t) * sim(s, t);
      const double raw = denom > 0.0 ? num / denom : 0.0;
      map.max_raw_r2 = std::max(map.max_raw_r2, raw);
      map.r2(s, t) = std::clamp(raw, 0.0, 1.0);
      double ph = std::atan2(sim(s, t), sre(s, t));
      if (ph <= -std::numbers::pi) ph = std::numbers::pi;
      map.phase(s, t) = ph;
    }
  }
  map.coi.resize(n);
  for (std::size_t t = 0; t < n; ++t) {
    const double edge = static_cast<double>(std::min(t, n - 1 - t)) * dt;
    map.coi[t] = edge / std::numbers::sqrt2;
  }
  return map;
}

std::string coherence_to_csv(const CoherenceMap& map) {
  std::ostringstream out;
  out << "time,scale,r2,phase,in_coi\n";
  for (std::size_t t = 0; t < map.times.size(); ++t) {
    for (std::size_t s = 0; s < map.scales.size(); ++s) {
      const auto si = static_cast<Eigen::Index>(s);
      const auto ti = static_cast<Eigen::Index>(t);
      out << csv::format(map.times[t]) << ',' << csv::format(map.scales[s]) << ',' << csv::format(map.r2(si, ti))
          << ',' << csv::format(map.phase(si, ti)) << ',' << (map.inside_coi(s, t) ? 1 : 0) << '\n';
    }
  }
  return out.str();
}

}  // namespace potfield
