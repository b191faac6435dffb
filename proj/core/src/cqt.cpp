#include "asc/cqt.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "asc/error.hpp"

namespace asc::dsp {
namespace {

constexpr double kMagnitudeEpsilon = 1e-10;

std::vector<double> make_window(WindowKind kind, std::size_t n) {
  std::vector<double> w(n, 1.0);
  if (n <= 1) return w;
  const double denom = static_cast<double>(n);
  for (std::size_t m = 0; m < n; ++m) {
    const double phase = 2.0 * std::numbers::pi * static_cast<double>(m) / denom;
    switch (kind) {
      case WindowKind::hann: w[m] = 0.5 - 0.5 * std::cos(phase); break;
      case WindowKind::hamming: w[m] = 0.54 - 0.46 * std::cos(phase); break;
      case WindowKind::rectangular: break;
    }
  }
  return w;
}

}  // namespace

WindowKind parse_window_kind(const std::string& name) {
  if (name == "hann") return WindowKind::hann;
  if (name == "hamming") return WindowKind::hamming;
  if (name == "rectangular") return WindowKind::rectangular;
  throw ValidationError("unknown window kind '" + name + "'");
}

std::string to_string(WindowKind kind) {
  switch (kind) {
    case WindowKind::hann: return "hann";
    case WindowKind::hamming: return "hamming";
    case WindowKind::rectangular: return "rectangular";
  }
  return "hann";
}

double CqtParams::center_frequency(int bin) const {
  // Whole octaves via ldexp keep f(k + B) / f(k) exactly 2.
  const int octave = bin >= 0 ? bin / bins_per_octave : -((-bin + bins_per_octave - 1) / bins_per_octave);
  const int rem = bin - octave * bins_per_octave;
  return std::ldexp(f_min * std::exp2(static_cast<double>(rem) / bins_per_octave), octave);
}

double CqtParams::quality() const { return 1.0 / (std::exp2(1.0 / bins_per_octave) - 1.0); }

void CqtParams::validate(double sample_rate) const {
  if (!(sample_rate > 0.0)) throw ValidationError("sample rate must be positive");
  if (!(f_min > 0.0)) throw ValidationError("f_min must be positive");
  if (bins_per_octave <= 0) throw ValidationError("bins_per_octave must be positive");
  if (n_bins < bins_per_octave) throw ValidationError("n_bins must be at least bins_per_octave");
  if (!(hop_seconds > 0.0)) throw ValidationError("hop_seconds must be positive");
  if (!std::isfinite(magnitude_floor_db)) throw ValidationError("magnitude floor must be finite");
  if (!(max_frequency() < sample_rate / 2.0)) {
    throw ValidationError("top CQT bin at " + std::to_string(max_frequency()) + " Hz is not below Nyquist (" +
                          std::to_string(sample_rate / 2.0) + " Hz)");
  }
}

std::size_t cqt_frame_count(std::size_t samples, double sample_rate, double hop_seconds) {
  const double ratio = static_cast<double>(samples) / sample_rate / hop_seconds;
  return static_cast<std::size_t>(std::floor(ratio * (1.0 + 1e-12))) + 1;
}

double magnitude_to_db(double magnitude, double floor_db) {
  return std::max(20.0 * std::log10(std::max(magnitude, kMagnitudeEpsilon)), floor_db);
}

CqtKernel::CqtKernel(double sample_rate, const CqtParams& params) : sample_rate_(sample_rate), params_(params) {
  params_.validate(sample_rate);
  const double q = params_.quality();
  kernels_.resize(static_cast<std::size_t>(params_.n_bins));
  for (int k = 0; k < params_.n_bins; ++k) {
    const double fk = params_.center_frequency(k);
    const auto n = static_cast<std::size_t>(std::ceil(q * sample_rate / fk));
    const auto window = make_window(params_.window, n);
    double sum = 0.0;
    for (double w : window) sum += w;
    const double half = static_cast<double>(n / 2);
    auto& kernel = kernels_[static_cast<std::size_t>(k)];
    kernel.resize(n);
    for (std::size_t m = 0; m < n; ++m) {
      const double phase = -2.0 * std::numbers::pi * fk * (static_cast<double>(m) - half) / sample_rate;
      kernel[m] = std::polar(window[m] / sum, phase);
    }
  }
}

Eigen::MatrixXcd CqtKernel::transform_complex(std::span<const double> samples) const {
  if (samples.empty()) throw ValidationError("cannot transform an empty signal");
  const std::size_t frames = cqt_frame_count(samples.size(), sample_rate_, params_.hop_seconds);
  const auto len = static_cast<long long>(samples.size());
  Eigen::MatrixXcd out(params_.n_bins, static_cast<Eigen::Index>(frames));
  for (std::size_t f = 0; f < frames; ++f) {
    const auto center = std::llround(static_cast<double>(f) * params_.hop_seconds * sample_rate_);
    for (int k = 0; k < params_.n_bins; ++k) {
      const auto& kernel = kernels_[static_cast<std::size_t>(k)];
      const auto n = static_cast<long long>(kernel.size());
      const long long start = center - n / 2;
      const long long m_begin = std::max(0LL, -start);
      const long long m_end = std::min(n, len - start);
      double re = 0.0;
      double im = 0.0;
      for (long long m = m_begin; m < m_end; ++m) {
        const double x = samples[static_cast<std::size_t>(start + m)];
        re += kernel[static_cast<std::size_t>(m)].real() * x;
        im += kernel[static_cast<std::size_t>(m)].imag() * x;
      }
      out(k, static_cast<Eigen::Index>(f)) = {re, im};
    }
  }
  return out;
}

Spectrogram CqtKernel::transform(std::span<const double> samples) const {
  const Eigen::MatrixXcd coeffs = transform_complex(samples);
  Spectrogram spec;
  spec.values.resize(coeffs.rows(), coeffs.cols());
  for (Eigen::Index j = 0; j < coeffs.cols(); ++j) {
    for (Eigen::Index i = 0; i < coeffs.rows(); ++i) {
      spec.values(i, j) = magnitude_to_db(std::abs(coeffs(i, j)), params_.magnitude_floor_db);
    }
  }
  return spec;
}

Spectrogram compute_cqt(std::span<const double> samples, double sample_rate, const CqtParams& params) {
  if (samples.empty()) throw ValidationError("cannot transform an empty signal");
  return CqtKernel(sample_rate, params).transform(samples);
}

}  // namespace asc::dsp
