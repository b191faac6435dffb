// Constant-Q transform producing log-magnitude spectrograms.
#pragma once

#include <complex>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace asc::dsp {

enum class WindowKind { hann, hamming, rectangular };

WindowKind parse_window_kind(const std::string& name);
std::string to_string(WindowKind kind);

struct CqtParams {
  double f_min = 27.5;
  int bins_per_octave = 24;
  int n_bins = 143;
  double hop_seconds = 0.0111;  // ~900 frames for a 10 s segment
  WindowKind window = WindowKind::hann;
  double magnitude_floor_db = -80.0;

  /// f_k = f_min * 2^(k / B)
  double center_frequency(int bin) const;
  /// Q = 1 / (2^(1/B) - 1)
  double quality() const;
  double max_frequency() const { return center_frequency(n_bins - 1); }

  /// Throws ValidationError when the bin layout is inconsistent or the top
  /// bin reaches the Nyquist frequency of `sample_rate`.
  void validate(double sample_rate) const;
};

/// freq_bins x time_frames matrix of dB values, floored at the configured floor.
struct Spectrogram {
  Eigen::MatrixXd values;
  std::string segment_id;
  int channel_index = 0;

  Eigen::Index freq_bins() const { return values.rows(); }
  Eigen::Index time_frames() const { return values.cols(); }
};

/// Number of frames for a signal: floor(duration / hop) + 1.
std::size_t cqt_frame_count(std::size_t samples, double sample_rate, double hop_seconds);

/// Precomputed per-bin analysis kernels for one (sample rate, params) pair.
/// Reusable across channels and segments that share a sample rate.
class CqtKernel {
 public:
  CqtKernel(double sample_rate, const CqtParams& params);

  /// Complex coefficients, n_bins x frames.
  Eigen::MatrixXcd transform_complex(std::span<const double> samples) const;

  /// Log-magnitude spectrogram with floor applied.
  Spectrogram transform(std::span<const double> samples) const;

  const CqtParams& params() const { return params_; }
  double sample_rate() const { return sample_rate_; }
  std::size_t window_length(int bin) const { return kernels_[static_cast<std::size_t>(bin)].size(); }

 private:
  double sample_rate_;
  CqtParams params_;
  // Window times complex exponential, normalised by the window sum so a unit
  // sinusoid centred on a bin has magnitude 1/2.
  std::vector<std::vector<std::complex<double>>> kernels_;
};

/// Converts linear magnitude to dB: 20*log10(max(|X|, 1e-10)), then floors.
double magnitude_to_db(double magnitude, double floor_db);

/// One-shot transform of a single channel.
Spectrogram compute_cqt(std::span<const double> samples, double sample_rate, const CqtParams& params);

}  // namespace asc::dsp
