// Audio segments and PCM wave file I/O.
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace asc::dsp {

/// A multi-channel audio clip. Samples are real amplitudes in [-1, 1].
struct AudioSegment {
  std::string segment_id;
  double sample_rate = 0.0;
  std::vector<std::vector<double>> channels;

  std::size_t channel_count() const { return channels.size(); }
  std::size_t frame_count() const { return channels.empty() ? 0 : channels.front().size(); }
  double duration_seconds() const { return static_cast<double>(frame_count()) / sample_rate; }

  /// Throws ValidationError unless sample_rate > 0, at least one channel exists
  /// and all channels have equal length.
  void validate() const;
};

struct WavInfo {
  int channels = 0;
  int sample_rate = 0;
  int bits_per_sample = 0;
  std::size_t frames = 0;
};

/// Reads only the format header of a PCM wave file.
WavInfo probe_wav(const std::filesystem::path& path);

/// Reads 16-, 24- or 32-bit integer PCM (plain or WAVE_FORMAT_EXTENSIBLE).
AudioSegment read_wav(const std::filesystem::path& path, std::string segment_id = {});

/// Writes 16- or 24-bit integer PCM. Samples are clipped to [-1, 1].
void write_wav(const std::filesystem::path& path, const AudioSegment& segment, int bits_per_sample = 16);

/// Sum of sinusoids plus optional white noise; the generator used for tests and
/// synthetic corpora.
struct ToneSpec {
  std::vector<double> frequencies;  // Hz
  double amplitude = 0.5;           // per partial
  double noise_amplitude = 0.0;
};

std::vector<double> synthesize(const ToneSpec& spec, double sample_rate, double duration_seconds,
                               std::uint64_t seed);

}  // namespace asc::dsp
