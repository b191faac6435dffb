#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>

#include "asc/audio.hpp"
#include "asc/error.hpp"
#include "asc/random.hpp"

namespace asc::dsp {
namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>((v >> 8) & 0xFF));
}

struct ParsedWav {
  WavInfo info;
  std::vector<unsigned char> data;
};

ParsedWav parse(const std::filesystem::path& path, bool want_data) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open wave file " + path.string());
  std::array<unsigned char, 12> riff{};
  in.read(reinterpret_cast<char*>(riff.data()), riff.size());
  if (!in || std::memcmp(riff.data(), "RIFF", 4) != 0 || std::memcmp(riff.data() + 8, "WAVE", 4) != 0) {
    throw ValidationError("not a RIFF/WAVE file: " + path.string());
  }

  ParsedWav out;
  bool have_fmt = false;
  bool have_data = false;
  std::uint16_t block_align = 0;
  while (!have_data) {
    std::array<unsigned char, 8> header{};
    in.read(reinterpret_cast<char*>(header.data()), header.size());
    if (!in) break;
    const std::uint32_t size = read_u32(header.data() + 4);
    if (std::memcmp(header.data(), "fmt ", 4) == 0) {
      if (size < 16) throw ValidationError("truncated fmt chunk in " + path.string());
      std::vector<unsigned char> fmt(size);
      in.read(reinterpret_cast<char*>(fmt.data()), size);
      std::uint16_t format = read_u16(fmt.data());
      if (format == kFormatExtensible && size >= 26) format = read_u16(fmt.data() + 24);
      if (format != kFormatPcm) throw ValidationError("unsupported wave encoding (PCM only): " + path.string());
      out.info.channels = read_u16(fmt.data() + 2);
      out.info.sample_rate = static_cast<int>(read_u32(fmt.data() + 4));
      block_align = read_u16(fmt.data() + 12);
      out.info.bits_per_sample = read_u16(fmt.data() + 14);
      if (out.info.bits_per_sample != 16 && out.info.bits_per_sample != 24 && out.info.bits_per_sample != 32) {
        throw ValidationError("unsupported bit depth " + std::to_string(out.info.bits_per_sample) + " in " +
                              path.string());
      }
      if (out.info.channels <= 0 || block_align != out.info.channels * out.info.bits_per_sample / 8) {
        throw ValidationError("inconsistent fmt chunk in " + path.string());
      }
      have_fmt = true;
    } else if (std::memcmp(header.data(), "data", 4) == 0) {
      if (!have_fmt) throw ValidationError("data chunk before fmt chunk in " + path.string());
      out.info.frames = size / block_align;
      if (want_data) {
        out.data.resize(static_cast<std::size_t>(out.info.frames) * block_align);
        in.read(reinterpret_cast<char*>(out.data.data()), static_cast<std::streamsize>(out.data.size()));
        if (!in) throw ValidationError("truncated data chunk in " + path.string());
      }
      have_data = true;
    } else {
      in.seekg(size + (size & 1U), std::ios::cur);
    }
  }
  if (!have_fmt || !have_data) throw ValidationError("missing fmt or data chunk in " + path.string());
  return out;
}

}  // namespace

void AudioSegment::validate() const {
  if (!(sample_rate > 0.0)) throw ValidationError("segment " + segment_id + ": sample rate must be positive");
  if (channels.empty()) throw ValidationError("segment " + segment_id + ": no channels");
  for (const auto& ch : channels) {
    if (ch.size() != channels.front().size()) {
      throw ValidationError("segment " + segment_id + ": channels differ in length");
    }
  }
}

WavInfo probe_wav(const std::filesystem::path& path) { return parse(path, false).info; }

AudioSegment read_wav(const std::filesystem::path& path, std::string segment_id) {
  ParsedWav wav = parse(path, true);
  AudioSegment seg;
  seg.segment_id = segment_id.empty() ? path.stem().string() : std::move(segment_id);
  seg.sample_rate = wav.info.sample_rate;
  const int nch = wav.info.channels;
  const int bytes = wav.info.bits_per_sample / 8;
  const double scale = std::ldexp(1.0, wav.info.bits_per_sample - 1);
  seg.channels.assign(static_cast<std::size_t>(nch), std::vector<double>(wav.info.frames));
  const unsigned char* p = wav.data.data();
  for (std::size_t f = 0; f < wav.info.frames; ++f) {
    for (int c = 0; c < nch; ++c) {
      std::int32_t v = 0;
      if (bytes == 2) {
        v = static_cast<std::int16_t>(read_u16(p));
      } else if (bytes == 3) {
        v = static_cast<std::int32_t>(p[0] | (p[1] << 8) | (p[2] << 16));
        if (v & 0x800000) v -= 0x1000000;
      } else {
        v = static_cast<std::int32_t>(read_u32(p));
      }
      seg.channels[static_cast<std::size_t>(c)][f] = static_cast<double>(v) / scale;
      p += bytes;
    }
  }
  seg.validate();
  return seg;
}

void write_wav(const std::filesystem::path& path, const AudioSegment& segment, int bits_per_sample) {
  segment.validate();
  if (bits_per_sample != 16 && bits_per_sample != 24) {
    throw ValidationError("write_wav supports 16 or 24 bits");
  }
  const int bytes = bits_per_sample / 8;
  const auto nch = static_cast<std::uint16_t>(segment.channel_count());
  const auto frames = segment.frame_count();
  const auto rate = static_cast<std::uint32_t>(std::lround(segment.sample_rate));
  const std::uint32_t data_size = static_cast<std::uint32_t>(frames * nch * bytes);
  const double max_code = std::ldexp(1.0, bits_per_sample - 1) - 1.0;

  std::string out;
  out.reserve(44 + data_size);
  out += "RIFF";
  put_u32(out, 36 + data_size);
  out += "WAVEfmt ";
  put_u32(out, 16);
  put_u16(out, kFormatPcm);
  put_u16(out, nch);
  put_u32(out, rate);
  put_u32(out, rate * nch * bytes);
  put_u16(out, static_cast<std::uint16_t>(nch * bytes));
  put_u16(out, static_cast<std::uint16_t>(bits_per_sample));
  out += "data";
  put_u32(out, data_size);
  for (std::size_t f = 0; f < frames; ++f) {
    for (std::size_t c = 0; c < nch; ++c) {
      const double s = std::clamp(segment.channels[c][f], -1.0, 1.0);
      auto code = static_cast<std::int32_t>(std::lround(s * max_code));
      for (int b = 0; b < bytes; ++b) out.push_back(static_cast<char>((code >> (8 * b)) & 0xFF));
    }
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw ValidationError("cannot write " + path.string());
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
}

std::vector<double> synthesize(const ToneSpec& spec, double sample_rate, double duration_seconds,
                               std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(std::llround(duration_seconds * sample_rate));
  std::vector<double> out(n, 0.0);
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / sample_rate;
    double v = 0.0;
    for (double f : spec.frequencies) v += spec.amplitude * std::sin(2.0 * std::numbers::pi * f * t);
    if (spec.noise_amplitude > 0.0) v += spec.noise_amplitude * rng.uniform(-1.0, 1.0);
    out[i] = std::clamp(v, -1.0, 1.0);
  }
  return out;
}

}  // namespace asc::dsp
