#include "asc/patches.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "asc/error.hpp"

namespace asc::dsp {
namespace {

// Source coordinate and blend weight for a corner-aligned resample.
struct Tap {
  Eigen::Index lo = 0;
  Eigen::Index hi = 0;
  double t = 0.0;
};

std::vector<Tap> taps(Eigen::Index src, int dst) {
  std::vector<Tap> out(static_cast<std::size_t>(dst));
  if (src == 1) return out;  // every output samples index 0
  for (int i = 0; i < dst; ++i) {
    const double pos = dst == 1 ? 0.0 : static_cast<double>(i) * static_cast<double>(src - 1) / (dst - 1);
    auto lo = static_cast<Eigen::Index>(std::floor(pos));
    lo = std::min(lo, src - 1);
    const Eigen::Index hi = std::min(lo + 1, src - 1);
    out[static_cast<std::size_t>(i)] = {lo, hi, pos - static_cast<double>(lo)};
  }
  return out;
}

}  // namespace

Spectrogram resize_spectrogram(const Spectrogram& spec, int target_width, int target_height) {
  if (spec.values.size() == 0) throw ValidationError("cannot resize an empty spectrogram");
  if (target_width <= 0 || target_height <= 0) throw ValidationError("resize target must be positive");
  Spectrogram out;
  out.segment_id = spec.segment_id;
  out.channel_index = spec.channel_index;
  if (spec.values.rows() == target_height && spec.values.cols() == target_width) {
    out.values = spec.values;
    return out;
  }
  const auto row_taps = taps(spec.values.rows(), target_height);
  const auto col_taps = taps(spec.values.cols(), target_width);
  out.values.resize(target_height, target_width);
  for (int c = 0; c < target_width; ++c) {
    const Tap& ct = col_taps[static_cast<std::size_t>(c)];
    for (int r = 0; r < target_height; ++r) {
      const Tap& rt = row_taps[static_cast<std::size_t>(r)];
      const double top = (1.0 - ct.t) * spec.values(rt.lo, ct.lo) + ct.t * spec.values(rt.lo, ct.hi);
      const double bottom = (1.0 - ct.t) * spec.values(rt.hi, ct.lo) + ct.t * spec.values(rt.hi, ct.hi);
      out.values(r, c) = (1.0 - rt.t) * top + rt.t * bottom;
    }
  }
  return out;
}

std::array<int, kPatchesPerSpectrogram> patch_start_columns() {
  std::array<int, kPatchesPerSpectrogram> starts{};
  for (int p = 0; p < kPatchesPerSpectrogram - 1; ++p) starts[static_cast<std::size_t>(p)] = p * kPatchStride;
  starts.back() = kResizeWidth - kPatchSize;
  return starts;
}

std::vector<Patch> extract_patches(const Spectrogram& spec) {
  if (spec.values.rows() != kResizeHeight || spec.values.cols() != kResizeWidth) {
    throw ValidationError("patch extraction needs a " + std::to_string(kResizeHeight) + "x" +
                          std::to_string(kResizeWidth) + " spectrogram, got " + std::to_string(spec.values.rows()) +
                          "x" + std::to_string(spec.values.cols()));
  }
  std::vector<Patch> patches;
  patches.reserve(kPatchesPerSpectrogram);
  const auto starts = patch_start_columns();
  for (int p = 0; p < kPatchesPerSpectrogram; ++p) {
    Patch patch;
    patch.values = spec.values.middleCols(starts[static_cast<std::size_t>(p)], kPatchSize);
    patch.segment_id = spec.segment_id;
    patch.channel_index = spec.channel_index;
    patch.patch_index = p;
    patches.push_back(std::move(patch));
  }
  return patches;
}

std::vector<Patch> prepare_segment(const AudioSegment& segment, const CqtParams& params) {
  segment.validate();
  if (segment.frame_count() == 0) throw ValidationError("segment " + segment.segment_id + " is empty");
  const CqtKernel kernel(segment.sample_rate, params);
  std::vector<Patch> patches;
  patches.reserve(segment.channel_count() * kPatchesPerSpectrogram);
  for (std::size_t c = 0; c < segment.channel_count(); ++c) {
    Spectrogram spec = kernel.transform(segment.channels[c]);
    spec.segment_id = segment.segment_id;
    spec.channel_index = static_cast<int>(c);
    auto channel_patches = extract_patches(resize_spectrogram(spec));
    for (auto& p : channel_patches) patches.push_back(std::move(p));
  }
  return patches;
}

std::string patch_file_name(const Patch& patch) {
  return patch.segment_id + "_" + std::to_string(patch.channel_index) + "_" + std::to_string(patch.patch_index) +
         ".bin";
}

void write_patch(const std::filesystem::path& path, const Patch& patch) {
  static_assert(std::endian::native == std::endian::little, "patch files assume a little-endian host");
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write " + path.string());
  const auto rows = static_cast<std::uint32_t>(patch.values.rows());
  const auto cols = static_cast<std::uint32_t>(patch.values.cols());
  out.write("ASCP", 4);
  out.write(reinterpret_cast<const char*>(&rows), sizeof rows);
  out.write(reinterpret_cast<const char*>(&cols), sizeof cols);
  for (Eigen::Index r = 0; r < patch.values.rows(); ++r) {
    for (Eigen::Index c = 0; c < patch.values.cols(); ++c) {
      const double v = patch.values(r, c);
      out.write(reinterpret_cast<const char*>(&v), sizeof v);
    }
  }
}

Eigen::MatrixXd read_patch_values(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  char magic[4];
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(&rows), sizeof rows);
  in.read(reinterpret_cast<char*>(&cols), sizeof cols);
  if (!in || std::memcmp(magic, "ASCP", 4) != 0) throw ValidationError("not a patch file: " + path.string());
  Eigen::MatrixXd values(rows, cols);
  for (std::uint32_t r = 0; r < rows; ++r) {
    for (std::uint32_t c = 0; c < cols; ++c) {
      double v = 0.0;
      in.read(reinterpret_cast<char*>(&v), sizeof v);
      values(r, c) = v;
    }
  }
  if (!in) throw ValidationError("truncated patch file: " + path.string());
  return values;
}

}  // namespace asc::dsp
