// Resizing spectrograms and cutting them into fixed-size patches.
#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "asc/audio.hpp"
#include "asc/cqt.hpp"

namespace asc::dsp {

inline constexpr int kResizeHeight = 143;
inline constexpr int kResizeWidth = 832;
inline constexpr int kPatchSize = 143;
inline constexpr int kPatchStride = 80;
inline constexpr int kPatchesPerSpectrogram = 10;

struct Patch {
  Eigen::MatrixXd values;  // kPatchSize x kPatchSize
  std::string segment_id;
  int channel_index = 0;
  int patch_index = 0;
};

/// Bilinear resize with corner-aligned sampling; an axis of length one is
/// replicated (nearest neighbour).
Spectrogram resize_spectrogram(const Spectrogram& spec, int target_width = kResizeWidth,
                               int target_height = kResizeHeight);

/// Start columns of the ten patches. The first nine advance by the stride;
/// the last one is right-aligned so the full width is covered.
std::array<int, kPatchesPerSpectrogram> patch_start_columns();

/// Cuts a 143 x 832 spectrogram into ten 143 x 143 patches ordered by start column.
std::vector<Patch> extract_patches(const Spectrogram& spec);

/// CQT -> resize -> patches for every channel; returns channel_count * 10
/// patches ordered by (channel, patch index).
std::vector<Patch> prepare_segment(const AudioSegment& segment, const CqtParams& params);

/// `<segment_id>_<channel>_<patch_index>.bin`
std::string patch_file_name(const Patch& patch);

/// Binary patch file: magic "ASCP", uint32 rows, uint32 cols, then row-major
/// little-endian float64 values.
void write_patch(const std::filesystem::path& path, const Patch& patch);
Eigen::MatrixXd read_patch_values(const std::filesystem::path& path);

}  // namespace asc::dsp
