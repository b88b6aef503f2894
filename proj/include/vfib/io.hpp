// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vfib Authors.

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "vfib/attention.hpp"
#include "vfib/fusion.hpp"
#include "vfib/tensor.hpp"
#include "vfib/train.hpp"

namespace vfib {

// Tensor file layout, all integers little-endian:
//   "VFTB" | version u8 (=1) | rank u8 | rank x dim u32 | payload f32[prod(dims)]
// Values are narrowed from double to IEEE-754 binary32 on write.
inline constexpr std::uint8_t kTensorFormatVersion = 1;

std::vector<std::uint8_t> encode_tensor(const Tensor& t);
/// Decodes one tensor starting at `offset`; advances `offset` past it.
/// Throws FormatError with the failing byte offset.
Tensor decode_tensor(std::span<const std::uint8_t> bytes, std::size_t& offset);
Tensor decode_tensor(std::span<const std::uint8_t> bytes);

void write_tensor(const std::filesystem::path& path, const Tensor& t);
Tensor read_tensor(const std::filesystem::path& path);

/// Rounds every value through binary32.
Tensor narrow32(const Tensor& t);

// Parameter archive: "VFTA" | version u8 | count u32 | count x
// (name length u16 | name bytes | tensor record), names in sorted order.
void write_archive(const std::filesystem::path& path, const ModelParams& params);
ModelParams read_archive(const std::filesystem::path& path);

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path);
void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_text(const std::filesystem::path& path, const std::string& text);

/// Feature files for id X live at <dir>/X.spatial.vftb (frames x m x c_raw)
/// and <dir>/X.shots.vftb (n x z). Shots are padded or sampled to `shots`.
FeatureBundle load_feature_bundle(const std::filesystem::path& dir,
                                  const std::string& id, std::size_t shots);
void save_feature_bundle(const std::filesystem::path& dir, const std::string& id,
                         const FeatureBundle& bundle);

/// Reads a manifest and every feature bundle it references. A missing
/// feature file raises IoError naming the instance.
Dataset load_dataset(const std::filesystem::path& manifest,
                     const std::filesystem::path& features_dir, std::size_t shots);

// Checkpoint directory: params.vfta, config.json, vocab.json.
void save_checkpoint(const std::filesystem::path& dir, const TrainedModel& model);
TrainedModel load_checkpoint(const std::filesystem::path& dir);

/// 8-bit grey levels for an attention map: min-max scaled to [0, 255], or all
/// 128 when every value is equal. Throws ShapeError unless rows*cols = |p|.
std::vector<std::uint8_t> heatmap_pixels(std::span<const double> p,
                                         std::size_t rows, std::size_t cols);

/// Binary PGM (P5) bytes, each cell upsampled by an integer factor.
std::vector<std::uint8_t> encode_pgm(std::span<const std::uint8_t> pixels,
                                     std::size_t rows, std::size_t cols,
                                     std::size_t upsample = 1);

/// Writes p_sp.csv (one line per grid row), p_tp.csv (one line) and
/// spatial.pgm into `out_dir`. Values are printed with 9 significant digits.
void export_attention(const PredictionRecord& record, std::size_t rows,
                      std::size_t cols, const std::filesystem::path& out_dir,
                      std::size_t upsample = 1);

}  // namespace vfib
