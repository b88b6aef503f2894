// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vfib Authors.

#include "vfib/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>

#include "vfib/error.hpp"

namespace vfib {

namespace {

constexpr char kTensorMagic[4] = {'V', 'F', 'T', 'B'};
constexpr char kArchiveMagic[4] = {'V', 'F', 'T', 'A'};
constexpr std::uint8_t kArchiveVersion = 1;

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
 public:
  Reader(std::span<const std::uint8_t> bytes, std::size_t& offset)
      : bytes_(bytes), offset_(offset) {}

  void need(std::size_t n, const char* what) const {
    if (offset_ > bytes_.size() || bytes_.size() - offset_ < n) {
      throw FormatError(std::string("truncated data: expected ") + what, offset_);
    }
  }
  std::uint8_t u8(const char* what) {
    need(1, what);
    return bytes_[offset_++];
  }
  std::uint16_t u16(const char* what) {
    need(2, what);
    const std::uint16_t v = static_cast<std::uint16_t>(
        bytes_[offset_] | (static_cast<std::uint16_t>(bytes_[offset_ + 1]) << 8));
    offset_ += 2;
    return v;
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(bytes_[offset_ + static_cast<std::size_t>(i)])
           << (8 * i);
    }
    offset_ += 4;
    return v;
  }
  std::size_t offset() const { return offset_; }
  std::span<const std::uint8_t> take(std::size_t n, const char* what) {
    need(n, what);
    auto s = bytes_.subspan(offset_, n);
    offset_ += n;
    return s;
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t& offset_;
};

std::string format_g9(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

}  // namespace

std::vector<std::uint8_t> encode_tensor(const Tensor& t) {
  if (t.rank() > 255) throw ShapeError("tensor rank exceeds 255");
  std::vector<std::uint8_t> out(std::begin(kTensorMagic), std::end(kTensorMagic));
  out.push_back(kTensorFormatVersion);
  out.push_back(static_cast<std::uint8_t>(t.rank()));
  for (std::size_t d : t.shape()) {
    if (d > UINT32_MAX) throw ShapeError("tensor dimension exceeds 32 bits");
    put_u32(out, static_cast<std::uint32_t>(d));
  }
  out.reserve(out.size() + 4 * t.size());
  for (double x : t.data()) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(x)));
  return out;
}

Tensor decode_tensor(std::span<const std::uint8_t> bytes, std::size_t& offset) {
  Reader r(bytes, offset);
  const std::size_t start = r.offset();
  auto magic = r.take(4, "magic");
  if (std::memcmp(magic.data(), kTensorMagic, 4) != 0) {
    throw FormatError("bad tensor magic", start);
  }
  const std::size_t version_at = r.offset();
  if (r.u8("version") != kTensorFormatVersion) {
    throw FormatError("unsupported tensor format version", version_at);
  }
  const std::size_t rank = r.u8("rank");
  std::vector<std::size_t> shape;
  std::size_t count = 1;
  for (std::size_t i = 0; i < rank; ++i) {
    const std::size_t at = r.offset();
    const std::uint32_t d = r.u32("dimension");
    if (d == 0) throw FormatError("zero tensor dimension", at);
    shape.push_back(d);
    count *= d;
  }
  const std::size_t payload_at = r.offset();
  if ((bytes.size() - payload_at) / 4 < count) {
    throw FormatError("payload shorter than " + std::to_string(4 * count) +
                          " bytes for shape " + shape_string(shape),
                      payload_at);
  }
  std::vector<double> data(count);
  for (std::size_t i = 0; i < count; ++i) {
    data[i] = static_cast<double>(std::bit_cast<float>(r.u32("payload")));
  }
  return Tensor(std::move(shape), std::move(data));
}

Tensor decode_tensor(std::span<const std::uint8_t> bytes) {
  std::size_t offset = 0;
  Tensor t = decode_tensor(bytes, offset);
  if (offset != bytes.size()) {
    throw FormatError("trailing bytes after tensor payload", offset);
  }
  return t;
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::filesystem::path& path,
                 std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  write_bytes(path, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

void write_tensor(const std::filesystem::path& path, const Tensor& t) {
  write_bytes(path, encode_tensor(t));
}

Tensor read_tensor(const std::filesystem::path& path) {
  const auto bytes = read_bytes(path);
  try {
    return decode_tensor(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.detail(), e.offset());
  }
}

Tensor narrow32(const Tensor& t) {
  Tensor out = t;
  for (double& x : out.data()) x = static_cast<double>(static_cast<float>(x));
  return out;
}

void write_archive(const std::filesystem::path& path, const ModelParams& params) {
  std::vector<std::uint8_t> out(std::begin(kArchiveMagic), std::end(kArchiveMagic));
  out.push_back(kArchiveVersion);
  put_u32(out, static_cast<std::uint32_t>(params.size()));
  for (const auto& [name, tensor] : params) {
    if (name.size() > UINT16_MAX) throw ConfigError("parameter name too long");
    put_u16(out, static_cast<std::uint16_t>(name.size()));
    out.insert(out.end(), name.begin(), name.end());
    const auto record = encode_tensor(tensor);
    out.insert(out.end(), record.begin(), record.end());
  }
  write_bytes(path, out);
}

ModelParams read_archive(const std::filesystem::path& path) {
  const auto bytes = read_bytes(path);
  std::size_t offset = 0;
  Reader r(bytes, offset);
  try {
    auto magic = r.take(4, "archive magic");
    if (std::memcmp(magic.data(), kArchiveMagic, 4) != 0) {
      throw FormatError("bad archive magic", 0);
    }
    if (r.u8("archive version") != kArchiveVersion) {
      throw FormatError("unsupported archive version", 4);
    }
    const std::uint32_t count = r.u32("entry count");
    ModelParams params;
    for (std::uint32_t i = 0; i < count; ++i) {
      const std::size_t len = r.u16("name length");
      auto name = r.take(len, "name");
      std::string key(name.begin(), name.end());
      Tensor t = decode_tensor(bytes, offset);
      params.emplace(std::move(key), std::move(t));
    }
    if (offset != bytes.size()) {
      throw FormatError("trailing bytes after archive", offset);
    }
    return params;
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.detail(), e.offset());
  }
}

FeatureBundle load_feature_bundle(const std::filesystem::path& dir,
                                  const std::string& id, std::size_t shots) {
  const auto spatial = dir / (id + ".spatial.vftb");
  const auto shot_path = dir / (id + ".shots.vftb");
  for (const auto& p : {spatial, shot_path}) {
    if (!std::filesystem::exists(p)) {
      throw IoError("missing feature file " + p.string() + " for instance '" +
                    id + "'");
    }
  }
  FeatureBundle b;
  b.spatial = read_tensor(spatial);
  b.shots = select_shots(read_tensor(shot_path), shots);
  b.validate();
  return b;
}

void save_feature_bundle(const std::filesystem::path& dir, const std::string& id,
                         const FeatureBundle& bundle) {
  write_tensor(dir / (id + ".spatial.vftb"), bundle.spatial);
  write_tensor(dir / (id + ".shots.vftb"), bundle.shots);
}

Dataset load_dataset(const std::filesystem::path& manifest,
                     const std::filesystem::path& features_dir, std::size_t shots) {
  Dataset data;
  data.instances = read_manifest(manifest);
  for (const ClozeInstance& inst : data.instances) {
    if (data.features.contains(inst.features)) continue;
    data.features.emplace(inst.features,
                          load_feature_bundle(features_dir, inst.features, shots));
  }
  return data;
}

void save_checkpoint(const std::filesystem::path& dir, const TrainedModel& model) {
  std::filesystem::create_directories(dir);
  write_archive(dir / "params.vfta", model.params);
  write_text(dir / "config.json", model.config.to_json().dump(2) + "\n");
  write_text(dir / "vocab.json", model.vocab.to_json().dump() + "\n");
}

TrainedModel load_checkpoint(const std::filesystem::path& dir) {
  auto parse = [&](const char* name) {
    const auto bytes = read_bytes(dir / name);
    try {
      return nlohmann::json::parse(bytes.begin(), bytes.end());
    } catch (const nlohmann::json::exception& e) {
      throw IoError((dir / name).string() + ": " + e.what());
    }
  };
  TrainedModel model;
  model.config = TrainConfig::from_json(parse("config.json"));
  model.vocab = Vocabulary::from_json(parse("vocab.json"));
  model.params = read_archive(dir / "params.vfta");
  return model;
}

std::vector<std::uint8_t> heatmap_pixels(std::span<const double> p,
                                         std::size_t rows, std::size_t cols) {
  if (rows * cols != p.size() || p.empty()) {
    throw ShapeError("attention of length " + std::to_string(p.size()) +
                     " does not fill a " + std::to_string(rows) + "x" +
                     std::to_string(cols) + " grid");
  }
  const auto [lo, hi] = std::minmax_element(p.begin(), p.end());
  std::vector<std::uint8_t> out(p.size(), 128);
  if (*hi == *lo) return out;
  const double range = *hi - *lo;
  for (std::size_t i = 0; i < p.size(); ++i) {
    out[i] = static_cast<std::uint8_t>(std::lround(255.0 * (p[i] - *lo) / range));
  }
  return out;
}

std::vector<std::uint8_t> encode_pgm(std::span<const std::uint8_t> pixels,
                                     std::size_t rows, std::size_t cols,
                                     std::size_t upsample) {
  if (upsample == 0) throw ConfigError("upsample factor must be positive");
  if (pixels.size() != rows * cols) throw ShapeError("pixel count does not match grid");
  const std::size_t h = rows * upsample;
  const std::size_t w = cols * upsample;
  const std::string header =
      "P5\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(out.size() + h * w);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      out.push_back(pixels[(y / upsample) * cols + x / upsample]);
    }
  }
  return out;
}

void export_attention(const PredictionRecord& record, std::size_t rows,
                      std::size_t cols, const std::filesystem::path& out_dir,
                      std::size_t upsample) {
  const auto pixels = heatmap_pixels(record.p_sp, rows, cols);
  std::filesystem::create_directories(out_dir);
  std::string csv;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      if (c) csv += ',';
      csv += format_g9(record.p_sp[r * cols + c]);
    }
    csv += '\n';
  }
  write_text(out_dir / "p_sp.csv", csv);
  std::string tp;
  for (std::size_t i = 0; i < record.p_tp.size(); ++i) {
    if (i) tp += ',';
    tp += format_g9(record.p_tp[i]);
  }
  write_text(out_dir / "p_tp.csv", tp + "\n");
  write_bytes(out_dir / "spatial.pgm", encode_pgm(pixels, rows, cols, upsample));
}

}  // namespace vfib
