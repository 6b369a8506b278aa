#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "lmkit/common.hpp"
#include "lmkit/encoder.hpp"
#include "lmkit/output_layer.hpp"

namespace lmkit {

// Layout (all integers little-endian):
//   8 bytes  magic "LMKCKPT" + format version byte
//   4 x u64  encoder dims: k, m_in, h, m
//   u64      blob count
//   per blob: u32 name length, name bytes, u64 rows, u64 cols,
//             rows*cols little-endian float32 values
// Trainable parameters are stored float32; fixed tables (input embeddings,
// SemFit targets) are derived from the config and not stored.

inline constexpr char kCheckpointMagic[8] = {'L', 'M', 'K', 'C', 'K', 'P', 'T', '\x01'};

struct CheckpointBlob {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<float> data;
};

struct Checkpoint {
  EncoderDims dims;
  std::vector<CheckpointBlob> blobs;

  const CheckpointBlob* find(const std::string& name) const {
    for (const auto& b : blobs)
      if (b.name == name) return &b;
    return nullptr;
  }

  /// float32 elements across all blobs — equals trainable parameter count.
  std::size_t total_values() const {
    std::size_t n = 0;
    for (const auto& b : blobs) n += b.data.size();
    return n;
  }
};

namespace detail {

inline void ck_put_u64(std::ostream& out, std::uint64_t x) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(x >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

inline std::uint64_t ck_get_u64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  if (!in) throw UsageError("checkpoint: truncated integer field");
  std::uint64_t x = 0;
  for (int i = 0; i < 8; ++i) x |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return x;
}

inline void ck_put_u32(std::ostream& out, std::uint32_t x) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(x >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 4);
}

inline std::uint32_t ck_get_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw UsageError("checkpoint: truncated integer field");
  std::uint32_t x = 0;
  for (int i = 0; i < 4; ++i) x |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return x;
}

inline void ck_put_f32(std::ostream& out, float v) {
  std::uint32_t u;
  std::memcpy(&u, &v, 4);
  ck_put_u32(out, u);
}

inline float ck_get_f32(std::istream& in) {
  const std::uint32_t u = ck_get_u32(in);
  float v;
  std::memcpy(&v, &u, 4);
  return v;
}

inline CheckpointBlob make_blob(std::string name, std::size_t rows, std::size_t cols,
                                const Vec& values) {
  CheckpointBlob b;
  b.name = std::move(name);
  b.rows = rows;
  b.cols = cols;
  b.data.reserve(values.size());
  for (double v : values) b.data.push_back(static_cast<float>(v));
  return b;
}

}  // namespace detail

inline Checkpoint snapshot(const EncoderParams& enc, const OutputLayer& layer) {
  Checkpoint c;
  c.dims = enc.dims;
  c.blobs.push_back(
      detail::make_blob("encoder.p_in", enc.p_in.rows, enc.p_in.cols, enc.p_in.data));
  c.blobs.push_back(detail::make_blob("encoder.b", 1, enc.b.size(), enc.b));
  c.blobs.push_back(
      detail::make_blob("encoder.p_out", enc.p_out.rows, enc.p_out.cols, enc.p_out.data));
  c.blobs.push_back(detail::make_blob("encoder.gain", 1, enc.gain.size(), enc.gain));
  c.blobs.push_back(detail::make_blob("encoder.bias", 1, enc.bias.size(), enc.bias));
  const Vec out_params = layer.flat_params();
  c.blobs.push_back(detail::make_blob("output.params", 1, out_params.size(), out_params));
  return c;
}

inline void write_checkpoint(std::ostream& out, const Checkpoint& c) {
  out.write(kCheckpointMagic, 8);
  detail::ck_put_u64(out, c.dims.k);
  detail::ck_put_u64(out, c.dims.m_in);
  detail::ck_put_u64(out, c.dims.h);
  detail::ck_put_u64(out, c.dims.m);
  detail::ck_put_u64(out, c.blobs.size());
  for (const auto& b : c.blobs) {
    detail::ck_put_u32(out, static_cast<std::uint32_t>(b.name.size()));
    out.write(b.name.data(), static_cast<std::streamsize>(b.name.size()));
    detail::ck_put_u64(out, b.rows);
    detail::ck_put_u64(out, b.cols);
    for (float v : b.data) detail::ck_put_f32(out, v);
  }
  if (!out) throw UsageError("checkpoint: write failed");
}

inline void write_checkpoint_file(const std::string& path, const Checkpoint& c) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write checkpoint file: " + path);
  write_checkpoint(out, c);
}

inline Checkpoint read_checkpoint(std::istream& in) {
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kCheckpointMagic, 7) != 0)
    throw UsageError("checkpoint: bad magic (not a checkpoint file)");
  if (magic[7] != kCheckpointMagic[7])
    throw UsageError("checkpoint: unsupported format version " +
                     std::to_string(static_cast<int>(magic[7])));
  Checkpoint c;
  c.dims.k = detail::ck_get_u64(in);
  c.dims.m_in = detail::ck_get_u64(in);
  c.dims.h = detail::ck_get_u64(in);
  c.dims.m = detail::ck_get_u64(in);
  const std::uint64_t n = detail::ck_get_u64(in);
  for (std::uint64_t i = 0; i < n; ++i) {
    CheckpointBlob b;
    const std::uint32_t len = detail::ck_get_u32(in);
    b.name.resize(len);
    in.read(b.name.data(), len);
    if (!in) throw UsageError("checkpoint: truncated blob name");
    b.rows = detail::ck_get_u64(in);
    b.cols = detail::ck_get_u64(in);
    b.data.resize(b.rows * b.cols);
    for (float& v : b.data) v = detail::ck_get_f32(in);
    c.blobs.push_back(std::move(b));
  }
  return c;
}

inline Checkpoint read_checkpoint_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open checkpoint file: " + path);
  return read_checkpoint(in);
}

namespace detail {

inline Vec blob_values(const Checkpoint& c, const std::string& name, std::size_t want) {
  const CheckpointBlob* b = c.find(name);
  if (!b) throw ContractError("checkpoint: missing blob \"" + name + "\"");
  if (b->data.size() != want)
    throw ContractError("checkpoint: blob \"" + name + "\" has " +
                        std::to_string(b->data.size()) + " values, expected " +
                        std::to_string(want));
  Vec out;
  out.reserve(b->data.size());
  for (float v : b->data) out.push_back(static_cast<double>(v));
  return out;
}

}  // namespace detail

/// Restore a parameter set and output layer from a snapshot. Dims must
/// match what the caller constructed from its config.
inline void restore(const Checkpoint& c, EncoderParams& enc, OutputLayer& layer) {
  if (!(c.dims.k == enc.dims.k && c.dims.m_in == enc.dims.m_in && c.dims.h == enc.dims.h &&
        c.dims.m == enc.dims.m))
    throw ContractError("checkpoint dims do not match the configured encoder");
  enc.p_in.data = detail::blob_values(c, "encoder.p_in", enc.p_in.size());
  enc.b = detail::blob_values(c, "encoder.b", enc.b.size());
  enc.p_out.data = detail::blob_values(c, "encoder.p_out", enc.p_out.size());
  enc.gain = detail::blob_values(c, "encoder.gain", enc.gain.size());
  enc.bias = detail::blob_values(c, "encoder.bias", enc.bias.size());
  layer.set_flat_params(detail::blob_values(c, "output.params", layer.trainable_param_count()));
}

}  // namespace lmkit
