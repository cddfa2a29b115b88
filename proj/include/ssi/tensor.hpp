// Copyright 2026 The ssi Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "ssi/error.hpp"

namespace ssi {

using Matrix = Eigen::MatrixXf;
using RowVector = Eigen::RowVectorXf;

/// Channels-by-pixels planar feature map; pixel (y, x) is column y * width + x.
struct FeatureMap {
  int height = 0;
  int width = 0;
  Matrix data;

  FeatureMap() = default;
  FeatureMap(int channels, int h, int w) : height(h), width(w), data(Matrix::Zero(channels, h * w)) {}
  FeatureMap(int h, int w, Matrix d) : height(h), width(w), data(std::move(d)) {
    if (data.cols() != static_cast<Eigen::Index>(h) * w)
      throw ShapeError("FeatureMap: data has " + std::to_string(data.cols()) + " columns, expected " +
                       std::to_string(h * w));
  }

  int channels() const { return static_cast<int>(data.rows()); }
  int pixels() const { return height * width; }
  float& at(int c, int y, int x) { return data(c, y * width + x); }
  float at(int c, int y, int x) const { return data(c, y * width + x); }

  bool same_shape(const FeatureMap& o) const {
    return height == o.height && width == o.width && channels() == o.channels();
  }

  bool all_finite() const { return data.allFinite(); }

  // Bitwise equality, so +0/-0 and NaN payloads are distinguished.
  bool bit_equal(const FeatureMap& o) const {
    return same_shape(o) &&
           std::memcmp(data.data(), o.data.data(), sizeof(float) * static_cast<std::size_t>(data.size())) == 0;
  }
};

/// RGB image with values in [0,1].
struct Image : FeatureMap {
  using FeatureMap::FeatureMap;
  Image() = default;
  explicit Image(FeatureMap m) : FeatureMap(std::move(m)) {}
};

/// Latent tensor x_t of the diffusion model.
struct Latent : FeatureMap {
  using FeatureMap::FeatureMap;
  Latent() = default;
  explicit Latent(FeatureMap m) : FeatureMap(std::move(m)) {}
};

inline void require_same_shape(const FeatureMap& a, const FeatureMap& b, const char* where) {
  if (!a.same_shape(b))
    throw ShapeError(std::string(where) + ": shape mismatch (" + std::to_string(a.channels()) + "x" +
                     std::to_string(a.height) + "x" + std::to_string(a.width) + " vs " +
                     std::to_string(b.channels()) + "x" + std::to_string(b.height) + "x" +
                     std::to_string(b.width) + ")");
}

// ---------------------------------------------------------------------------
// Checksums and seeds

inline std::uint64_t fnv1a64(std::span<const unsigned char> bytes,
                             std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t checksum(const Matrix& m, std::uint64_t h = 0xcbf29ce484222325ULL) {
  const auto* p = reinterpret_cast<const unsigned char*>(m.data());
  return fnv1a64({p, sizeof(float) * static_cast<std::size_t>(m.size())}, h);
}

inline std::uint64_t checksum(const FeatureMap& m) { return checksum(m.data); }

inline std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Every component draws from its own stream derived from the single
// top-level seed: derive_seed(seed, stream) = splitmix64(splitmix64(seed) ^ stream).
enum class SeedStream : std::uint64_t {
  denoiser = 1,
  autoencoder = 2,
  conditioning = 3,
  extractor = 4,
  benchmark = 5,
  training = 6,
};

inline std::uint64_t derive_seed(std::uint64_t seed, SeedStream stream) {
  return splitmix64(splitmix64(seed) ^ static_cast<std::uint64_t>(stream));
}

using Rng = std::mt19937_64;

inline Matrix random_normal(Eigen::Index rows, Eigen::Index cols, float stddev, Rng& rng) {
  std::normal_distribution<float> dist(0.0f, stddev);
  Matrix m(rows, cols);
  // Fill in a fixed (row-major) order so the draw sequence does not depend on storage.
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = dist(rng);
  return m;
}

// ---------------------------------------------------------------------------
// TLAT tensor files: "TLAT", u32 rank, rank x u32 dims, f32 values, all
// little-endian, row-major.

struct TlatTensor {
  std::vector<std::uint32_t> dims;
  std::vector<float> values;
};

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

inline std::uint32_t get_u32(const std::string& in, std::size_t& pos) {
  if (pos + 4 > in.size()) throw IoError("TLAT: truncated file");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i)
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  pos += 4;
  return v;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace detail

inline std::string encode_tlat(const TlatTensor& t) {
  std::size_t n = 1;
  for (auto d : t.dims) n *= d;
  if (n != t.values.size()) throw ShapeError("TLAT: dims do not match value count");
  std::string out = "TLAT";
  detail::put_u32(out, static_cast<std::uint32_t>(t.dims.size()));
  for (auto d : t.dims) detail::put_u32(out, d);
  for (float v : t.values) detail::put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

inline TlatTensor decode_tlat(const std::string& bytes) {
  if (bytes.size() < 8 || bytes.compare(0, 4, "TLAT") != 0) throw IoError("TLAT: bad magic");
  std::size_t pos = 4;
  TlatTensor t;
  const auto rank = detail::get_u32(bytes, pos);
  if (rank > 8) throw IoError("TLAT: implausible rank " + std::to_string(rank));
  std::size_t n = 1;
  for (std::uint32_t i = 0; i < rank; ++i) {
    t.dims.push_back(detail::get_u32(bytes, pos));
    n *= t.dims.back();
  }
  if (bytes.size() != pos + 4 * n) throw IoError("TLAT: payload size does not match dims");
  t.values.resize(n);
  for (auto& v : t.values) v = std::bit_cast<float>(detail::get_u32(bytes, pos));
  return t;
}

/// Rank-3 (channels, height, width) encoding of a feature map.
inline TlatTensor to_tlat(const FeatureMap& m) {
  TlatTensor t;
  t.dims = {static_cast<std::uint32_t>(m.channels()), static_cast<std::uint32_t>(m.height),
            static_cast<std::uint32_t>(m.width)};
  t.values.reserve(static_cast<std::size_t>(m.data.size()));
  for (int c = 0; c < m.channels(); ++c)
    for (int p = 0; p < m.pixels(); ++p) t.values.push_back(m.data(c, p));
  return t;
}

/// Accepts rank 3 (C,H,W) or rank 2 (H,W, read as one channel).
inline FeatureMap from_tlat(const TlatTensor& t) {
  if (t.dims.size() != 2 && t.dims.size() != 3) throw ShapeError("TLAT: expected rank 2 or 3");
  const bool r3 = t.dims.size() == 3;
  const int c = r3 ? static_cast<int>(t.dims[0]) : 1;
  const int h = static_cast<int>(t.dims[r3 ? 1 : 0]);
  const int w = static_cast<int>(t.dims[r3 ? 2 : 1]);
  FeatureMap m(c, h, w);
  std::size_t i = 0;
  for (int ch = 0; ch < c; ++ch)
    for (int p = 0; p < h * w; ++p) m.data(ch, p) = t.values[i++];
  return m;
}

inline void save_latent(const std::filesystem::path& path, const FeatureMap& m) {
  detail::write_file(path, encode_tlat(to_tlat(m)));
}

inline Latent load_latent(const std::filesystem::path& path) {
  return Latent(from_tlat(decode_tlat(detail::read_file(path))));
}

// ---------------------------------------------------------------------------
// Binary PPM (P6, maxval 255)

inline std::string encode_ppm(const Image& img) {
  if (img.channels() != 3) throw ShapeError("PPM: image must have 3 channels");
  std::string out = "P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  out.reserve(out.size() + static_cast<std::size_t>(3 * img.pixels()));
  for (int p = 0; p < img.pixels(); ++p)
    for (int c = 0; c < 3; ++c) {
      const float v = std::clamp(img.data(c, p), 0.0f, 1.0f);
      out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0f))));
    }
  return out;
}

inline Image decode_ppm(const std::string& bytes) {
  std::size_t pos = 0;
  auto next_token = [&]() {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
    const std::size_t begin = pos;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    return bytes.substr(begin, pos - begin);
  };
  if (next_token() != "P6") throw IoError("PPM: only binary P6 is supported");
  int w = 0, h = 0, maxval = 0;
  try {
    w = std::stoi(next_token());
    h = std::stoi(next_token());
    maxval = std::stoi(next_token());
  } catch (const std::exception&) {
    throw IoError("PPM: malformed header");
  }
  if (w <= 0 || h <= 0 || maxval != 255) throw IoError("PPM: unsupported dimensions or maxval");
  ++pos;  // single whitespace after maxval
  if (bytes.size() < pos + static_cast<std::size_t>(3 * w * h)) throw IoError("PPM: truncated pixel data");
  Image img(3, h, w);
  for (int p = 0; p < w * h; ++p)
    for (int c = 0; c < 3; ++c)
      img.data(c, p) = static_cast<float>(static_cast<unsigned char>(bytes[pos++])) / 255.0f;
  return img;
}

inline void save_ppm(const std::filesystem::path& path, const Image& img) {
  detail::write_file(path, encode_ppm(img));
}

inline Image load_ppm(const std::filesystem::path& path) { return decode_ppm(detail::read_file(path)); }

}  // namespace ssi
