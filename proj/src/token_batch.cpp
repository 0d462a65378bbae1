// Copyright 2026 The geotile Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include <fmt/format.h>

#include "geotile/geo_core.hpp"
#include "geotile/tokenize.hpp"

namespace geotile {

namespace {

constexpr char kMagic[4] = {'G', 'J', 'T', 'B'};
constexpr std::uint32_t kVersion = 1;
// Guards allocations when reading untrusted headers.
constexpr std::uint64_t kMaxCells = std::uint64_t{1} << 32;

void put_u32(std::ostream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v), static_cast<char>(v >> 8), static_cast<char>(v >> 16),
                     static_cast<char>(v >> 24)};
  out.write(b, 4);
}

void put_f32(std::ostream& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw Error("token batch: truncated");
  return std::uint32_t{b[0]} | std::uint32_t{b[1]} << 8 | std::uint32_t{b[2]} << 16 | std::uint32_t{b[3]} << 24;
}

float get_f32(std::istream& in) { return std::bit_cast<float>(get_u32(in)); }

std::uint32_t checked_u32(std::size_t v, const char* what) {
  if (v > UINT32_MAX) throw Error(fmt::format("token batch: {} too large", what));
  return static_cast<std::uint32_t>(v);
}

}  // namespace

void write_token_batch(std::ostream& out, const TokenBatch& batch) {
  out.write(kMagic, 4);
  put_u32(out, kVersion);
  put_u32(out, checked_u32(batch.batch, "batch"));
  put_u32(out, checked_u32(batch.max_len, "max_len"));
  put_u32(out, checked_u32(batch.dim, "dim"));
  for (auto m : batch.modality) put_f32(out, static_cast<float>(static_cast<std::uint8_t>(m)));
  for (float v : batch.boxes) put_f32(out, v);
  for (float v : batch.payload) put_f32(out, v);
  for (auto v : batch.valid_len) put_f32(out, static_cast<float>(v));
  for (const auto& id : batch.tile_ids) {
    put_u32(out, checked_u32(id.size(), "tile id"));
    out.write(id.data(), static_cast<std::streamsize>(id.size()));
  }
  if (!out) throw Error("token batch: write failed");
}

TokenBatch read_token_batch(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || !std::equal(magic, magic + 4, kMagic)) throw Error("token batch: bad magic");
  const std::uint32_t version = get_u32(in);
  if (version != kVersion) throw Error(fmt::format("token batch: unsupported version {}", version));
  const std::size_t b = get_u32(in), l = get_u32(in), d = get_u32(in);
  if (std::uint64_t{b} * l * (9 + std::uint64_t{d}) > kMaxCells) throw Error("token batch: header too large");

  TokenBatch out(b, l, d);
  for (auto& m : out.modality) {
    const float v = get_f32(in);
    if (v != 0.0f && v != 1.0f && v != 2.0f) throw Error("token batch: bad modality code");
    m = static_cast<Modality>(static_cast<std::uint8_t>(v));
  }
  for (float& v : out.boxes) v = get_f32(in);
  for (float& v : out.payload) v = get_f32(in);
  for (auto& v : out.valid_len) {
    const float f = get_f32(in);
    if (!(f >= 0.0f && f <= static_cast<float>(l)) || f != std::floor(f)) throw Error("token batch: bad valid_len");
    v = static_cast<std::uint32_t>(f);
  }
  for (auto& id : out.tile_ids) {
    const std::uint32_t n = get_u32(in);
    if (n > 64) throw Error("token batch: tile id too long");
    id.resize(n);
    if (!in.read(id.data(), n)) throw Error("token batch: truncated");
  }
  return out;
}

void save_token_batch(const std::filesystem::path& path, const TokenBatch& batch) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(fmt::format("cannot write '{}'", path.string()));
  write_token_batch(out, batch);
}

TokenBatch load_token_batch(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(fmt::format("cannot open '{}'", path.string()));
  return read_token_batch(in);
}

}  // namespace geotile
