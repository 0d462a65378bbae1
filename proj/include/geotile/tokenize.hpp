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

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "geotile/types.hpp"

namespace geotile {

/// "key=value".
std::string canonical_tag(const TagKV& tag);

inline constexpr std::size_t kMaxVocabSize = 12500;

class TagVocab {
 public:
  TagVocab() = default;
  /// Entries must be unique.
  explicit TagVocab(std::vector<std::string> tags);

  std::size_t size() const { return tags_.size(); }
  const std::vector<std::string>& tags() const { return tags_; }
  std::optional<std::uint32_t> find(std::string_view tag) const;
  std::optional<std::uint32_t> find(const TagKV& tag) const { return find(canonical_tag(tag)); }

 private:
  std::vector<std::string> tags_;
  std::unordered_map<std::string, std::uint32_t> index_;
};

/// Number of entities carrying each tag over a corpus.
std::map<std::string, std::uint64_t> corpus_tag_counts(std::span<const Tile> tiles);

/// Keeps tags seen at least `min_occurrences` times, ordered by descending
/// count then lexicographically, truncated to `max_size`.
TagVocab prune_vocab(const std::map<std::string, std::uint64_t>& counts, std::uint64_t min_occurrences = 10,
                     std::size_t max_size = kMaxVocabSize);

/// Component i: number of entities of `t` carrying vocab tag i.
std::vector<std::uint32_t> tile_tag_counts(const Tile& t, const TagVocab& vocab);

/// Component i: 1 iff `e` carries vocab tag i.
std::vector<std::uint8_t> entity_tag_multihot(const Entity& e, const TagVocab& vocab);

class EmbeddingTable {
 public:
  explicit EmbeddingTable(std::size_t dim = 0) : dim_(dim) {}

  /// Header line `d=<int>`, then `key=value<TAB>f1 f2 ... fd` per line.
  static EmbeddingTable parse(std::istream& in);
  static EmbeddingTable load(const std::filesystem::path& path);
  void write(std::ostream& out) const;

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return vectors_.size(); }
  void insert(std::string tag, std::vector<float> v);
  const std::vector<float>* find(std::string_view tag) const;

 private:
  std::size_t dim_;
  std::map<std::string, std::vector<float>, std::less<>> vectors_;
};

/// Mean of the entity's in-table tag vectors (each distinct tag once). With no
/// in-table tag the result is zero and `*missing` is incremented.
std::vector<float> entity_embed_mean(const Entity& e, const EmbeddingTable& table, std::size_t* missing = nullptr);

/// Componentwise max over entity vectors, followed by the componentwise mean.
std::vector<float> tagpool_region(const Tile& t, const EmbeddingTable& table);

/// Corners flattened counter-clockwise from the corner with minimal (y, x).
std::array<double, 8> posenc_input(const MinBox& box);

inline constexpr int kPatchGrid = 14;

/// Row-major grid of axis-aligned patch boxes, row 0 at y = 0. With
/// `class_token` a final box covering the whole tile is appended.
std::vector<MinBox> image_patch_boxes(int grid = kPatchGrid, bool class_token = false);

struct DropFlags {
  bool drop_tag = false;
  bool drop_geom = false;

  friend bool operator==(const DropFlags&, const DropFlags&) = default;
};

/// Per entity, each modality is dropped with probability p; a draw dropping
/// both is redrawn.
std::vector<DropFlags> modality_dropout(std::size_t n, std::uint64_t seed, double p = 0.3);

enum class Modality : std::uint8_t { pad = 0, entity = 1, image = 2 };

/// Padded token arrays, sample-major. Rows at index >= valid_len are PAD: zero
/// box, zero payload, modality pad.
struct TokenBatch {
  std::size_t batch = 0;
  std::size_t max_len = 0;
  std::size_t dim = 0;
  std::vector<Modality> modality;      // batch * max_len
  std::vector<float> boxes;            // batch * max_len * 8
  std::vector<float> payload;          // batch * max_len * dim
  std::vector<std::uint32_t> valid_len;  // batch
  std::vector<std::string> tile_ids;     // batch

  TokenBatch() = default;
  TokenBatch(std::size_t batch, std::size_t max_len, std::size_t dim);

  std::size_t row(std::size_t b, std::size_t i) const { return b * max_len + i; }
  float* box(std::size_t b, std::size_t i) { return boxes.data() + row(b, i) * 8; }
  const float* box(std::size_t b, std::size_t i) const { return boxes.data() + row(b, i) * 8; }
  float* vec(std::size_t b, std::size_t i) { return payload.data() + row(b, i) * dim; }
  const float* vec(std::size_t b, std::size_t i) const { return payload.data() + row(b, i) * dim; }

  /// One byte per row, 1 for valid tokens.
  std::vector<std::uint8_t> valid_mask() const;
  std::size_t total_valid() const;

  friend bool operator==(const TokenBatch&, const TokenBatch&) = default;
};

struct AssembleOptions {
  bool include_image = false;
  bool class_token = false;
};

/// Entity tokens (payload = entity_embed_mean, box = posenc_input(minbox))
/// followed by optional image patch tokens with zero payload.
TokenBatch assemble_token_batch(std::span<const Tile> tiles, const EmbeddingTable& table,
                                const AssembleOptions& opts = {});

/// Binary dump: "GJTB", u32 version, u32 batch, max_len, dim, then
/// little-endian float32 arrays modality, boxes, payload, valid_len, then per
/// sample a u32 length and the tile id bytes.
void write_token_batch(std::ostream& out, const TokenBatch& batch);
TokenBatch read_token_batch(std::istream& in);
void save_token_batch(const std::filesystem::path& path, const TokenBatch& batch);
TokenBatch load_token_batch(const std::filesystem::path& path);

}  // namespace geotile
