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

#include "geotile/tokenize.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>

#include <fmt/format.h>

#include "geotile/geo_core.hpp"
#include "geotile/random.hpp"

namespace geotile {

std::string canonical_tag(const TagKV& tag) { return tag.key + "=" + tag.value; }

TagVocab::TagVocab(std::vector<std::string> tags) : tags_(std::move(tags)) {
  for (std::uint32_t i = 0; i < tags_.size(); ++i)
    if (!index_.emplace(tags_[i], i).second) throw Error(fmt::format("duplicate vocab entry '{}'", tags_[i]));
}

std::optional<std::uint32_t> TagVocab::find(std::string_view tag) const {
  auto it = index_.find(std::string(tag));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

namespace {

std::set<std::string> distinct_tags(const Entity& e) {
  std::set<std::string> out;
  for (const auto& t : e.tags) out.insert(canonical_tag(t));
  return out;
}

}  // namespace

std::map<std::string, std::uint64_t> corpus_tag_counts(std::span<const Tile> tiles) {
  std::map<std::string, std::uint64_t> out;
  for (const auto& t : tiles)
    for (const auto& e : t.entities)
      for (const auto& tag : distinct_tags(e)) ++out[tag];
  return out;
}

TagVocab prune_vocab(const std::map<std::string, std::uint64_t>& counts, std::uint64_t min_occurrences,
                     std::size_t max_size) {
  std::vector<std::pair<std::string, std::uint64_t>> kept;
  for (const auto& [tag, n] : counts)
    if (n >= min_occurrences) kept.emplace_back(tag, n);
  std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  if (kept.size() > max_size) kept.resize(max_size);
  std::vector<std::string> tags;
  for (auto& [tag, n] : kept) tags.push_back(std::move(tag));
  return TagVocab(std::move(tags));
}

std::vector<std::uint32_t> tile_tag_counts(const Tile& t, const TagVocab& vocab) {
  std::vector<std::uint32_t> out(vocab.size(), 0);
  for (const auto& e : t.entities)
    for (const auto& tag : distinct_tags(e))
      if (auto i = vocab.find(tag)) ++out[*i];
  return out;
}

std::vector<std::uint8_t> entity_tag_multihot(const Entity& e, const TagVocab& vocab) {
  std::vector<std::uint8_t> out(vocab.size(), 0);
  for (const auto& t : e.tags)
    if (auto i = vocab.find(t)) out[*i] = 1;
  return out;
}

EmbeddingTable EmbeddingTable::parse(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("d=", 0) != 0) throw Error("embedding table: missing 'd=<int>' header");
  std::size_t dim = 0;
  const char* first = line.data() + 2;
  const char* last = line.data() + line.size();
  while (last > first && (last[-1] == '\r' || last[-1] == ' ')) --last;
  auto [p, ec] = std::from_chars(first, last, dim);
  if (ec != std::errc{} || p != last || dim == 0) throw Error(fmt::format("embedding table: bad header '{}'", line));

  EmbeddingTable table(dim);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw Error(fmt::format("embedding table line {}: missing tab", line_no));
    std::vector<float> v;
    v.reserve(dim);
    const char* c = line.data() + tab + 1;
    const char* end = line.data() + line.size();
    while (c < end) {
      while (c < end && *c == ' ') ++c;
      if (c == end) break;
      float x;
      auto [q, e2] = std::from_chars(c, end, x);
      if (e2 != std::errc{} || !std::isfinite(x))
        throw Error(fmt::format("embedding table line {}: bad number", line_no));
      v.push_back(x);
      c = q;
    }
    if (v.size() != dim)
      throw Error(fmt::format("embedding table line {}: expected {} values, got {}", line_no, dim, v.size()));
    table.insert(line.substr(0, tab), std::move(v));
  }
  return table;
}

EmbeddingTable EmbeddingTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(fmt::format("cannot open '{}'", path.string()));
  return parse(in);
}

void EmbeddingTable::write(std::ostream& out) const {
  out << "d=" << dim_ << '\n';
  for (const auto& [tag, v] : vectors_) {
    out << tag << '\t';
    for (std::size_t i = 0; i < v.size(); ++i) out << (i ? " " : "") << fmt::format("{}", v[i]);
    out << '\n';
  }
}

void EmbeddingTable::insert(std::string tag, std::vector<float> v) {
  if (v.size() != dim_) throw Error(fmt::format("embedding for '{}' has dimension {}, table has {}", tag, v.size(), dim_));
  vectors_[std::move(tag)] = std::move(v);
}

const std::vector<float>* EmbeddingTable::find(std::string_view tag) const {
  auto it = vectors_.find(tag);
  return it == vectors_.end() ? nullptr : &it->second;
}

std::vector<float> entity_embed_mean(const Entity& e, const EmbeddingTable& table, std::size_t* missing) {
  std::vector<double> acc(table.dim(), 0.0);
  std::size_t n = 0;
  for (const auto& tag : distinct_tags(e)) {
    const auto* v = table.find(tag);
    if (!v) continue;
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += (*v)[i];
    ++n;
  }
  std::vector<float> out(table.dim(), 0.0f);
  if (n == 0) {
    if (missing) ++*missing;
    return out;
  }
  for (std::size_t i = 0; i < acc.size(); ++i) out[i] = static_cast<float>(acc[i] / static_cast<double>(n));
  return out;
}

std::vector<float> tagpool_region(const Tile& t, const EmbeddingTable& table) {
  if (t.entities.empty()) throw Error(fmt::format("tagpool of empty tile {}", to_string(t.id)));
  const std::size_t d = table.dim();
  std::vector<float> mx(d, -INFINITY);
  std::vector<double> sum(d, 0.0);
  for (const auto& e : t.entities) {
    const auto v = entity_embed_mean(e, table);
    for (std::size_t i = 0; i < d; ++i) {
      mx[i] = std::max(mx[i], v[i]);
      sum[i] += v[i];
    }
  }
  std::vector<float> out(mx);
  for (std::size_t i = 0; i < d; ++i) out.push_back(static_cast<float>(sum[i] / static_cast<double>(t.entities.size())));
  return out;
}

std::array<double, 8> posenc_input(const MinBox& box) {
  std::array<NormPoint, 4> c = box.corners;
  double area2 = 0.0;
  for (int i = 0; i < 4; ++i) area2 += c[i].x * c[(i + 1) % 4].y - c[(i + 1) % 4].x * c[i].y;
  if (area2 < 0.0) std::reverse(c.begin(), c.end());
  const auto start = std::min_element(c.begin(), c.end(), [](const NormPoint& a, const NormPoint& b) {
    return a.y != b.y ? a.y < b.y : a.x < b.x;
  });
  std::rotate(c.begin(), start, c.end());
  std::array<double, 8> out{};
  for (int i = 0; i < 4; ++i) {
    out[2 * i] = c[i].x;
    out[2 * i + 1] = c[i].y;
  }
  return out;
}

std::vector<MinBox> image_patch_boxes(int grid, bool class_token) {
  std::vector<MinBox> out;
  const double g = grid;
  for (int r = 0; r < grid; ++r) {
    for (int c = 0; c < grid; ++c) {
      const double x0 = c / g, x1 = (c + 1) / g, y0 = r / g, y1 = (r + 1) / g;
      out.push_back(MinBox{{NormPoint{x0, y0}, NormPoint{x1, y0}, NormPoint{x1, y1}, NormPoint{x0, y1}}});
    }
  }
  if (class_token) out.push_back(MinBox{{NormPoint{0, 0}, NormPoint{1, 0}, NormPoint{1, 1}, NormPoint{0, 1}}});
  return out;
}

std::vector<DropFlags> modality_dropout(std::size_t n, std::uint64_t seed, double p) {
  Rng rng(derive_seed(seed, "modality_dropout"));
  std::vector<DropFlags> out(n);
  for (auto& f : out) {
    do {
      f.drop_tag = rng.bernoulli(p);
      f.drop_geom = rng.bernoulli(p);
    } while (f.drop_tag && f.drop_geom);
  }
  return out;
}

TokenBatch::TokenBatch(std::size_t b, std::size_t l, std::size_t d)
    : batch(b),
      max_len(l),
      dim(d),
      modality(b * l, Modality::pad),
      boxes(b * l * 8, 0.0f),
      payload(b * l * d, 0.0f),
      valid_len(b, 0),
      tile_ids(b) {}

std::vector<std::uint8_t> TokenBatch::valid_mask() const {
  std::vector<std::uint8_t> out(batch * max_len, 0);
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t i = 0; i < valid_len[b]; ++i) out[row(b, i)] = 1;
  return out;
}

std::size_t TokenBatch::total_valid() const {
  std::size_t n = 0;
  for (auto v : valid_len) n += v;
  return n;
}

TokenBatch assemble_token_batch(std::span<const Tile> tiles, const EmbeddingTable& table, const AssembleOptions& opts) {
  const auto patches = opts.include_image ? image_patch_boxes(kPatchGrid, opts.class_token) : std::vector<MinBox>{};
  std::size_t max_len = 0;
  for (const auto& t : tiles) {
    if (t.entities.empty()) throw Error(fmt::format("tile {} has no entities", to_string(t.id)));
    max_len = std::max(max_len, t.entities.size() + patches.size());
  }
  TokenBatch out(tiles.size(), max_len, table.dim());
  auto put_box = [](float* dst, const std::array<double, 8>& v) {
    for (int k = 0; k < 8; ++k) dst[k] = static_cast<float>(v[k]);
  };
  for (std::size_t b = 0; b < tiles.size(); ++b) {
    const Tile& t = tiles[b];
    out.tile_ids[b] = to_string(t.id);
    std::size_t i = 0;
    for (const auto& e : t.entities) {
      out.modality[out.row(b, i)] = Modality::entity;
      put_box(out.box(b, i), posenc_input(e.minbox));
      const auto v = entity_embed_mean(e, table);
      std::copy(v.begin(), v.end(), out.vec(b, i));
      ++i;
    }
    for (const auto& p : patches) {
      out.modality[out.row(b, i)] = Modality::image;
      put_box(out.box(b, i), posenc_input(p));
      ++i;
    }
    out.valid_len[b] = static_cast<std::uint32_t>(i);
  }
  return out;
}

}  // namespace geotile
