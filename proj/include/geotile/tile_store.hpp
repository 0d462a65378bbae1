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

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "geotile/osm_ingest.hpp"
#include "geotile/types.hpp"

namespace geotile {

// A tile store is a directory holding one gzip-compressed TEF file per
// TileGroup, named <zoom>_<gx>_<gy>.tefgz, plus index.json listing every
// group's file and tile ids. Stores are written to a sibling temp directory
// and renamed into place, so readers never observe a partial store.

struct StoreGroupEntry {
  GroupKey key;
  std::string file;
  std::vector<TileId> tiles;
};

struct StoreIndex {
  std::vector<StoreGroupEntry> groups;  // sorted by key

  std::size_t tile_count() const;
};

/// Deterministic gzip (mtime 0, no file name) so identical inputs produce
/// identical bytes.
std::string gzip_compress(std::string_view data);
std::string gzip_decompress(std::string_view data);

std::string group_file_name(const GroupKey& key);

void write_group_file(const std::filesystem::path& path, std::span<const Tile> tiles);
std::vector<Tile> read_group_file(const std::filesystem::path& path);

/// Replaces `dir` with a store holding `groups` (empty groups are skipped).
void write_store(const std::filesystem::path& dir, std::span<const TileGroup> groups);

StoreIndex read_store_index(const std::filesystem::path& dir);

/// Loads every tile of a store in index order.
std::vector<Tile> read_store(const std::filesystem::path& dir);

/// Loads a store back into its groups.
std::vector<TileGroup> read_store_groups(const std::filesystem::path& dir);

}  // namespace geotile
