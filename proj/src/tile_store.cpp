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

#include "geotile/tile_store.hpp"

#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>
#include <zlib.h>

#include "geotile/tef.hpp"

namespace fs = std::filesystem;

namespace geotile {

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(fmt::format("cannot open '{}'", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

void write_file(const fs::path& path, std::string_view data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  out.close();
  if (!out) throw Error(fmt::format("cannot write '{}'", path.string()));
}

}  // namespace

std::size_t StoreIndex::tile_count() const {
  std::size_t n = 0;
  for (const auto& g : groups) n += g.tiles.size();
  return n;
}

std::string gzip_compress(std::string_view data) {
  z_stream zs{};
  if (deflateInit2(&zs, Z_DEFAULT_COMPRESSION, Z_DEFLATED, 15 + 16, 8, Z_DEFAULT_STRATEGY) != Z_OK)
    throw Error("deflateInit2 failed");
  std::string out(deflateBound(&zs, static_cast<uLong>(data.size())) + 32, '\0');
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(data.data()));
  zs.avail_in = static_cast<uInt>(data.size());
  zs.next_out = reinterpret_cast<Bytef*>(out.data());
  zs.avail_out = static_cast<uInt>(out.size());
  const int ret = deflate(&zs, Z_FINISH);
  out.resize(zs.total_out);
  deflateEnd(&zs);
  if (ret != Z_STREAM_END) throw Error("gzip compression failed");
  return out;
}

std::string gzip_decompress(std::string_view data) {
  z_stream zs{};
  if (inflateInit2(&zs, 15 + 16) != Z_OK) throw Error("inflateInit2 failed");
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(data.data()));
  zs.avail_in = static_cast<uInt>(data.size());
  std::string out;
  char buf[1 << 16];
  int ret;
  do {
    zs.next_out = reinterpret_cast<Bytef*>(buf);
    zs.avail_out = sizeof(buf);
    ret = inflate(&zs, Z_NO_FLUSH);
    if (ret != Z_OK && ret != Z_STREAM_END) {
      inflateEnd(&zs);
      throw Error("gzip stream is corrupt");
    }
    out.append(buf, sizeof(buf) - zs.avail_out);
  } while (ret != Z_STREAM_END);
  inflateEnd(&zs);
  return out;
}

std::string group_file_name(const GroupKey& key) { return to_string(key) + ".tefgz"; }

void write_group_file(const fs::path& path, std::span<const Tile> tiles) {
  std::ostringstream ss;
  write_tef(ss, tiles);
  write_file(path, gzip_compress(ss.str()));
}

std::vector<Tile> read_group_file(const fs::path& path) {
  std::istringstream ss(gzip_decompress(read_file(path)));
  try {
    return parse_tef(ss);
  } catch (const TefError& err) {
    throw Error(fmt::format("{}: {}", path.string(), err.what()));
  }
}

void write_store(const fs::path& dir, std::span<const TileGroup> groups) {
  const fs::path target = fs::absolute(dir).lexically_normal();
  const fs::path tmp = target.parent_path() / (target.filename().string() + ".tmp");
  const fs::path old = target.parent_path() / (target.filename().string() + ".old");
  fs::remove_all(tmp);
  fs::create_directories(tmp);

  nlohmann::ordered_json index = nlohmann::ordered_json::object();
  nlohmann::ordered_json entries = nlohmann::ordered_json::array();
  for (const auto& g : groups) {
    if (g.tiles.empty()) continue;
    const std::string file = group_file_name(g.key);
    write_group_file(tmp / file, g.tiles);
    nlohmann::ordered_json ids = nlohmann::ordered_json::array();
    for (const auto& t : g.tiles) ids.push_back(to_string(t.id));
    entries.push_back({{"group", to_string(g.key)}, {"file", file}, {"tiles", std::move(ids)}});
  }
  index["groups"] = std::move(entries);
  write_file(tmp / "index.json", index.dump(1) + "\n");

  fs::remove_all(old);
  if (fs::exists(target)) fs::rename(target, old);
  fs::rename(tmp, target);
  fs::remove_all(old);
}

StoreIndex read_store_index(const fs::path& dir) {
  const fs::path path = dir / "index.json";
  if (!fs::exists(path)) throw Error(fmt::format("'{}' is not a tile store (no index.json)", dir.string()));
  StoreIndex index;
  try {
    const auto doc = nlohmann::json::parse(read_file(path));
    for (const auto& g : doc.at("groups")) {
      StoreGroupEntry entry;
      const TileId first = parse_tile_id(g.at("group").get<std::string>());
      entry.key = {first.zoom, first.x, first.y};
      entry.file = g.at("file").get<std::string>();
      for (const auto& t : g.at("tiles")) entry.tiles.push_back(parse_tile_id(t.get<std::string>()));
      index.groups.push_back(std::move(entry));
    }
  } catch (const nlohmann::json::exception& err) {
    throw Error(fmt::format("{}: {}", path.string(), err.what()));
  }
  return index;
}

std::vector<TileGroup> read_store_groups(const fs::path& dir) {
  const StoreIndex index = read_store_index(dir);
  std::vector<TileGroup> out;
  for (const auto& g : index.groups) out.push_back({g.key, read_group_file(dir / g.file)});
  return out;
}

std::vector<Tile> read_store(const fs::path& dir) {
  std::vector<Tile> out;
  for (auto& g : read_store_groups(dir))
    for (auto& t : g.tiles) out.push_back(std::move(t));
  return out;
}

}  // namespace geotile
