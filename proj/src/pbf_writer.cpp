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

#include <cmath>
#include <ostream>
#include <unordered_map>

#include <zlib.h>

#include "geotile/pbf.hpp"
#include "protobuf.hpp"

namespace geotile {

namespace {

class StringTable {
 public:
  StringTable() { strings_.emplace_back(); }  // index 0 is reserved

  std::uint32_t intern(const std::string& s) {
    auto [it, inserted] = index_.try_emplace(s, static_cast<std::uint32_t>(strings_.size()));
    if (inserted) strings_.push_back(s);
    return it->second;
  }

  std::string encode() const {
    proto::Writer w;
    for (const auto& s : strings_) w.field_bytes(1, s);
    return w.take();
  }

 private:
  std::vector<std::string> strings_;
  std::unordered_map<std::string, std::uint32_t> index_;
};

std::int64_t to_nano_units(double deg) {
  // Default granularity of 100 nanodegrees.
  return static_cast<std::int64_t>(std::llround(deg * 1e7));
}

std::string packed_varints(const std::vector<std::uint64_t>& values) {
  proto::Writer w;
  for (auto v : values) w.varint(v);
  return w.take();
}

void write_tags(proto::Writer& w, const Tags& tags, StringTable& st) {
  std::vector<std::uint64_t> keys, vals;
  for (const auto& t : tags) {
    keys.push_back(st.intern(t.key));
    vals.push_back(st.intern(t.value));
  }
  if (!keys.empty()) {
    w.field_bytes(2, packed_varints(keys));
    w.field_bytes(3, packed_varints(vals));
  }
}

}  // namespace

PbfWriter::PbfWriter(std::ostream& out, std::size_t block_size) : out_(out), block_size_(block_size) {}

PbfWriter::~PbfWriter() {
  try {
    finish();
  } catch (...) {
  }
}

void PbfWriter::add(const RawElement& e) {
  if (!header_written_) write_header();
  switch (e.kind) {
    case EntityKind::node: nodes_.push_back(e); break;
    case EntityKind::way: ways_.push_back(e); break;
    case EntityKind::relation: relations_.push_back(e); break;
  }
  if (nodes_.size() + ways_.size() + relations_.size() >= block_size_) flush_block();
}

void PbfWriter::finish() {
  if (finished_) return;
  if (!header_written_) write_header();
  flush_block();
  out_.flush();
  finished_ = true;
}

void PbfWriter::write_header() {
  proto::Writer hb;
  hb.field_bytes(4, "OsmSchema-V0.6");
  hb.field_bytes(4, "DenseNodes");
  hb.field_bytes(16, "geotile");
  write_blob("OSMHeader", hb.str());
  header_written_ = true;
}

void PbfWriter::flush_block() {
  if (nodes_.empty() && ways_.empty() && relations_.empty()) return;
  StringTable st;
  std::string groups;

  if (!nodes_.empty()) {
    std::vector<std::uint64_t> ids, lats, lons, kv;
    std::int64_t pid = 0, plat = 0, plon = 0;
    bool any_tags = false;
    for (const auto& n : nodes_) {
      const std::int64_t lat = to_nano_units(n.location.lat), lon = to_nano_units(n.location.lon);
      ids.push_back(proto::zigzag(n.id - pid));
      lats.push_back(proto::zigzag(lat - plat));
      lons.push_back(proto::zigzag(lon - plon));
      pid = n.id;
      plat = lat;
      plon = lon;
      for (const auto& t : n.tags) {
        kv.push_back(st.intern(t.key));
        kv.push_back(st.intern(t.value));
        any_tags = true;
      }
      kv.push_back(0);
    }
    proto::Writer dense;
    dense.field_bytes(1, packed_varints(ids));
    dense.field_bytes(8, packed_varints(lats));
    dense.field_bytes(9, packed_varints(lons));
    if (any_tags) dense.field_bytes(10, packed_varints(kv));
    proto::Writer group;
    group.field_bytes(2, dense.str());
    proto::Writer wrap;
    wrap.field_bytes(2, group.str());
    groups += wrap.str();
  }

  if (!ways_.empty()) {
    proto::Writer group;
    for (const auto& way : ways_) {
      proto::Writer w;
      w.field_varint(1, static_cast<std::uint64_t>(way.id));
      write_tags(w, way.tags, st);
      std::vector<std::uint64_t> refs;
      std::int64_t prev = 0;
      for (auto ref : way.refs) {
        refs.push_back(proto::zigzag(ref - prev));
        prev = ref;
      }
      w.field_bytes(8, packed_varints(refs));
      group.field_bytes(3, w.str());
    }
    proto::Writer wrap;
    wrap.field_bytes(2, group.str());
    groups += wrap.str();
  }

  if (!relations_.empty()) {
    proto::Writer group;
    for (const auto& rel : relations_) {
      proto::Writer w;
      w.field_varint(1, static_cast<std::uint64_t>(rel.id));
      write_tags(w, rel.tags, st);
      std::vector<std::uint64_t> roles, memids, types;
      std::int64_t prev = 0;
      for (const auto& m : rel.members) {
        roles.push_back(st.intern(m.role));
        memids.push_back(proto::zigzag(m.ref - prev));
        types.push_back(static_cast<std::uint64_t>(m.type));
        prev = m.ref;
      }
      w.field_bytes(8, packed_varints(roles));
      w.field_bytes(9, packed_varints(memids));
      w.field_bytes(10, packed_varints(types));
      group.field_bytes(4, w.str());
    }
    proto::Writer wrap;
    wrap.field_bytes(2, group.str());
    groups += wrap.str();
  }

  proto::Writer block;
  block.field_bytes(1, st.encode());
  std::string payload = block.take() + groups;
  write_blob("OSMData", payload);

  nodes_.clear();
  ways_.clear();
  relations_.clear();
}

void PbfWriter::write_blob(std::string_view type, const std::string& payload) {
  uLongf zsize = compressBound(static_cast<uLong>(payload.size()));
  std::string zipped(zsize, '\0');
  if (compress2(reinterpret_cast<Bytef*>(zipped.data()), &zsize,
                reinterpret_cast<const Bytef*>(payload.data()), static_cast<uLong>(payload.size()),
                Z_DEFAULT_COMPRESSION) != Z_OK)
    throw Error("zlib compression failed");
  zipped.resize(zsize);

  proto::Writer blob;
  blob.field_varint(2, payload.size());
  blob.field_bytes(3, zipped);

  proto::Writer header;
  header.field_bytes(1, type);
  header.field_varint(3, blob.str().size());

  const auto n = static_cast<std::uint32_t>(header.str().size());
  const char len_be[4] = {static_cast<char>(n >> 24), static_cast<char>(n >> 16), static_cast<char>(n >> 8),
                          static_cast<char>(n)};
  out_.write(len_be, 4);
  out_.write(header.str().data(), static_cast<std::streamsize>(header.str().size()));
  out_.write(blob.str().data(), static_cast<std::streamsize>(blob.str().size()));
  if (!out_) throw Error("PBF write failed");
}

}  // namespace geotile
