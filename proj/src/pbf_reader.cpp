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

#include <array>
#include <fstream>
#include <istream>

#include <fmt/format.h>
#include <zlib.h>

#include "geotile/pbf.hpp"
#include "protobuf.hpp"

namespace geotile {

PbfError::PbfError(const std::string& what, std::uint64_t offset)
    : Error(fmt::format("malformed PBF at byte {}: {}", offset, what)), offset_(offset) {}

namespace {

using proto::Reader;
using proto::WireType;

constexpr std::uint32_t kMaxBlobHeaderSize = 64 * 1024;
constexpr std::uint32_t kMaxBlobSize = 32 * 1024 * 1024;

struct BlockContext {
  std::vector<std::string_view> strings;
  std::int64_t granularity = 100;
  std::int64_t lat_offset = 0;
  std::int64_t lon_offset = 0;

  std::string_view str(std::uint64_t index, const Reader& at) const {
    if (index >= strings.size()) at.fail(fmt::format("string index {} out of range", index));
    return strings[index];
  }

  GeoPoint location(std::int64_t lat, std::int64_t lon) const {
    return GeoPoint{1e-9 * static_cast<double>(lon_offset + granularity * lon),
                    1e-9 * static_cast<double>(lat_offset + granularity * lat)};
  }
};

// Repeated scalar fields may arrive packed (length-delimited) or one per key.
template <class F>
void read_repeated(Reader& r, WireType type, F&& on_value) {
  if (type == proto::kLength) {
    Reader packed = r.bytes();
    while (!packed.done()) on_value(packed.varint());
  } else if (type == proto::kVarint) {
    on_value(r.varint());
  } else {
    r.fail("unexpected wire type for repeated scalar");
  }
}

Tags make_tags(const std::vector<std::uint64_t>& keys, const std::vector<std::uint64_t>& vals,
               const BlockContext& ctx, const Reader& at) {
  if (keys.size() != vals.size()) at.fail("tag key/value count mismatch");
  Tags tags;
  tags.reserve(keys.size());
  for (std::size_t i = 0; i < keys.size(); ++i)
    tags.push_back({std::string(ctx.str(keys[i], at)), std::string(ctx.str(vals[i], at))});
  return tags;
}

void read_node(Reader r, const BlockContext& ctx, const ElementSink& sink) {
  RawElement e;
  e.kind = EntityKind::node;
  std::vector<std::uint64_t> keys, vals;
  std::int64_t lat = 0, lon = 0;
  std::uint32_t field;
  WireType type;
  const Reader start = r;
  while (r.next(field, type)) {
    switch (field) {
      case 1: e.id = r.svarint(); break;
      case 2: read_repeated(r, type, [&](std::uint64_t v) { keys.push_back(v); }); break;
      case 3: read_repeated(r, type, [&](std::uint64_t v) { vals.push_back(v); }); break;
      case 8: lat = r.svarint(); break;
      case 9: lon = r.svarint(); break;
      default: r.skip(type);
    }
  }
  e.tags = make_tags(keys, vals, ctx, start);
  e.location = ctx.location(lat, lon);
  sink(std::move(e));
}

void read_dense(Reader r, const BlockContext& ctx, const ElementSink& sink) {
  std::vector<std::int64_t> ids, lats, lons;
  std::vector<std::uint64_t> keys_vals;
  std::uint32_t field;
  WireType type;
  const Reader start = r;
  std::int64_t acc = 0;
  while (r.next(field, type)) {
    switch (field) {
      case 1:
        acc = 0;
        read_repeated(r, type, [&](std::uint64_t v) { ids.push_back(acc += proto::unzigzag(v)); });
        break;
      case 8:
        acc = 0;
        read_repeated(r, type, [&](std::uint64_t v) { lats.push_back(acc += proto::unzigzag(v)); });
        break;
      case 9:
        acc = 0;
        read_repeated(r, type, [&](std::uint64_t v) { lons.push_back(acc += proto::unzigzag(v)); });
        break;
      case 10:
        read_repeated(r, type, [&](std::uint64_t v) { keys_vals.push_back(v); });
        break;
      default:
        r.skip(type);
    }
  }
  if (lats.size() != ids.size() || lons.size() != ids.size())
    start.fail("dense node array lengths differ");

  std::size_t kv = 0;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    RawElement e;
    e.kind = EntityKind::node;
    e.id = ids[i];
    e.location = ctx.location(lats[i], lons[i]);
    // keys_vals is empty when no node in the block has tags.
    while (kv < keys_vals.size() && keys_vals[kv] != 0) {
      if (kv + 1 >= keys_vals.size()) start.fail("dense keys_vals truncated");
      e.tags.push_back({std::string(ctx.str(keys_vals[kv], start)),
                        std::string(ctx.str(keys_vals[kv + 1], start))});
      kv += 2;
    }
    if (kv < keys_vals.size()) ++kv;  // the 0 delimiter
    sink(std::move(e));
  }
}

void read_way(Reader r, const BlockContext& ctx, const ElementSink& sink) {
  RawElement e;
  e.kind = EntityKind::way;
  std::vector<std::uint64_t> keys, vals;
  std::uint32_t field;
  WireType type;
  const Reader start = r;
  std::int64_t acc = 0;
  while (r.next(field, type)) {
    switch (field) {
      case 1: e.id = static_cast<std::int64_t>(r.varint()); break;
      case 2: read_repeated(r, type, [&](std::uint64_t v) { keys.push_back(v); }); break;
      case 3: read_repeated(r, type, [&](std::uint64_t v) { vals.push_back(v); }); break;
      case 8:
        read_repeated(r, type, [&](std::uint64_t v) { e.refs.push_back(acc += proto::unzigzag(v)); });
        break;
      default: r.skip(type);
    }
  }
  e.tags = make_tags(keys, vals, ctx, start);
  sink(std::move(e));
}

void read_relation(Reader r, const BlockContext& ctx, const ElementSink& sink) {
  RawElement e;
  e.kind = EntityKind::relation;
  std::vector<std::uint64_t> keys, vals, roles, types;
  std::vector<std::int64_t> memids;
  std::uint32_t field;
  WireType type;
  const Reader start = r;
  std::int64_t acc = 0;
  while (r.next(field, type)) {
    switch (field) {
      case 1: e.id = static_cast<std::int64_t>(r.varint()); break;
      case 2: read_repeated(r, type, [&](std::uint64_t v) { keys.push_back(v); }); break;
      case 3: read_repeated(r, type, [&](std::uint64_t v) { vals.push_back(v); }); break;
      case 8: read_repeated(r, type, [&](std::uint64_t v) { roles.push_back(v); }); break;
      case 9:
        read_repeated(r, type, [&](std::uint64_t v) { memids.push_back(acc += proto::unzigzag(v)); });
        break;
      case 10: read_repeated(r, type, [&](std::uint64_t v) { types.push_back(v); }); break;
      default: r.skip(type);
    }
  }
  if (roles.size() != memids.size() || types.size() != memids.size())
    start.fail("relation member array lengths differ");
  e.tags = make_tags(keys, vals, ctx, start);
  for (std::size_t i = 0; i < memids.size(); ++i) {
    if (types[i] > 2) start.fail(fmt::format("unknown member type {}", types[i]));
    e.members.push_back({static_cast<EntityKind>(types[i]), memids[i],
                         std::string(ctx.str(roles[i], start))});
  }
  sink(std::move(e));
}

void read_primitive_block(Reader r, const ElementSink& sink) {
  BlockContext ctx;
  std::vector<Reader> groups;
  std::uint32_t field;
  WireType type;
  while (r.next(field, type)) {
    switch (field) {
      case 1: {
        Reader st = r.bytes();
        std::uint32_t f;
        WireType t;
        while (st.next(f, t)) {
          if (f == 1 && t == proto::kLength)
            ctx.strings.push_back(st.string());
          else
            st.skip(t);
        }
        break;
      }
      case 2: groups.push_back(r.bytes()); break;
      case 17: ctx.granularity = static_cast<std::int64_t>(r.varint()); break;
      case 19: ctx.lat_offset = static_cast<std::int64_t>(r.varint()); break;
      case 20: ctx.lon_offset = static_cast<std::int64_t>(r.varint()); break;
      default: r.skip(type);
    }
  }
  for (Reader& g : groups) {
    while (g.next(field, type)) {
      switch (field) {
        case 1: read_node(g.bytes(), ctx, sink); break;
        case 2: read_dense(g.bytes(), ctx, sink); break;
        case 3: read_way(g.bytes(), ctx, sink); break;
        case 4: read_relation(g.bytes(), ctx, sink); break;
        default: g.skip(type);
      }
    }
  }
}

void read_header_block(Reader r) {
  std::uint32_t field;
  WireType type;
  while (r.next(field, type)) {
    if (field == 4 && type == proto::kLength) {
      const std::string_view feature = r.string();
      if (feature != "OsmSchema-V0.6" && feature != "DenseNodes")
        r.fail(fmt::format("unsupported required feature '{}'", feature));
    } else {
      r.skip(type);
    }
  }
}

std::vector<std::uint8_t> inflate_blob(std::span<const std::uint8_t> zipped, std::uint64_t raw_size,
                                       std::uint64_t offset) {
  if (raw_size > kMaxBlobSize) throw PbfError("blob raw_size too large", offset);
  std::vector<std::uint8_t> out(raw_size);
  uLongf size = static_cast<uLongf>(raw_size);
  const int ret = uncompress(out.data(), &size, zipped.data(), static_cast<uLong>(zipped.size()));
  if (ret != Z_OK || size != raw_size) throw PbfError("zlib blob failed to inflate", offset);
  return out;
}

bool read_exact(std::istream& in, char* dst, std::size_t n) {
  in.read(dst, static_cast<std::streamsize>(n));
  return static_cast<std::size_t>(in.gcount()) == n;
}

}  // namespace

void parse_pbf(std::istream& in, const ElementSink& sink) {
  std::uint64_t offset = 0;
  bool seen_header = false;
  std::vector<std::uint8_t> header_buf, blob_buf;

  while (true) {
    std::array<unsigned char, 4> len_be{};
    in.read(reinterpret_cast<char*>(len_be.data()), 4);
    if (in.gcount() == 0) break;
    if (in.gcount() != 4) throw PbfError("truncated blob length", offset);
    const std::uint32_t header_len = (std::uint32_t{len_be[0]} << 24) | (std::uint32_t{len_be[1]} << 16) |
                                     (std::uint32_t{len_be[2]} << 8) | std::uint32_t{len_be[3]};
    offset += 4;
    if (header_len == 0 || header_len > kMaxBlobHeaderSize)
      throw PbfError(fmt::format("implausible blob header size {}", header_len), offset - 4);

    header_buf.resize(header_len);
    if (!read_exact(in, reinterpret_cast<char*>(header_buf.data()), header_len))
      throw PbfError("truncated blob header", offset);

    std::string blob_type;
    std::uint64_t data_size = 0;
    bool have_size = false;
    {
      Reader r(header_buf, offset);
      std::uint32_t field;
      WireType type;
      while (r.next(field, type)) {
        if (field == 1 && type == proto::kLength) {
          blob_type = r.string();
        } else if (field == 3 && type == proto::kVarint) {
          data_size = r.varint();
          have_size = true;
        } else {
          r.skip(type);
        }
      }
      if (!have_size || blob_type.empty()) throw PbfError("blob header missing type or datasize", offset);
    }
    offset += header_len;
    if (data_size > kMaxBlobSize) throw PbfError("blob too large", offset);

    blob_buf.resize(data_size);
    if (!read_exact(in, reinterpret_cast<char*>(blob_buf.data()), data_size))
      throw PbfError("truncated blob", offset);

    const std::uint64_t blob_offset = offset;
    std::span<const std::uint8_t> payload;
    std::vector<std::uint8_t> inflated;
    std::uint64_t payload_base = blob_offset;
    bool compressed = false;
    {
      Reader r(blob_buf, blob_offset);
      std::uint32_t field;
      WireType type;
      std::uint64_t raw_size = 0;
      std::span<const std::uint8_t> zipped;
      bool have_zlib = false, have_raw = false;
      while (r.next(field, type)) {
        if (field == 1 && type == proto::kLength) {
          Reader raw = r.bytes();
          payload = raw.raw();
          payload_base = raw.offset();
          have_raw = true;
        } else if (field == 2 && type == proto::kVarint) {
          raw_size = r.varint();
        } else if (field == 3 && type == proto::kLength) {
          zipped = r.bytes().raw();
          have_zlib = true;
        } else if (field >= 4 && field <= 7) {
          throw PbfError("unsupported blob compression", r.offset());
        } else {
          r.skip(type);
        }
      }
      if (have_zlib) {
        inflated = inflate_blob(zipped, raw_size, blob_offset);
        payload = inflated;
        compressed = true;
      } else if (!have_raw) {
        throw PbfError("blob carries no data", blob_offset);
      }
    }
    offset += data_size;

    try {
      // Offsets inside compressed payloads have no file position; report the blob.
      Reader body(payload, compressed ? blob_offset : payload_base);
      if (blob_type == "OSMHeader") {
        read_header_block(body);
        seen_header = true;
      } else if (blob_type == "OSMData") {
        if (!seen_header) throw PbfError("OSMData before OSMHeader", blob_offset);
        read_primitive_block(body, sink);
      }
    } catch (const PbfError& err) {
      if (!compressed) throw;
      throw PbfError(fmt::format("in compressed blob: {}", err.what()), blob_offset);
    }
  }
}

std::vector<RawElement> parse_pbf(std::istream& in) {
  std::vector<RawElement> out;
  parse_pbf(in, [&](RawElement&& e) { out.push_back(std::move(e)); });
  return out;
}

std::vector<RawElement> read_pbf_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(fmt::format("cannot open '{}'", path));
  return parse_pbf(in);
}

}  // namespace geotile
