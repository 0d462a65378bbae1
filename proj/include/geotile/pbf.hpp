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

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "geotile/geo_core.hpp"
#include "geotile/types.hpp"

namespace geotile {

// OSM PBF reading and writing.
// https://wiki.openstreetmap.org/wiki/PBF_Format

struct RawMember {
  EntityKind type = EntityKind::way;
  std::int64_t ref = 0;
  std::string role;

  friend bool operator==(const RawMember&, const RawMember&) = default;
};

struct RawElement {
  std::int64_t id = 0;
  EntityKind kind = EntityKind::node;
  Tags tags;
  GeoPoint location;               // nodes only
  std::vector<std::int64_t> refs;  // ways only
  std::vector<RawMember> members;  // relations only

  friend bool operator==(const RawElement&, const RawElement&) = default;
};

/// Malformed input. `offset()` is the absolute byte offset in the file where
/// decoding failed.
class PbfError : public Error {
 public:
  PbfError(const std::string& what, std::uint64_t offset);
  std::uint64_t offset() const { return offset_; }

 private:
  std::uint64_t offset_;
};

using ElementSink = std::function<void(RawElement&&)>;

/// Streams every element of a PBF file into `sink`, in file order.
void parse_pbf(std::istream& in, const ElementSink& sink);

std::vector<RawElement> parse_pbf(std::istream& in);
std::vector<RawElement> read_pbf_file(const std::string& path);

/// Writes a minimal, standards-conforming PBF file: an OSMHeader blob then
/// zlib-compressed OSMData blobs using DenseNodes. Elements are buffered and
/// flushed in blocks; call finish() (or let the destructor do it).
class PbfWriter {
 public:
  explicit PbfWriter(std::ostream& out, std::size_t block_size = 8000);
  ~PbfWriter();

  PbfWriter(const PbfWriter&) = delete;
  PbfWriter& operator=(const PbfWriter&) = delete;

  void add(const RawElement& e);
  void finish();

 private:
  void write_header();
  void flush_block();
  void write_blob(std::string_view type, const std::string& payload);

  std::ostream& out_;
  std::size_t block_size_;
  bool header_written_ = false;
  bool finished_ = false;
  std::vector<RawElement> nodes_;
  std::vector<RawElement> ways_;
  std::vector<RawElement> relations_;
};

}  // namespace geotile
