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

// Minimal protobuf wire-format codec; just what the PBF container needs.
// https://protobuf.dev/programming-guides/encoding/

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

#include "geotile/pbf.hpp"

namespace geotile::proto {

enum WireType : std::uint32_t { kVarint = 0, kFixed64 = 1, kLength = 2, kFixed32 = 5 };

inline std::int64_t unzigzag(std::uint64_t v) {
  return static_cast<std::int64_t>(v >> 1) ^ -static_cast<std::int64_t>(v & 1);
}

inline std::uint64_t zigzag(std::int64_t v) {
  return (static_cast<std::uint64_t>(v) << 1) ^ static_cast<std::uint64_t>(v >> 63);
}

/// Bounds-checked reader over one message. `base` is the absolute file offset
/// of data[0], used only for error reporting.
class Reader {
 public:
  Reader(std::span<const std::uint8_t> data, std::uint64_t base) : data_(data), base_(base) {}

  bool done() const { return pos_ >= data_.size(); }
  std::uint64_t offset() const { return base_ + pos_; }

  std::uint64_t varint() {
    std::uint64_t v = 0;
    for (unsigned shift = 0; shift < 64; shift += 7) {
      if (pos_ >= data_.size()) fail("truncated varint");
      const std::uint8_t c = data_[pos_++];
      v |= static_cast<std::uint64_t>(c & 0x7f) << shift;
      if (!(c & 0x80)) return v;
    }
    fail("varint too long");
  }

  std::int64_t svarint() { return unzigzag(varint()); }

  /// Reads a field key. Returns false at end of message.
  bool next(std::uint32_t& field, WireType& type) {
    if (done()) return false;
    const std::uint64_t key = varint();
    field = static_cast<std::uint32_t>(key >> 3);
    type = static_cast<WireType>(key & 7);
    if (field == 0) fail("field number 0");
    return true;
  }

  Reader bytes() {
    const std::uint64_t len = varint();
    if (len > data_.size() - pos_) fail("length-delimited field overruns message");
    Reader sub(data_.subspan(pos_, len), base_ + pos_);
    pos_ += len;
    return sub;
  }

  std::string_view string() {
    Reader sub = bytes();
    return {reinterpret_cast<const char*>(sub.data_.data()), sub.data_.size()};
  }

  std::span<const std::uint8_t> raw() const { return data_; }

  void skip(WireType type) {
    switch (type) {
      case kVarint:
        varint();
        return;
      case kFixed64:
        advance(8);
        return;
      case kLength:
        bytes();
        return;
      case kFixed32:
        advance(4);
        return;
    }
    fail("unsupported wire type");
  }

  [[noreturn]] void fail(const std::string& what) const { throw PbfError(what, offset()); }

 private:
  void advance(std::size_t n) {
    if (n > data_.size() - pos_) fail("truncated fixed-width field");
    pos_ += n;
  }

  std::span<const std::uint8_t> data_;
  std::uint64_t base_;
  std::size_t pos_ = 0;
};

class Writer {
 public:
  void varint(std::uint64_t v) {
    while (v >= 0x80) {
      buf_.push_back(static_cast<char>((v & 0x7f) | 0x80));
      v >>= 7;
    }
    buf_.push_back(static_cast<char>(v));
  }

  void key(std::uint32_t field, WireType type) { varint((std::uint64_t{field} << 3) | type); }

  void field_varint(std::uint32_t field, std::uint64_t v) {
    key(field, kVarint);
    varint(v);
  }

  void field_svarint(std::uint32_t field, std::int64_t v) { field_varint(field, zigzag(v)); }

  void field_bytes(std::uint32_t field, std::string_view bytes) {
    key(field, kLength);
    varint(bytes.size());
    buf_.append(bytes);
  }

  const std::string& str() const { return buf_; }
  std::string take() { return std::move(buf_); }

 private:
  std::string buf_;
};

}  // namespace geotile::proto
