// Copyright (c) crosslink authors.
// Licensed under the Apache 2.0 License.
//
// Canonical TLV encoding (codec-v1). The byte layout is frozen in
// docs/wire.md; every serialized structure in the project goes through the
// Writer/Reader pair below.

#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "crosslink/bytes.hpp"

namespace crosslink {

class CodecError : public std::runtime_error {
 public:
  explicit CodecError(const std::string& what) : std::runtime_error("codec: " + what) {}
};

namespace detail {
inline void put_u32be(Bytes& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

inline std::uint32_t get_u32be(ByteView b) {
  return static_cast<std::uint32_t>(b[0]) << 24 | static_cast<std::uint32_t>(b[1]) << 16 |
         static_cast<std::uint32_t>(b[2]) << 8 | static_cast<std::uint32_t>(b[3]);
}
}  // namespace detail

// Emits fields in the order called; callers are responsible for ascending
// tag order (the strict Reader rejects anything else on the way back in).
class Writer {
 public:
  void field_bytes(std::uint8_t tag, ByteView value) {
    if (tag == 0) throw CodecError("tag 0 is reserved");
    if (value.size() > std::numeric_limits<std::uint32_t>::max())
      throw CodecError("field too large");
    out_.push_back(tag);
    detail::put_u32be(out_, static_cast<std::uint32_t>(value.size()));
    append(out_, value);
  }

  void field_string(std::uint8_t tag, std::string_view value) {
    field_bytes(tag, ByteView(reinterpret_cast<const std::uint8_t*>(value.data()), value.size()));
  }

  // Optional string: empty means absent.
  void field_string_opt(std::uint8_t tag, std::string_view value) {
    if (!value.empty()) field_string(tag, value);
  }

  void field_u64(std::uint8_t tag, std::uint64_t value) {
    std::uint8_t buf[8];
    for (int i = 7; i >= 0; --i) {
      buf[i] = static_cast<std::uint8_t>(value);
      value >>= 8;
    }
    field_bytes(tag, ByteView(buf, 8));
  }

  void field_u8(std::uint8_t tag, std::uint8_t value) { field_bytes(tag, ByteView(&value, 1)); }

  Bytes take() { return std::move(out_); }

 private:
  Bytes out_;
};

// Strict sequential reader. Field accessors must be called in schema tag
// order; the reader enforces non-decreasing tags on the wire, exact fixed
// sizes, and full consumption via finish().
class Reader {
 public:
  explicit Reader(ByteView data) : data_(data) {}

  bool has(std::uint8_t tag) {
    peek();
    return cur_tag_ && *cur_tag_ == tag;
  }

  ByteView bytes(std::uint8_t tag) {
    require(tag);
    return consume();
  }

  std::optional<ByteView> bytes_opt(std::uint8_t tag) {
    if (!has(tag)) return std::nullopt;
    ByteView v = consume();
    if (v.empty()) throw CodecError("present-but-empty optional field " + std::to_string(tag));
    return v;
  }

  std::string string(std::uint8_t tag) { return to_string(bytes(tag)); }

  std::string string_opt(std::uint8_t tag) {
    auto v = bytes_opt(tag);
    return v ? to_string(*v) : std::string();
  }

  ByteView fixed(std::uint8_t tag, std::size_t n) {
    ByteView v = bytes(tag);
    if (v.size() != n)
      throw CodecError("field " + std::to_string(tag) + ": expected " + std::to_string(n) +
                       " bytes, got " + std::to_string(v.size()));
    return v;
  }

  std::uint64_t u64(std::uint8_t tag) {
    ByteView v = fixed(tag, 8);
    std::uint64_t out = 0;
    for (auto b : v) out = out << 8 | b;
    return out;
  }

  std::uint8_t u8(std::uint8_t tag) { return fixed(tag, 1)[0]; }

  std::vector<ByteView> repeated(std::uint8_t tag) {
    std::vector<ByteView> out;
    while (has(tag)) out.push_back(consume());
    return out;
  }

  // Every byte must have been consumed and no unknown/out-of-order tags seen.
  void finish() {
    peek();
    if (cur_tag_) throw CodecError("unexpected field " + std::to_string(*cur_tag_));
    if (pos_ != data_.size()) throw CodecError("trailing bytes");
  }

 private:
  void require(std::uint8_t tag) {
    peek();
    if (!cur_tag_) throw CodecError("missing field " + std::to_string(tag));
    if (*cur_tag_ != tag)
      throw CodecError("expected field " + std::to_string(tag) + ", found " +
                       std::to_string(*cur_tag_));
  }

  void peek() {
    if (cur_tag_ || pos_ == data_.size()) return;
    if (data_.size() - pos_ < 5) throw CodecError("truncated field header");
    std::uint8_t tag = data_[pos_];
    if (tag == 0) throw CodecError("tag 0 is reserved");
    if (tag < last_tag_)
      throw CodecError("field " + std::to_string(tag) + " out of order");
    std::uint32_t len = detail::get_u32be(data_.subspan(pos_ + 1, 4));
    if (data_.size() - pos_ - 5 < len) throw CodecError("field overruns buffer");
    cur_tag_ = tag;
    cur_value_ = data_.subspan(pos_ + 5, len);
  }

  ByteView consume() {
    ByteView v = cur_value_;
    pos_ += 5 + v.size();
    last_tag_ = *cur_tag_;
    cur_tag_.reset();
    return v;
  }

  ByteView data_;
  std::size_t pos_ = 0;
  std::uint8_t last_tag_ = 0;
  std::optional<std::uint8_t> cur_tag_;
  ByteView cur_value_;
};

}  // namespace crosslink
